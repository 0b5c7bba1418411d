//! Input-state specifications accepted by `--state`.
//!
//! * `basis:k`: the computational basis state `|k⟩`
//! * `equidistant:m`: the canonical equidistant state `|φ_m⟩`
//! * `mixed:maximal`: `I/N`, simulated as the average over basis inputs
//! * `random:SEED` / `random-mixed:SEED`: seeded Haar pure or Hilbert-Schmidt mixed
//! * an inline amplitude list such as `0.6,0.8i` or `0.5+0.5i,0.5-0.5i`
//! * a path to a JSON file holding `{"amplitudes": [[re, im], …]}` or
//!   `{"density_matrix": {"re": [[…]], "im": [[…]]}}`

use std::fs;

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::Deserialize;
use tomodit_core::equidistant::equidistant_state;
use tomodit_core::random::{random_density_matrix, random_pure_state};
use tomodit_core::state::DensityMatrix;
use tomodit_core::{CVector, Complex64};

use crate::error::{CliError, CliResult};
use crate::formats::ComplexMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum InputState {
    Pure(CVector),
    Mixed(DensityMatrix),
}

impl InputState {
    pub fn density_matrix(&self) -> CliResult<DensityMatrix> {
        match self {
            InputState::Pure(psi) => Ok(DensityMatrix::pure(psi)?),
            InputState::Mixed(rho) => Ok(rho.clone()),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            InputState::Pure(psi) => psi.len(),
            InputState::Mixed(rho) => rho.dimension(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    amplitudes: Option<Vec<[f64; 2]>>,
    density_matrix: Option<ComplexMatrix>,
}

fn index_arg(arg: &str, n: usize, what: &str) -> CliResult<usize> {
    let k: usize = arg.parse().map_err(|_| {
        CliError::bad_input(format!(
            "{what} index must be a nonnegative integer, got {arg:?}"
        ))
    })?;
    if k >= n {
        return Err(CliError::bad_input(format!(
            "{what} index {k} out of range for N = {n}"
        )));
    }
    Ok(k)
}

fn seed_arg(arg: &str) -> CliResult<u64> {
    arg.parse()
        .map_err(|_| CliError::bad_input(format!("seed must be a 64-bit integer, got {arg:?}")))
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also `j` for the imaginary unit).
pub fn parse_complex(token: &str) -> CliResult<Complex64> {
    let bad = || CliError::bad_input(format!("cannot parse amplitude {token:?}"));
    let s: String = token.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(bad());
    }
    let num = |t: &str| -> CliResult<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) else {
        return Ok(Complex64::new(s.parse::<f64>().map_err(|_| bad())?, 0.0));
    };
    // split at the last sign that is neither leading nor part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => Ok(Complex64::new(
            body[..i].parse::<f64>().map_err(|_| bad())?,
            num(&body[i..])?,
        )),
        None => Ok(Complex64::new(0.0, num(body)?)),
    }
}

pub fn parse_state(spec: &str, n: usize) -> CliResult<InputState> {
    let spec = spec.trim();
    if let Some(arg) = spec.strip_prefix("basis:") {
        let k = index_arg(arg, n, "basis")?;
        return Ok(InputState::Pure(CVector::from_fn(n, |i, _| {
            Complex64::new(if i == k { 1.0 } else { 0.0 }, 0.0)
        })));
    }
    if let Some(arg) = spec.strip_prefix("equidistant:") {
        let m = index_arg(arg, n, "equidistant")?;
        return Ok(InputState::Pure(equidistant_state(m, n)?));
    }
    if let Some(arg) = spec.strip_prefix("mixed:") {
        return match arg {
            "maximal" => Ok(InputState::Mixed(DensityMatrix::maximally_mixed(n))),
            _ => Err(CliError::bad_input(format!("unknown mixed preset {arg:?}"))),
        };
    }
    if let Some(arg) = spec.strip_prefix("random:") {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_arg(arg)?);
        return Ok(InputState::Pure(random_pure_state(n, &mut rng)));
    }
    if let Some(arg) = spec.strip_prefix("random-mixed:") {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_arg(arg)?);
        return Ok(InputState::Mixed(random_density_matrix(n, &mut rng)));
    }
    let looks_inline = spec.contains(',') || parse_complex(spec).is_ok();
    let state = if looks_inline {
        let amps = spec
            .split(',')
            .map(parse_complex)
            .collect::<CliResult<Vec<_>>>()?;
        InputState::Pure(CVector::from_vec(amps))
    } else {
        let text = fs::read_to_string(spec).map_err(|e| {
            CliError::bad_input(format!(
                "state {spec:?} is neither a preset nor a readable file: {e}"
            ))
        })?;
        let file: StateFile = serde_json::from_str(&text)?;
        match (file.amplitudes, file.density_matrix) {
            (Some(a), None) => InputState::Pure(CVector::from_iterator(
                a.len(),
                a.iter().map(|&[re, im]| Complex64::new(re, im)),
            )),
            (None, Some(m)) => InputState::Mixed(DensityMatrix::new(m.to_matrix()?)?),
            _ => {
                return Err(CliError::bad_input(
                    "state file needs exactly one of `amplitudes` or `density_matrix`",
                ));
            }
        }
    };
    if state.dimension() != n {
        return Err(CliError::bad_input(format!(
            "state has dimension {} but the circuit has N = {n}",
            state.dimension()
        )));
    }
    if let InputState::Pure(psi) = &state {
        DensityMatrix::pure(psi)?;
    }
    Ok(state)
}
