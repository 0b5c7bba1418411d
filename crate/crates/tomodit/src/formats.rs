//! JSON payloads: circuit netlists, measurement records and reconstructions.

use serde::{Deserialize, Serialize};
use tomodit_core::circuit::{CircuitElement, CircuitLayout, ElementKind, ModeCoordinate, Stage};
use tomodit_core::{CMatrix, Complex64};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: &str = "1";
pub const MODE_INDEX_RULE: &str = "m*N + l";
/// Accepted `|t + r - 1|` when reading splitters.
pub const SPLIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub t: Option<f64>,
    pub r: Option<f64>,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coord {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub stage: String,
    pub depth: usize,
    pub kind: String,
    pub modes: Vec<usize>,
    pub params: Params,
    pub coord: Coord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitFile {
    pub schema_version: String,
    pub dimension: usize,
    pub mode_index_rule: String,
    pub elements: Vec<ElementRecord>,
    pub port_map: Vec<usize>,
}

impl CircuitFile {
    pub fn from_layout(layout: &CircuitLayout) -> Self {
        let n = layout.dimension();
        let elements = layout
            .elements()
            .iter()
            .map(|e| {
                let c = ModeCoordinate::from_flat(e.mode, n);
                let (t, r) = match e.kind {
                    ElementKind::Splitter { t, .. } => (Some(t), Some(1.0 - t)),
                    ElementKind::Crossing => (Some(1.0), Some(0.0)),
                    ElementKind::Phase { .. } => (None, None),
                };
                ElementRecord {
                    stage: e.stage.name().to_owned(),
                    depth: e.depth,
                    kind: e.kind.name().to_owned(),
                    modes: std::iter::once(e.mode).chain(e.partner).collect(),
                    params: Params {
                        t,
                        r,
                        phase_rad: e.phase_value(),
                    },
                    coord: Coord {
                        x: e.depth,
                        y: c.layer,
                        z: c.sector,
                    },
                }
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION.to_owned(),
            dimension: n,
            mode_index_rule: MODE_INDEX_RULE.to_owned(),
            elements,
            port_map: layout.port_map().to_vec(),
        }
    }

    pub fn to_layout(&self) -> CliResult<CircuitLayout> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::bad_input(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.mode_index_rule != MODE_INDEX_RULE {
            return Err(CliError::bad_input(format!(
                "unsupported mode_index_rule {}",
                self.mode_index_rule
            )));
        }
        let elements = self
            .elements
            .iter()
            .enumerate()
            .map(|(i, r)| element_from_record(i, r))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(CircuitLayout::from_parts(
            self.dimension,
            elements,
            self.port_map.clone(),
        )?)
    }
}

fn element_from_record(i: usize, rec: &ElementRecord) -> CliResult<CircuitElement> {
    let bad = |what: &str| CliError::bad_input(format!("element {i}: {what}"));
    let stage = Stage::from_name(&rec.stage).ok_or_else(|| bad("unknown stage"))?;
    let kind = match rec.kind.as_str() {
        "splitter" => {
            let (t, r) = rec
                .params
                .t
                .zip(rec.params.r)
                .ok_or_else(|| bad("splitter needs t and r"))?;
            if (t + r - 1.0).abs() > SPLIT_TOL {
                return Err(bad("t + r must equal 1"));
            }
            ElementKind::Splitter {
                t,
                phase: rec.params.phase_rad,
            }
        }
        "crossing" => ElementKind::Crossing,
        "phase" => ElementKind::Phase {
            phase: rec.params.phase_rad,
        },
        _ => return Err(bad("unknown kind")),
    };
    let want = if matches!(kind, ElementKind::Phase { .. }) {
        1
    } else {
        2
    };
    if rec.modes.len() != want {
        return Err(bad("wrong number of modes"));
    }
    Ok(CircuitElement {
        stage,
        depth: rec.depth,
        kind,
        mode: rec.modes[0],
        partner: rec.modes.get(1).copied(),
    })
}

/// Complex matrix as separate real and imaginary row arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ComplexMatrix {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> CliResult<CMatrix> {
        let n = self.re.len();
        let square = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if n == 0 || !square(&self.re) || !square(&self.im) {
            return Err(CliError::bad_input(
                "matrix must be square with matching re/im parts",
            ));
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(self.re[i][j], self.im[i][j])
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Exact,
    Counts,
}

/// Output of `simulate`: one measurement round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFile {
    pub dimension: usize,
    pub kind: RecordKind,
    /// Name of the unitary applied before the circuit, if any.
    pub pre_op: Option<String>,
    /// Output port → POVM index.
    pub port_map: Vec<usize>,
    /// Exact per-port probabilities (`kind = exact`).
    pub port_probs: Option<Vec<f64>>,
    pub loss_probability: Option<f64>,
    /// Sampled per-port counts (`kind = counts`).
    pub counts: Option<Vec<u64>>,
    pub lost: Option<u64>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
}

impl MeasurementFile {
    /// Detected-outcome frequencies in POVM order (`m·N + l`).
    pub fn povm_frequencies(&self) -> CliResult<Vec<f64>> {
        let n2 = self.dimension * self.dimension;
        let by_port: Vec<f64> = match self.kind {
            RecordKind::Exact => self
                .port_probs
                .clone()
                .ok_or_else(|| CliError::bad_input("exact record without port_probs"))?,
            RecordKind::Counts => self
                .counts
                .as_ref()
                .ok_or_else(|| CliError::bad_input("counts record without counts"))?
                .iter()
                .map(|&c| c as f64)
                .collect(),
        };
        if by_port.len() != n2 || self.port_map.len() != n2 {
            return Err(CliError::bad_input(format!("record must have {n2} ports")));
        }
        let total: f64 = by_port.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(CliError::bad_input("record has no detected events"));
        }
        let mut out = vec![0.0; n2];
        for (port, &q) in self.port_map.iter().enumerate() {
            if q >= n2 {
                return Err(CliError::bad_input("port_map entry out of range"));
            }
            out[q] = by_port[port] / total;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub fidelity: f64,
    pub trace_distance: f64,
    pub frobenius_error: f64,
}

/// Output of `tomography`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionFile {
    pub dimension: usize,
    pub rho_hat: ComplexMatrix,
    pub residual: f64,
    pub condition_number: f64,
    pub outcomes_used: usize,
    pub physical_projection_applied: bool,
    /// Against the state named in the input records' manifests, when known.
    pub metrics: Option<Metrics>,
}
