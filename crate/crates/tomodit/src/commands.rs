//! The pipeline behind each subcommand.
//!
//! A command first writes down its [`RunManifest`]; the payload is then
//! computed from the manifest alone, which is what makes `replay` possible.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tomodit_core::circuit::{
    CircuitLayout, assemble_circuit, calibrate_port_map, comparison_table, element_counts,
    optical_depth,
};
use tomodit_core::equidistant::shift_apply;
use tomodit_core::povm::build_povm;
use tomodit_core::simulator::{
    LossModel, loss_sweep, output_distribution, output_distribution_mixed, sample_counts,
};
use tomodit_core::state::DensityMatrix;
use tomodit_core::tomography::{
    ReconstructOptions, Round, phase_gate, plan_even_fix, project_physical, reconstruct_rounds,
    state_metrics,
};
use tomodit_core::{CMatrix, Error as CoreError, linalg::frobenius};

use crate::error::{CliError, CliResult};
use crate::formats::{
    CircuitFile, ComplexMatrix, MeasurementFile, Metrics, ReconstructionFile, RecordKind,
};
use crate::manifest::{Document, InputRef, RunManifest, payload_hash, sha256_hex};
use crate::report::{complexity_csv, fidelity_csv};
use crate::state_spec::{InputState, parse_state};

/// Loss grid of the `report --loss-sweep` tables, in dB per element.
pub fn sweep_grid() -> Vec<f64> {
    (0..=12).map(|k| k as f64 * 0.25).collect()
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn check_dimension(n: usize) -> CliResult<()> {
    if n < 3 {
        return Err(CliError::usage(format!(
            "--dim must be at least 3, got {n}"
        )));
    }
    Ok(())
}

fn input_ref<P: Serialize + serde::de::DeserializeOwned>(
    path: &Path,
) -> CliResult<(InputRef, Document<P>)> {
    let doc = Document::<P>::read(path)?;
    let r = InputRef {
        path: path_string(path),
        payload_sha256: doc.manifest.payload_sha256.clone(),
    };
    Ok((r, doc))
}

/// Reads a recorded input and checks it still has the recorded hash.
fn read_input<P: Serialize + serde::de::DeserializeOwned>(r: &InputRef) -> CliResult<Document<P>> {
    let doc = Document::<P>::read(Path::new(&r.path))?;
    if doc.manifest.payload_sha256 != r.payload_sha256 {
        return Err(CliError::bad_input(format!(
            "input {} changed since the run was recorded",
            r.path
        )));
    }
    Ok(doc)
}

/// Result of one command: what was written and a human-readable summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub summary: String,
    pub payload_sha256: String,
}

// ---------------------------------------------------------------- synthesize

pub fn synthesize_manifest(dim: usize) -> CliResult<RunManifest> {
    check_dimension(dim)?;
    Ok(RunManifest::new("synthesize", dim))
}

pub fn synthesize_payload(m: &RunManifest) -> CliResult<CircuitFile> {
    check_dimension(m.dimension)?;
    Ok(CircuitFile::from_layout(&assemble_circuit(m.dimension)?))
}

pub fn synthesize_summary(n: usize) -> CliResult<String> {
    let c = element_counts(n)?;
    let d = optical_depth(n)?;
    Ok(format!(
        "N = {n}\n\
         part1 (decomposition) splitters: {}\n\
         part2 (permutation) crossings: {} (closed form {}, layer-0 routing {})\n\
         part3 (fourier) splitters: {}\n\
         total elements: {} (closed form {}, delta {})\n\
         optical depth: measured {} (closed form {})\n",
        c.part1,
        c.part2,
        c.part2_closed_form,
        c.layer0_routing,
        c.part3,
        c.total,
        c.closed_form,
        c.delta(),
        d.measured,
        d.closed_form
    ))
}

pub fn synthesize(dim: usize, out: &Path) -> CliResult<Outcome> {
    let mut m = synthesize_manifest(dim)?;
    let payload = synthesize_payload(&m)?;
    m.outputs = vec![path_string(out)];
    let doc = Document::new(m, payload)?;
    doc.write(out)?;
    Ok(Outcome {
        written: vec![out.to_path_buf()],
        summary: synthesize_summary(dim)?,
        payload_sha256: doc.manifest.payload_sha256,
    })
}

// ---------------------------------------------------------------- pre-ops

/// Resolves a pre-rotation name to its canonical form and matrix.
/// Accepted: `none`, `plan` (the even-N plan), `phase:q`, `shift:s;phase:q`.
pub fn resolve_pre_op(name: &str, n: usize) -> CliResult<Option<(String, CMatrix)>> {
    let bad = || {
        CliError::bad_input(format!(
            "unknown --pre-op {name:?} (use none, plan, phase:q or shift:s;phase:q)"
        ))
    };
    match name {
        "none" | "" => return Ok(None),
        "plan" => {
            if n % 2 == 1 {
                return Err(CliError::protocol(format!(
                    "--pre-op plan applies to even N only (N = {n})"
                )));
            }
            let plan = plan_even_fix(n)?;
            let canonical = if plan.shift == 0 {
                format!("phase:{}", plan.q)
            } else {
                format!("shift:{};phase:{}", plan.shift, plan.q)
            };
            return Ok(Some((canonical, plan.pre_op)));
        }
        _ => {}
    }
    let (shift, phase) = match name.split_once(';') {
        Some((s, p)) => (s.strip_prefix("shift:").ok_or_else(bad)?, p),
        None => ("0", name),
    };
    let q: usize = phase
        .strip_prefix("phase:")
        .ok_or_else(bad)?
        .parse()
        .map_err(|_| bad())?;
    let s: usize = shift.parse().map_err(|_| bad())?;
    let mut v = phase_gate(n, q);
    if !s.is_multiple_of(n) {
        let mut shifted = v.clone();
        for k in 0..n {
            shifted.set_column(k, &shift_apply(&v.column(k).into_owned(), s as i64));
        }
        v = shifted;
    }
    let canonical = if s.is_multiple_of(n) {
        format!("phase:{q}")
    } else {
        format!("shift:{};phase:{q}", s % n)
    };
    Ok(Some((canonical, v)))
}

fn rotate(state: &InputState, v: &CMatrix) -> InputState {
    match state {
        InputState::Pure(psi) => InputState::Pure(v * psi),
        InputState::Mixed(rho) => InputState::Mixed(
            DensityMatrix::new(v * rho.matrix() * v.adjoint())
                .expect("unitary conjugation keeps a valid state"),
        ),
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub circuit: PathBuf,
    pub state: String,
    pub shots: Option<u64>,
    pub seed: u64,
    pub loss_db: Option<f64>,
    pub exact: bool,
    pub pre_op: Option<String>,
}

pub fn simulate_manifest(args: &SimulateArgs) -> CliResult<RunManifest> {
    let (input, doc) = input_ref::<CircuitFile>(&args.circuit)?;
    let n = doc.payload.dimension;
    let mut m = RunManifest::new("simulate", n);
    m.inputs = vec![input];
    m.input_state = Some(args.state.clone());
    if let Some(db) = args.loss_db {
        if db.is_nan() || db < 0.0 {
            return Err(CliError::usage("--loss-db must be nonnegative"));
        }
        m.loss_db = Some(db);
    }
    if !args.exact
        && let Some(shots) = args.shots
    {
        if shots == 0 {
            return Err(CliError::usage("--shots must be positive"));
        }
        m.shots = Some(shots);
        m.seed = Some(args.seed);
    }
    if let Some(name) = &args.pre_op {
        m.pre_op = resolve_pre_op(name, n)?.map(|(c, _)| c);
    }
    Ok(m)
}

fn checked_layout(file: &CircuitFile) -> CliResult<CircuitLayout> {
    let layout = file.to_layout()?;
    let povm = build_povm(layout.dimension())?;
    let calibrated = calibrate_port_map(&layout.input_transfer(), &povm)?;
    if calibrated != layout.port_map() {
        return Err(CliError::bad_input(
            "circuit port_map disagrees with its elements",
        ));
    }
    Ok(layout)
}

pub fn simulate_payload(m: &RunManifest) -> CliResult<MeasurementFile> {
    let circuit = read_input::<CircuitFile>(
        m.inputs
            .first()
            .ok_or_else(|| CliError::bad_input("manifest lacks the circuit input"))?,
    )?;
    let layout = checked_layout(&circuit.payload)?;
    let n = layout.dimension();
    let spec = m
        .input_state
        .as_deref()
        .ok_or_else(|| CliError::usage("--state is required"))?;
    let mut state = parse_state(spec, n)?;
    if let Some(name) = &m.pre_op
        && let Some((_, v)) = resolve_pre_op(name, n)?
    {
        state = rotate(&state, &v);
    }
    let loss = m.loss_db.map(LossModel::new).transpose()?;
    let dist = match &state {
        InputState::Pure(psi) => output_distribution(&layout, psi, loss.as_ref())?,
        InputState::Mixed(rho) => output_distribution_mixed(&layout, rho, loss.as_ref())?,
    };
    let base = MeasurementFile {
        dimension: n,
        kind: RecordKind::Exact,
        pre_op: m.pre_op.clone(),
        port_map: layout.port_map().to_vec(),
        port_probs: None,
        loss_probability: None,
        counts: None,
        lost: None,
        shots: None,
        seed: None,
    };
    Ok(match m.shots {
        None => MeasurementFile {
            port_probs: Some(dist.port_probs.clone()),
            loss_probability: Some(dist.loss),
            ..base
        },
        Some(shots) => {
            let seed = m.seed.unwrap_or(0);
            let rec = sample_counts(&dist, shots, seed)?;
            MeasurementFile {
                kind: RecordKind::Counts,
                counts: Some(rec.counts),
                lost: Some(rec.lost),
                shots: Some(shots),
                seed: Some(seed),
                ..base
            }
        }
    })
}

pub fn simulate(args: &SimulateArgs, out: &Path) -> CliResult<Outcome> {
    let mut m = simulate_manifest(args)?;
    let payload = simulate_payload(&m)?;
    m.outputs = vec![path_string(out)];
    let summary = match payload.kind {
        RecordKind::Exact => format!(
            "exact distribution over {} ports, loss probability {:.6}\n",
            payload.port_map.len(),
            payload.loss_probability.unwrap_or(0.0)
        ),
        RecordKind::Counts => format!(
            "{} shots (seed {}), {} detected, {} lost\n",
            payload.shots.unwrap_or(0),
            payload.seed.unwrap_or(0),
            payload.counts.as_ref().map_or(0, |c| c.iter().sum::<u64>()),
            payload.lost.unwrap_or(0)
        ),
    };
    let doc = Document::new(m, payload)?;
    doc.write(out)?;
    Ok(Outcome {
        written: vec![out.to_path_buf()],
        summary,
        payload_sha256: doc.manifest.payload_sha256,
    })
}

// ---------------------------------------------------------------- tomography

pub fn tomography_manifest(records: &[PathBuf], dim: Option<usize>) -> CliResult<RunManifest> {
    if records.is_empty() {
        return Err(CliError::usage(
            "tomography needs at least one measurement record",
        ));
    }
    let mut inputs = Vec::new();
    let mut n = None;
    for p in records {
        let (r, doc) = input_ref::<MeasurementFile>(p)?;
        if *n.get_or_insert(doc.payload.dimension) != doc.payload.dimension {
            return Err(CliError::bad_input("records have different dimensions"));
        }
        inputs.push(r);
    }
    let n = n.expect("at least one record");
    if let Some(d) = dim
        && d != n
    {
        return Err(CliError::bad_input(format!(
            "--dim {d} but the records have N = {n}"
        )));
    }
    let mut m = RunManifest::new("tomography", n);
    m.inputs = inputs;
    Ok(m)
}

pub fn tomography_payload(m: &RunManifest) -> CliResult<ReconstructionFile> {
    let n = m.dimension;
    check_dimension(n)?;
    let docs = m
        .inputs
        .iter()
        .map(read_input::<MeasurementFile>)
        .collect::<CliResult<Vec<_>>>()?;
    let mut rounds = Vec::new();
    let mut project = false;
    for doc in &docs {
        let rec = &doc.payload;
        if rec.dimension != n {
            return Err(CliError::bad_input("record dimension does not match"));
        }
        project |= rec.kind == RecordKind::Counts;
        let pre_op = match &rec.pre_op {
            None => None,
            Some(name) => resolve_pre_op(name, n)?.map(|(_, v)| v),
        };
        rounds.push(Round {
            pre_op,
            probabilities: rec.povm_frequencies()?,
        });
    }
    if n.is_multiple_of(2) {
        let plain = rounds.iter().any(|r| r.pre_op.is_none());
        let rotated = rounds.iter().any(|r| r.pre_op.is_some());
        if !(plain && rotated) {
            return Err(CliError::protocol(format!(
                "even N = {n}: a single POVM round cannot determine Im ρ_rs; supply a plain record and a record simulated with --pre-op plan"
            )));
        }
    }
    let opts = ReconstructOptions {
        project,
        ..Default::default()
    };
    let result = match reconstruct_rounds(n, &rounds, &opts) {
        Err(CoreError::RankDeficient { rank, needed }) if n.is_multiple_of(2) => {
            return Err(CliError::protocol(format!(
                "even N = {n}: the supplied rounds reach rank {rank} < {needed}; use --pre-op plan for the second round"
            )));
        }
        r => r?,
    };
    let specs: Vec<Option<&String>> = docs
        .iter()
        .map(|d| d.manifest.input_state.as_ref())
        .collect();
    let metrics = match specs.first() {
        Some(Some(spec)) if specs.iter().all(|s| *s == Some(*spec)) => {
            let truth = parse_state(spec, n)?.density_matrix()?;
            let estimate = result
                .density_matrix()
                .unwrap_or_else(|_| project_physical(&result.rho_hat));
            let sm = state_metrics(&truth, &estimate)?;
            Some(Metrics {
                fidelity: sm.fidelity,
                trace_distance: sm.trace_distance,
                frobenius_error: frobenius(&(&result.rho_hat - truth.matrix())),
            })
        }
        _ => None,
    };
    Ok(ReconstructionFile {
        dimension: n,
        rho_hat: ComplexMatrix::from_matrix(&result.rho_hat),
        residual: result.residual,
        condition_number: result.condition_number,
        outcomes_used: result.outcomes_used,
        physical_projection_applied: result.physical_projection_applied,
        metrics,
    })
}

pub fn tomography(records: &[PathBuf], dim: Option<usize>, out: &Path) -> CliResult<Outcome> {
    let mut m = tomography_manifest(records, dim)?;
    let payload = tomography_payload(&m)?;
    m.outputs = vec![path_string(out)];
    let mut summary = format!(
        "condition number {:.6}\noutcomes used {}\nresidual {:.3e}\nprojection applied {}\n",
        payload.condition_number,
        payload.outcomes_used,
        payload.residual,
        payload.physical_projection_applied
    );
    if let Some(mt) = &payload.metrics {
        summary.push_str(&format!(
            "fidelity {:.12}\ntrace distance {:.3e}\nfrobenius error {:.3e}\n",
            mt.fidelity, mt.trace_distance, mt.frobenius_error
        ));
    }
    let doc = Document::new(m, payload)?;
    doc.write(out)?;
    Ok(Outcome {
        written: vec![out.to_path_buf()],
        summary,
        payload_sha256: doc.manifest.payload_sha256,
    })
}

// ---------------------------------------------------------------- report

pub const COMPLEXITY_CSV: &str = "complexity.csv";
pub const FIDELITY_CSV: &str = "fidelity.csv";
pub const REPORT_MANIFEST: &str = "report.manifest.json";

/// Sidecar payload of `report`: the SHA-256 of every CSV written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPayload {
    pub files: Vec<FileHash>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub name: String,
    pub sha256: String,
}

pub fn report_manifest(dim_min: usize, dim_max: usize, loss_sweep: bool) -> CliResult<RunManifest> {
    check_dimension(dim_min)?;
    if dim_max < dim_min {
        return Err(CliError::usage("--dim-max must be at least --dim-min"));
    }
    let mut m = RunManifest::new("report", dim_min);
    m.dimension_max = Some(dim_max);
    m.loss_sweep = Some(loss_sweep);
    Ok(m)
}

/// CSV file names and contents.
pub fn report_tables(m: &RunManifest) -> CliResult<Vec<(String, String)>> {
    let lo = m.dimension;
    let hi = m.dimension_max.unwrap_or(lo);
    check_dimension(lo)?;
    let rows = (lo..=hi)
        .into_par_iter()
        .map(|n| comparison_table([n]).map(|mut v| v.remove(0)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = vec![(COMPLEXITY_CSV.to_owned(), complexity_csv(&rows)?)];
    if m.loss_sweep == Some(true) {
        let grid = sweep_grid();
        let curves = (lo..=hi)
            .into_par_iter()
            .map(|n| Ok((n, loss_sweep(&assemble_circuit(n)?, &grid, true)?)))
            .collect::<Result<Vec<_>, CoreError>>()?;
        out.push((FIDELITY_CSV.to_owned(), fidelity_csv(&curves)?));
    }
    Ok(out)
}

pub fn report_payload(tables: &[(String, String)]) -> ReportPayload {
    ReportPayload {
        files: tables
            .iter()
            .map(|(name, text)| FileHash {
                name: name.clone(),
                sha256: sha256_hex(text.as_bytes()),
            })
            .collect(),
    }
}

pub fn report(
    dim_min: usize,
    dim_max: usize,
    loss_sweep: bool,
    out_dir: &Path,
) -> CliResult<Outcome> {
    let mut m = report_manifest(dim_min, dim_max, loss_sweep)?;
    let tables = report_tables(&m)?;
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, text) in &tables {
        let p = out_dir.join(name);
        fs::write(&p, text)?;
        m.outputs.push(path_string(&p));
        written.push(p);
    }
    let sidecar = out_dir.join(REPORT_MANIFEST);
    let doc = Document::new(m, report_payload(&tables))?;
    doc.write(&sidecar)?;
    written.push(sidecar);
    let mut summary = String::new();
    for (name, text) in &tables {
        summary.push_str(&format!("{name}:\n{text}"));
    }
    Ok(Outcome {
        written,
        summary,
        payload_sha256: doc.manifest.payload_sha256,
    })
}

// ---------------------------------------------------------------- replay

/// Recomputes the payload of a result document from its manifest and
/// compares hashes.
pub fn replay(path: &Path) -> CliResult<Outcome> {
    let doc = Document::<serde_json::Value>::read(path)?;
    let m = &doc.manifest;
    let hash = match m.command.as_str() {
        "synthesize" => payload_hash(&synthesize_payload(m)?)?,
        "simulate" => payload_hash(&simulate_payload(m)?)?,
        "tomography" => payload_hash(&tomography_payload(m)?)?,
        "report" => payload_hash(&report_payload(&report_tables(m)?))?,
        other => {
            return Err(CliError::bad_input(format!(
                "unknown command {other:?} in manifest"
            )));
        }
    };
    if hash != m.payload_sha256 {
        return Err(CliError::numerical(format!(
            "replay produced payload {hash}, manifest records {}",
            m.payload_sha256
        )));
    }
    Ok(Outcome {
        written: Vec::new(),
        summary: format!("reproduced {} payload {hash}\n", m.command),
        payload_sha256: hash,
    })
}
