//! Linear-inversion tomography from POVM outcome probabilities.
//!
//! A density matrix is parameterized by N² reals: the diagonal entries
//! followed by `(Re ρ_rs, Im ρ_rs)` for every `r < s`. Each outcome
//! probability is a real-linear functional of that vector, so a measurement
//! round is a real matrix with one row per outcome. Reconstruction is a
//! least-squares solve through the SVD pseudo-inverse, which handles the square
//! odd-N system, noisy frequencies and the stacked two-round even-N system
//! alike.
//!
//! Even N: the single round is rank deficient (every `Im ρ_rs` with
//! `s - r = N/2` drops out, plus further directions). A second round measured
//! after a diagonal phase gate `V_q = diag(e^{iπ q k / N})` restores full rank;
//! [`plan_even_fix`] picks the first `q` that does and certifies it.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
#[allow(unused_imports)] // f64 math without std
use num_traits::Float;

use crate::equidistant::shift_apply;
use crate::error::{Error, Result};
use crate::linalg::{
    CMatrix, RANK_TOL, RMatrix, cis, frobenius, hermitian_eigen, hermitian_function, least_squares,
    singular_values, trace, unitarity_deviation,
};
use crate::povm::build_povm;
use crate::state::DensityMatrix;

/// Default accepted `|Σp - 1|` for measured frequencies.
pub const PROBABILITY_SUM_TOL: f64 = 1e-3;
/// Condition numbers above this are rejected as ill-conditioned.
pub const MAX_CONDITION: f64 = 1e8;

/// One real coordinate of a Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RealParameter {
    Diagonal(usize),
    /// `Re ρ_rs`, `r < s`.
    Re(usize, usize),
    /// `Im ρ_rs`, `r < s`.
    Im(usize, usize),
}

impl RealParameter {
    /// `min(|r - s|, N - |r - s|)`; 0 on the diagonal.
    pub fn difference_class(&self, n: usize) -> usize {
        match *self {
            RealParameter::Diagonal(_) => 0,
            RealParameter::Re(r, s) | RealParameter::Im(r, s) => (s - r).min(n - (s - r)),
        }
    }
}

pub fn parameter_layout(n: usize) -> Vec<RealParameter> {
    let mut out = Vec::with_capacity(n * n);
    out.extend((0..n).map(RealParameter::Diagonal));
    for r in 0..n {
        for s in r + 1..n {
            out.push(RealParameter::Re(r, s));
            out.push(RealParameter::Im(r, s));
        }
    }
    out
}

pub fn to_parameters(rho: &CMatrix) -> DVector<f64> {
    let n = rho.nrows();
    let layout = parameter_layout(n);
    DVector::from_iterator(
        layout.len(),
        layout.iter().map(|p| match *p {
            RealParameter::Diagonal(k) => rho[(k, k)].re,
            RealParameter::Re(r, s) => rho[(r, s)].re,
            RealParameter::Im(r, s) => rho[(r, s)].im,
        }),
    )
}

/// Hermitian matrix with the given real coordinates.
pub fn from_parameters(n: usize, x: &DVector<f64>) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for (p, &v) in parameter_layout(n).iter().zip(x.iter()) {
        match *p {
            RealParameter::Diagonal(k) => m[(k, k)] = Complex64::new(v, 0.0),
            RealParameter::Re(r, s) => {
                m[(r, s)].re = v;
                m[(s, r)].re = v;
            }
            RealParameter::Im(r, s) => {
                m[(r, s)].im = v;
                m[(s, r)].im = -v;
            }
        }
    }
    m
}

/// Identifies one row of a (possibly stacked) measurement map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutcomeLabel {
    pub round: usize,
    pub m: usize,
    pub l: usize,
}

/// Real matrix from the N² parameters of ρ to outcome probabilities.
#[derive(Debug, Clone)]
pub struct MeasurementMap {
    n: usize,
    matrix: RMatrix,
    labels: Vec<OutcomeLabel>,
    singular_values: Vec<f64>,
}

impl MeasurementMap {
    fn from_parts(n: usize, matrix: RMatrix, labels: Vec<OutcomeLabel>) -> Self {
        let singular_values = singular_values(&matrix);
        Self {
            n,
            matrix,
            labels,
            singular_values,
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    pub fn labels(&self) -> &[OutcomeLabel] {
        &self.labels
    }

    pub fn outcomes(&self) -> usize {
        self.labels.len()
    }

    /// Descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn rank(&self) -> usize {
        self.singular_values
            .iter()
            .filter(|&&s| s > RANK_TOL)
            .count()
    }

    /// Ratio of the largest to the smallest singular value (∞ when rank deficient).
    pub fn condition_number(&self) -> f64 {
        if self.rank() < self.n * self.n {
            return f64::INFINITY;
        }
        self.singular_values[0] / self.singular_values[self.n * self.n - 1]
    }

    /// Outcome probabilities predicted for `rho`.
    pub fn apply(&self, rho: &CMatrix) -> Vec<f64> {
        (&self.matrix * to_parameters(rho))
            .iter()
            .copied()
            .collect()
    }

    /// Rows of `self` followed by rows of `other` relabeled as round `round`.
    pub fn stack(&self, other: &MeasurementMap, round: usize) -> Result<MeasurementMap> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let rows = self.matrix.nrows() + other.matrix.nrows();
        let cols = self.matrix.ncols();
        let mut m = RMatrix::zeros(rows, cols);
        m.rows_mut(0, self.matrix.nrows()).copy_from(&self.matrix);
        m.rows_mut(self.matrix.nrows(), other.matrix.nrows())
            .copy_from(&other.matrix);
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().map(|l| OutcomeLabel { round, ..*l }));
        Ok(MeasurementMap::from_parts(self.n, m, labels))
    }
}

/// Row `(m, l)` encodes `ρ ↦ Tr(V ρ V† Ê_ml)`; `V` defaults to the identity.
pub fn measurement_map(n: usize, pre_op: Option<&CMatrix>) -> Result<MeasurementMap> {
    let povm = build_povm(n)?;
    if let Some(v) = pre_op {
        if v.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.nrows(),
            });
        }
        let dev = unitarity_deviation(v);
        if dev > 1e-10 {
            return Err(Error::NotUnitary(dev));
        }
    }
    let layout = parameter_layout(n);
    let mut a = RMatrix::zeros(n * n, n * n);
    let mut labels = Vec::with_capacity(n * n);
    for (row, e) in povm.elements().iter().enumerate() {
        let b = match pre_op {
            Some(v) => v.adjoint() * e * v,
            None => e.clone(),
        };
        for (col, p) in layout.iter().enumerate() {
            a[(row, col)] = match *p {
                RealParameter::Diagonal(k) => b[(k, k)].re,
                RealParameter::Re(r, s) => 2.0 * b[(s, r)].re,
                RealParameter::Im(r, s) => -2.0 * b[(s, r)].im,
            };
        }
        let (m, l) = povm.labels(row);
        labels.push(OutcomeLabel { round: 0, m, l });
    }
    Ok(MeasurementMap::from_parts(n, a, labels))
}

#[derive(Debug, Clone, Copy)]
pub struct ReconstructOptions {
    pub sum_tolerance: f64,
    pub project: bool,
    pub max_condition: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            sum_tolerance: PROBABILITY_SUM_TOL,
            project: false,
            max_condition: MAX_CONDITION,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// Hermitian, unit-trace estimate; positive semidefinite whenever
    /// `physical_projection_applied` is set.
    pub rho_hat: CMatrix,
    /// `‖A x̂ - p‖₂` of the least-squares solve.
    pub residual: f64,
    pub physical_projection_applied: bool,
    pub outcomes_used: usize,
    pub condition_number: f64,
}

impl ReconstructionResult {
    /// The estimate as a validated density matrix (fails if the raw linear
    /// inversion left it unphysical).
    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.rho_hat.clone())
    }
}

/// Checks a probability vector and rescales it to unit sum.
fn normalized(probs: &[f64], expected: usize, tolerance: f64) -> Result<Vec<f64>> {
    if probs.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: probs.len(),
        });
    }
    for (index, &value) in probs.iter().enumerate() {
        if !value.is_finite() || value < -1e-12 {
            return Err(Error::InvalidProbability { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tolerance {
        return Err(Error::ProbabilitySum { sum, tolerance });
    }
    Ok(probs.iter().map(|p| p / sum).collect())
}

fn solve(
    map: &MeasurementMap,
    probs: Vec<f64>,
    opts: &ReconstructOptions,
) -> Result<ReconstructionResult> {
    let n = map.dimension();
    let b = DVector::from_vec(probs);
    let ls = least_squares(map.matrix(), &b, RANK_TOL);
    if ls.rank < n * n {
        return Err(Error::RankDeficient {
            rank: ls.rank,
            needed: n * n,
        });
    }
    if ls.condition_number > opts.max_condition {
        return Err(Error::IllConditioned(ls.condition_number));
    }
    let raw = from_parameters(n, &ls.solution);
    let rho_hat = if opts.project {
        project_physical(&raw).into_matrix()
    } else {
        raw
    };
    Ok(ReconstructionResult {
        rho_hat,
        residual: ls.residual,
        physical_projection_applied: opts.project,
        outcomes_used: map.outcomes(),
        condition_number: ls.condition_number,
    })
}

/// Reconstructs ρ from the N² outcome probabilities of one round (odd N).
pub fn reconstruct_odd(
    n: usize,
    probabilities: &[f64],
    opts: &ReconstructOptions,
) -> Result<ReconstructionResult> {
    if n.is_multiple_of(2) {
        return Err(Error::Parity { n, expected: "odd" });
    }
    let probs = normalized(probabilities, n * n, opts.sum_tolerance)?;
    let map = measurement_map(n, None)?;
    solve(&map, probs, opts)
}

/// One measurement round: the optional unitary applied before the POVM and
/// its N² outcome probabilities (POVM order).
#[derive(Debug, Clone)]
pub struct Round {
    pub pre_op: Option<CMatrix>,
    pub probabilities: Vec<f64>,
}

/// Reconstructs ρ from any number of rounds by stacking their maps.
pub fn reconstruct_rounds(
    n: usize,
    rounds: &[Round],
    opts: &ReconstructOptions,
) -> Result<ReconstructionResult> {
    let mut stacked: Option<MeasurementMap> = None;
    let mut probs = Vec::with_capacity(rounds.len() * n * n);
    for (i, round) in rounds.iter().enumerate() {
        let map = measurement_map(n, round.pre_op.as_ref())?;
        probs.extend(normalized(&round.probabilities, n * n, opts.sum_tolerance)?);
        stacked = Some(match stacked {
            None => map,
            Some(acc) => acc.stack(&map, i)?,
        });
    }
    let map = stacked.ok_or(Error::DimensionMismatch {
        expected: n * n,
        got: 0,
    })?;
    solve(&map, probs, opts)
}

/// Second-round pre-rotation for even N and the certified stacked map.
#[derive(Debug, Clone)]
pub struct EvenPlan {
    pub n: usize,
    /// Phase-gate index `q` of `V_q = diag(e^{iπ q k / N})`.
    pub q: usize,
    /// Extra cyclic shift `X^shift` composed after the phase gate; 0 unless the
    /// plain phase-gate family failed.
    pub shift: usize,
    pub pre_op: CMatrix,
    pub stacked: MeasurementMap,
    pub single_round_rank: usize,
    /// Round-two outcome indices (`m·N + l`) picked greedily until full rank.
    pub minimal_second_round: Vec<usize>,
}

impl EvenPlan {
    /// `N²/2`, the size of the second round implied by `3N²/2` total outcomes.
    pub fn target_second_round(&self) -> usize {
        self.n * self.n / 2
    }

    /// Whether `N²/2` extra outcomes suffice for full rank.
    pub fn three_halves_count_suffices(&self) -> bool {
        self.minimal_second_round.len() <= self.target_second_round()
    }

    pub fn minimal_total_outcomes(&self) -> usize {
        self.n * self.n + self.minimal_second_round.len()
    }
}

/// `V_q = diag(e^{iπ q k / N})`.
pub fn phase_gate(n: usize, q: usize) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_fn(n, |k, _| {
        cis(PI * (q * k) as f64 / n as f64)
    }))
}

fn shift_matrix(n: usize, shift: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n {
        let col = CMatrix::identity(n, n).column(k).into_owned();
        m.set_column(k, &shift_apply(&col, shift as i64));
    }
    m
}

/// Greedy row selection: indices of `extra` rows that raise the rank of
/// `base` one at a time, stopping at full column rank.
fn greedy_completion(base: &RMatrix, extra: &RMatrix) -> Vec<usize> {
    let cols = base.ncols();
    // orthonormal basis of the current row space
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let absorb = |row: DVector<f64>, basis: &mut Vec<DVector<f64>>| -> bool {
        let scale = row.norm();
        if scale == 0.0 {
            return false;
        }
        let mut r = row;
        for _ in 0..2 {
            for b in basis.iter() {
                let c = b.dot(&r);
                r -= b * c;
            }
        }
        let rn = r.norm();
        if rn > RANK_TOL * scale.max(1.0) {
            basis.push(r / rn);
            true
        } else {
            false
        }
    };
    for i in 0..base.nrows() {
        absorb(base.row(i).transpose(), &mut basis);
    }
    let mut picked = Vec::new();
    for i in 0..extra.nrows() {
        if basis.len() == cols {
            break;
        }
        if absorb(extra.row(i).transpose(), &mut basis) {
            picked.push(i);
        }
    }
    picked
}

pub fn plan_even_fix(n: usize) -> Result<EvenPlan> {
    if n % 2 == 1 {
        return Err(Error::Parity {
            n,
            expected: "even",
        });
    }
    if n < 4 {
        return Err(Error::DimensionTooSmall { got: n, min: 4 });
    }
    let first = measurement_map(n, None)?;
    let candidates = (1..2 * n)
        .map(|q| (q, 0))
        .chain((1..n).flat_map(|s| (0..2 * n).map(move |q| (q, s))));
    for (q, shift) in candidates {
        let v = if shift == 0 {
            phase_gate(n, q)
        } else {
            shift_matrix(n, shift) * phase_gate(n, q)
        };
        let second = measurement_map(n, Some(&v))?;
        let stacked = first.stack(&second, 1)?;
        if stacked.rank() == n * n {
            let minimal_second_round = greedy_completion(first.matrix(), second.matrix());
            return Ok(EvenPlan {
                n,
                q,
                shift,
                pre_op: v,
                single_round_rank: first.rank(),
                stacked,
                minimal_second_round,
            });
        }
    }
    Err(Error::RankDeficient {
        rank: first.rank(),
        needed: n * n,
    })
}

/// Reconstructs ρ (even N) from the plain round and the round measured after
/// the pre-rotation selected by [`plan_even_fix`].
pub fn reconstruct_even(
    n: usize,
    round1: &[f64],
    round2: &[f64],
    opts: &ReconstructOptions,
) -> Result<ReconstructionResult> {
    let plan = plan_even_fix(n)?;
    reconstruct_with_plan(&plan, round1, round2, opts)
}

pub fn reconstruct_with_plan(
    plan: &EvenPlan,
    round1: &[f64],
    round2: &[f64],
    opts: &ReconstructOptions,
) -> Result<ReconstructionResult> {
    let n = plan.n;
    let mut probs = normalized(round1, n * n, opts.sum_tolerance)?;
    probs.extend(normalized(round2, n * n, opts.sum_tolerance)?);
    solve(&plan.stacked, probs, opts)
}

/// Closest unit-trace positive semidefinite matrix in Frobenius norm: the
/// eigenvalues are projected onto the probability simplex (clip negatives,
/// spread the excess uniformly over the rest) and the eigenvectors kept.
pub fn project_physical(raw: &CMatrix) -> DensityMatrix {
    let n = raw.nrows();
    let (values, vectors) = hermitian_eigen(raw);
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut tau = 0.0;
    let mut prefix = 0.0;
    for (k, &mu) in sorted.iter().enumerate() {
        prefix += mu;
        let t = (prefix - 1.0) / (k + 1) as f64;
        if mu - t > 0.0 {
            tau = t;
        }
    }
    let mut m = CMatrix::zeros(n, n);
    for (j, &lam) in values.iter().enumerate() {
        let w = (lam - tau).max(0.0);
        if w > 0.0 {
            let v = vectors.column(j);
            m += (v * v.adjoint()).scale(w);
        }
    }
    // exact unit trace after round-off
    let tr = trace(&m).re;
    DensityMatrix::new(m.unscale(tr)).expect("simplex projection yields a valid state")
}

/// Eigenvalues below this count as zero inside matrix square roots.
const EIGEN_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMetrics {
    /// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
    pub fidelity: f64,
    /// `½ ‖ρ - σ‖₁`.
    pub trace_distance: f64,
    pub frobenius_error: f64,
}

pub fn state_metrics(rho: &DensityMatrix, rho_hat: &DensityMatrix) -> Result<StateMetrics> {
    if rho.dimension() != rho_hat.dimension() {
        return Err(Error::DimensionMismatch {
            expected: rho.dimension(),
            got: rho_hat.dimension(),
        });
    }
    let root = |x: f64| if x > EIGEN_FLOOR { x.sqrt() } else { 0.0 };
    let sqrt_rho = hermitian_function(rho.matrix(), root);
    let inner = &sqrt_rho * rho_hat.matrix() * &sqrt_rho;
    let (eig, _) = hermitian_eigen(&inner);
    let root_trace: f64 = eig.iter().map(|&x| root(x)).sum();
    let fidelity = (root_trace * root_trace).clamp(0.0, 1.0);
    let diff = rho.matrix() - rho_hat.matrix();
    let (d, _) = hermitian_eigen(&diff);
    let trace_distance = 0.5 * d.iter().map(|x| x.abs()).sum::<f64>();
    Ok(StateMetrics {
        fidelity,
        trace_distance,
        frobenius_error: frobenius(&diff),
    })
}
