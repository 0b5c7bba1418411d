//! The N²-element tomographic POVM `Ê_ml = |φ_ml⟩⟨φ_ml| / N` with
//! `|φ_ml⟩ = X^l |φ_m⟩`, and Born-rule probabilities against it.
//!
//! Outcomes are indexed `m·N + l` throughout the crate.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::equidistant::{equidistant_state, shift_apply, spectral_weights};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, ZERO, cis, max_abs_diff, mod_n, outer, trace};
use crate::state::DensityMatrix;
use crate::tomography::{RealParameter, measurement_map, parameter_layout};

#[derive(Debug, Clone)]
pub struct PovmSet {
    n: usize,
    states: Vec<CVector>,
    elements: Vec<CMatrix>,
}

pub fn build_povm(n: usize) -> Result<PovmSet> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { got: n, min: 3 });
    }
    let base = (0..n)
        .map(|m| equidistant_state(m, n))
        .collect::<Result<Vec<_>>>()?;
    let mut states = Vec::with_capacity(n * n);
    let mut elements = Vec::with_capacity(n * n);
    for phi in &base {
        for l in 0..n {
            let s = shift_apply(phi, l as i64);
            elements.push(outer(&s, &s).unscale(n as f64));
            states.push(s);
        }
    }
    Ok(PovmSet {
        n,
        states,
        elements,
    })
}

impl PovmSet {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index(&self, m: usize, l: usize) -> usize {
        m * self.n + l
    }

    /// `(m, l)` of a flat outcome index.
    pub fn labels(&self, index: usize) -> (usize, usize) {
        (index / self.n, index % self.n)
    }

    pub fn element(&self, m: usize, l: usize) -> &CMatrix {
        &self.elements[self.index(m, l)]
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// `|φ_ml⟩` for flat index `m·N + l`.
    pub fn state(&self, index: usize) -> &CVector {
        &self.states[index]
    }

    /// `max |Σ Ê_ml - I|`.
    pub fn completeness_deviation(&self) -> f64 {
        let mut sum = CMatrix::zeros(self.n, self.n);
        for e in &self.elements {
            sum += e;
        }
        max_abs_diff(&sum, &CMatrix::identity(self.n, self.n))
    }

    /// `Tr(Ê_i Ê_j)`.
    pub fn overlap(&self, i: usize, j: usize) -> f64 {
        let ip = self.states[i].dotc(&self.states[j]).norm_sqr();
        ip / (self.n * self.n) as f64
    }

    /// `Tr(Ê Ê')` over all ordered pairs of distinct elements.
    pub fn overlap_spectrum(&self) -> Vec<f64> {
        let k = self.len();
        let mut out = Vec::with_capacity(k * (k - 1));
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    out.push(self.overlap(i, j));
                }
            }
        }
        out
    }
}

/// Born probabilities in outcome order, together with the largest
/// disagreement between the trace evaluation and the explicit double sum.
#[derive(Debug, Clone)]
pub struct BornProbabilities {
    pub values: Vec<f64>,
    pub route_discrepancy: f64,
}

/// `P_ml = Tr(ρ Ê_ml)`, cross-checked against [`born_probabilities_explicit`].
pub fn born_probabilities(rho: &DensityMatrix, povm: &PovmSet) -> Result<BornProbabilities> {
    let n = povm.dimension();
    if rho.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rho.dimension(),
        });
    }
    let values: Vec<f64> = povm
        .elements()
        .iter()
        .map(|e| trace(&(rho.matrix() * e)).re)
        .collect();
    let explicit = born_probabilities_explicit(rho)?;
    let route_discrepancy = values
        .iter()
        .zip(&explicit)
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok(BornProbabilities {
        values,
        route_discrepancy,
    })
}

/// Born probabilities from the spectral weights of the θ = π family:
///
/// `P_ml = N⁻² Σ_{r,s} ρ_rs e^{2iπ m (s-r)/N} √(λ_{r-l} λ_{s-l})`,
///
/// subscripts of λ taken modulo N.
pub fn born_probabilities_explicit(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let n = rho.dimension();
    if n < 3 {
        return Err(Error::DimensionTooSmall { got: n, min: 3 });
    }
    let w = spectral_weights(1.0 / (n - 1) as f64, PI, n)?;
    let root: Vec<f64> = w.lambdas.iter().map(|&l| Float::sqrt(l)).collect();
    let scale = 1.0 / (n * n) as f64;
    let mut out = Vec::with_capacity(n * n);
    for m in 0..n {
        for l in 0..n {
            let mut acc = ZERO;
            for r in 0..n {
                let wr = root[mod_n(r as i64 - l as i64, n)];
                if wr == 0.0 {
                    continue;
                }
                for s in 0..n {
                    let ws = root[mod_n(s as i64 - l as i64, n)];
                    let d = mod_n(m as i64 * (s as i64 - r as i64), n);
                    acc += rho.entry(r, s) * cis(2.0 * PI * d as f64 / n as f64) * (wr * ws);
                }
            }
            out.push(acc.re * scale);
        }
    }
    Ok(out)
}

/// Rank analysis of the single-round measurement map.
#[derive(Debug, Clone)]
pub struct ObstructionReport {
    pub dimension: usize,
    pub rank: usize,
    pub parameters: usize,
    /// Parameters whose column in the map vanishes identically.
    pub dead_parameters: Vec<RealParameter>,
    /// `Im ρ_rs` with `s - r ≡ N/2`; empty for odd N.
    pub half_difference_parameters: Vec<RealParameter>,
    /// `(d, columns, deficiency)` for each difference class `d = min(|r-s|, N-|r-s|)`.
    pub class_deficiency: Vec<(usize, usize, usize)>,
}

impl ObstructionReport {
    pub fn deficiency(&self) -> usize {
        self.parameters - self.rank
    }

    pub fn is_complete(&self) -> bool {
        self.rank == self.parameters
    }

    /// True when the dead columns are exactly the half-difference imaginary parts.
    pub fn dead_columns_match_half_difference(&self) -> bool {
        self.dead_parameters == self.half_difference_parameters
    }

    /// True when the whole deficiency is accounted for by the dead columns.
    pub fn deficiency_localized_to_dead_columns(&self) -> bool {
        self.deficiency() == self.dead_parameters.len()
    }
}

pub fn even_obstruction_report(n: usize) -> Result<ObstructionReport> {
    let map = measurement_map(n, None)?;
    let a = map.matrix();
    let layout = parameter_layout(n);
    let rank = map.rank();

    let dead_parameters: Vec<RealParameter> = layout
        .iter()
        .enumerate()
        .filter(|(j, _)| a.column(*j).amax() < 1e-14)
        .map(|(_, p)| *p)
        .collect();
    let half_difference_parameters = if n.is_multiple_of(2) {
        layout
            .iter()
            .filter(|p| matches!(p, RealParameter::Im(r, s) if s - r == n / 2))
            .copied()
            .collect()
    } else {
        Vec::new()
    };

    let mut class_deficiency = Vec::new();
    for d in 0..=n / 2 {
        let cols: Vec<usize> = layout
            .iter()
            .enumerate()
            .filter(|(_, p)| p.difference_class(n) == d)
            .map(|(j, _)| j)
            .collect();
        let sub = a.select_columns(cols.iter());
        let r = crate::linalg::numerical_rank(&sub, crate::linalg::RANK_TOL);
        class_deficiency.push((d, cols.len(), cols.len() - r));
    }

    Ok(ObstructionReport {
        dimension: n,
        rank,
        parameters: n * n,
        dead_parameters,
        half_difference_parameters,
        class_deficiency,
    })
}
