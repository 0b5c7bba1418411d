//! Single-photon propagation through a [`CircuitLayout`], finite-shot
//! sampling and the loss-fidelity figure of merit.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // f64 math without std
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::circuit::{CircuitLayout, ElementKind, apply_elements, embed_input};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, vector_norm_sqr};
use crate::state::{DensityMatrix, NORM_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    pub db_per_splitter: f64,
    pub applies_to_crossings: bool,
}

impl LossModel {
    pub fn new(db_per_splitter: f64) -> Result<Self> {
        if db_per_splitter.is_nan() || db_per_splitter < 0.0 {
            return Err(Error::InvalidElement(
                "loss must be a nonnegative number of dB",
            ));
        }
        Ok(Self {
            db_per_splitter,
            applies_to_crossings: true,
        })
    }

    /// `10^(-dB/20)`.
    pub fn amplitude(&self) -> f64 {
        10f64.powf(-self.db_per_splitter / 20.0)
    }

    fn factor(&self, kind: &ElementKind) -> f64 {
        match kind {
            ElementKind::Splitter { .. } => self.amplitude(),
            ElementKind::Crossing if self.applies_to_crossings => self.amplitude(),
            _ => 1.0,
        }
    }
}

/// N²×N² mode transfer matrix; unitary when ideal, contractive when lossy.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix(pub CMatrix);

impl TransferMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.nrows()
    }
}

pub fn transfer_matrix(layout: &CircuitLayout, loss: Option<&LossModel>) -> TransferMatrix {
    let m = layout.modes();
    let mut t = CMatrix::identity(m, m);
    match loss {
        None => apply_elements(&mut t, layout.elements(), |_| 1.0),
        Some(model) => apply_elements(&mut t, layout.elements(), |e| model.factor(&e.kind)),
    }
    TransferMatrix(t)
}

fn input_columns(layout: &CircuitLayout, loss: Option<&LossModel>) -> CMatrix {
    let n = layout.dimension();
    let mut t = CMatrix::zeros(layout.modes(), n);
    for l in 0..n {
        t[(l, l)] = Complex64::new(1.0, 0.0);
    }
    match loss {
        None => apply_elements(&mut t, layout.elements(), |_| 1.0),
        Some(model) => apply_elements(&mut t, layout.elements(), |e| model.factor(&e.kind)),
    }
    t
}

/// Detection probability per output port plus the probability that the
/// photon is lost.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDistribution {
    pub port_probs: Vec<f64>,
    pub loss: f64,
}

impl OutputDistribution {
    pub fn detected(&self) -> f64 {
        self.port_probs.iter().sum()
    }
}

/// Pure input `psi` (N amplitudes on the layer-0 ports).
pub fn output_distribution(
    layout: &CircuitLayout,
    psi: &CVector,
    loss: Option<&LossModel>,
) -> Result<OutputDistribution> {
    let n = layout.dimension();
    if psi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: psi.len(),
        });
    }
    let norm = vector_norm_sqr(psi);
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    let out = input_columns(layout, loss) * psi.unscale(norm.sqrt());
    Ok(finish(out.iter().map(|z| z.norm_sqr()).collect()))
}

/// Mixed input: port probabilities `diag(T ρ T†)` over the input columns `T`.
pub fn output_distribution_mixed(
    layout: &CircuitLayout,
    rho: &DensityMatrix,
    loss: Option<&LossModel>,
) -> Result<OutputDistribution> {
    let n = layout.dimension();
    if rho.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rho.dimension(),
        });
    }
    let t = input_columns(layout, loss);
    let tr = &t * rho.matrix();
    let probs = (0..layout.modes())
        .map(|p| (tr.row(p) * t.row(p).adjoint())[0].re.max(0.0))
        .collect();
    Ok(finish(probs))
}

fn finish(port_probs: Vec<f64>) -> OutputDistribution {
    let detected: f64 = port_probs.iter().sum();
    OutputDistribution {
        port_probs,
        loss: (1.0 - detected).max(0.0),
    }
}

/// Transfer-level simulation of an arbitrary flat input vector.
pub fn propagate(layout: &CircuitLayout, psi: &CVector, loss: Option<&LossModel>) -> CVector {
    transfer_matrix(layout, loss).0 * embed_input(psi)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub shots: u64,
    pub seed: u64,
    /// Counts per output port.
    pub counts: Vec<u64>,
    /// Shots that produced no click.
    pub lost: u64,
}

impl MeasurementRecord {
    /// Total detected counts.
    pub fn normalization(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts over detected total; all zero when nothing was detected.
    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.normalization();
        if total == 0 {
            return alloc::vec![0.0; self.counts.len()];
        }
        self.counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }
}

/// Multinomial draw over the ports plus the loss outcome, as a chain of
/// conditional binomials driven by ChaCha8 seeded with `seed`.
pub fn sample_counts(
    distribution: &OutputDistribution,
    shots: u64,
    seed: u64,
) -> Result<MeasurementRecord> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    for (index, &value) in distribution.port_probs.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidProbability { index, value });
        }
    }
    let detected = distribution.detected();
    if detected > 1.0 + 1e-9 {
        return Err(Error::ProbabilitySum {
            sum: detected,
            tolerance: 1e-9,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = shots;
    let mut mass = 1.0f64;
    let mut counts = Vec::with_capacity(distribution.port_probs.len());
    for &p in &distribution.port_probs {
        let c = if remaining == 0 || p <= 0.0 {
            0
        } else if p >= mass {
            remaining
        } else {
            Binomial::new(remaining, (p / mass).clamp(0.0, 1.0))
                .expect("probability in [0, 1]")
                .sample(&mut rng)
        };
        counts.push(c);
        remaining -= c;
        mass -= p;
    }
    Ok(MeasurementRecord {
        shots,
        seed,
        counts,
        lost: remaining,
    })
}

/// `|Tr(U†U_d)|² / (M · Tr(U_d†U_d))`.
pub fn fidelity(u: &TransferMatrix, u_d: &TransferMatrix) -> Result<f64> {
    if u.dimension() != u_d.dimension() {
        return Err(Error::DimensionMismatch {
            expected: u.dimension(),
            got: u_d.dimension(),
        });
    }
    let overlap =
        u.0.iter()
            .zip(u_d.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr();
    let norm: f64 = u_d.0.iter().map(|z| z.norm_sqr()).sum();
    if norm <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((overlap / (u.dimension() as f64 * norm)).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub db: f64,
    pub fidelity: f64,
}

pub fn loss_sweep(
    layout: &CircuitLayout,
    db_grid: &[f64],
    applies_to_crossings: bool,
) -> Result<Vec<SweepPoint>> {
    let ideal = transfer_matrix(layout, None);
    db_grid
        .iter()
        .map(|&db| {
            let model = LossModel {
                applies_to_crossings,
                ..LossModel::new(db)?
            };
            let lossy = transfer_matrix(layout, Some(&model));
            Ok(SweepPoint {
                db,
                fidelity: fidelity(&ideal, &lossy)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitElement, Stage, assemble_circuit};
    use crate::linalg::unitarity_deviation;
    use crate::povm::{born_probabilities, build_povm};
    use crate::random::{haar_unitary, random_density_matrix, random_pure_state};

    fn single_splitter() -> CircuitLayout {
        let e = CircuitElement {
            stage: Stage::Fourier,
            depth: 0,
            kind: ElementKind::Splitter { t: 0.5, phase: 0.0 },
            mode: 0,
            partner: Some(1),
        };
        CircuitLayout::from_parts(3, alloc::vec![e], (0..9).collect()).unwrap()
    }

    #[test]
    fn empty_layout_is_identity() {
        let layout = CircuitLayout::from_parts(3, Vec::new(), (0..9).collect()).unwrap();
        assert_eq!(transfer_matrix(&layout, None).0, CMatrix::identity(9, 9));
    }

    #[test]
    fn zero_loss_matches_ideal() {
        let layout = assemble_circuit(3).unwrap();
        let a = transfer_matrix(&layout, None);
        let b = transfer_matrix(&layout, Some(&LossModel::new(0.0).unwrap()));
        assert_eq!(a, b);
    }

    #[test]
    fn three_db_halves_power() {
        let layout = single_splitter();
        let t = transfer_matrix(&layout, Some(&LossModel::new(3.0103).unwrap()));
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((t.0[(0, 0)].re - 0.5).abs() < 1e-5);
        assert!((t.0[(1, 0)].norm() - h * h).abs() < 1e-5);
        assert_eq!(t.0[(2, 2)].re, 1.0);
    }

    #[test]
    fn ideal_distribution_sums_to_one_and_matches_born() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for n in [3, 4, 5] {
            let layout = assemble_circuit(n).unwrap();
            let povm = build_povm(n).unwrap();
            for _ in 0..10 {
                let psi = random_pure_state(n, &mut rng);
                let d = output_distribution(&layout, &psi, None).unwrap();
                assert!((d.detected() - 1.0).abs() < 1e-12);
                let born = born_probabilities(&DensityMatrix::pure(&psi).unwrap(), &povm)
                    .unwrap()
                    .values;
                for (a, b) in layout.to_povm_order(&d.port_probs).iter().zip(&born) {
                    assert!((a - b).abs() < 1e-10);
                }
                let rho = random_density_matrix(n, &mut rng);
                let dm = output_distribution_mixed(&layout, &rho, None).unwrap();
                let born = born_probabilities(&rho, &povm).unwrap().values;
                for (a, b) in layout.to_povm_order(&dm.port_probs).iter().zip(&born) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn equidistant_input_hits_one_third() {
        let layout = assemble_circuit(3).unwrap();
        let povm = build_povm(3).unwrap();
        let psi = povm.state(0).clone();
        let d = output_distribution(&layout, &psi, None).unwrap();
        assert!((layout.to_povm_order(&d.port_probs)[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_is_uniform() {
        let layout = assemble_circuit(4).unwrap();
        let d =
            output_distribution_mixed(&layout, &DensityMatrix::maximally_mixed(4), None).unwrap();
        for p in &d.port_probs {
            assert!((p - 1.0 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_loss_loses_everything() {
        let layout = assemble_circuit(3).unwrap();
        let psi = random_pure_state(3, &mut ChaCha8Rng::seed_from_u64(1));
        let d = output_distribution(&layout, &psi, Some(&LossModel::new(f64::INFINITY).unwrap()))
            .unwrap();
        assert!(d.port_probs.iter().all(|&p| p == 0.0));
        assert_eq!(d.loss, 1.0);
    }

    #[test]
    fn lossy_transfer_is_contractive() {
        let layout = assemble_circuit(3).unwrap();
        let t = transfer_matrix(&layout, Some(&LossModel::new(1.5).unwrap()));
        let gram = t.0.adjoint() * &t.0;
        let (eig, _) = crate::linalg::hermitian_eigen(&gram);
        assert!(eig.iter().all(|&s| s <= 1.0 + 1e-12));
        assert!(unitarity_deviation(&transfer_matrix(&layout, None).0) < 1e-10);
    }

    #[test]
    fn input_validation() {
        let layout = assemble_circuit(3).unwrap();
        let bad = CVector::from_element(3, Complex64::new(1.0, 0.0));
        assert!(matches!(
            output_distribution(&layout, &bad, None),
            Err(Error::NotNormalized(_))
        ));
        assert!(LossModel::new(-1.0).is_err());
        let d = OutputDistribution {
            port_probs: alloc::vec![0.5, 0.5],
            loss: 0.0,
        };
        assert!(matches!(sample_counts(&d, 0, 1), Err(Error::ZeroShots)));
    }

    #[test]
    fn sampling_is_reproducible_and_complete() {
        let d = OutputDistribution {
            port_probs: alloc::vec![0.2, 0.3, 0.1, 0.25],
            loss: 0.15,
        };
        let a = sample_counts(&d, 100_000, 7).unwrap();
        let b = sample_counts(&d, 100_000, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.normalization() + a.lost, 100_000);
        assert_ne!(a, sample_counts(&d, 100_000, 8).unwrap());
    }

    #[test]
    fn uniform_counts_within_five_sigma() {
        let d = OutputDistribution {
            port_probs: alloc::vec![1.0 / 9.0; 9],
            loss: 0.0,
        };
        let shots = 9_000_000u64;
        let r = sample_counts(&d, shots, 99).unwrap();
        let p = 1.0f64 / 9.0;
        let sigma = (shots as f64 * p * (1.0 - p)).sqrt();
        for &c in &r.counts {
            assert!((c as f64 - 1e6).abs() < 5.0 * sigma);
        }
        assert_eq!(r.lost, 0);
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = TransferMatrix(haar_unitary(6, &mut rng));
        assert!((fidelity(&u, &u).unwrap() - 1.0).abs() < 1e-12);
        let scaled = TransferMatrix(u.0.scale(0.37));
        assert!((fidelity(&u, &scaled).unwrap() - 1.0).abs() < 1e-12);
        let mut mixed = u.0.clone();
        let other = haar_unitary(6, &mut rng);
        for i in 3..6 {
            mixed.set_row(i, &other.row(i));
        }
        assert!(fidelity(&u, &TransferMatrix(mixed)).unwrap() < 1.0);
        assert!(matches!(
            fidelity(&u, &TransferMatrix(CMatrix::zeros(6, 6))),
            Err(Error::ZeroNorm)
        ));
    }

    #[test]
    fn sweep_is_monotone_and_hits_band() {
        for n in [3, 4] {
            let layout = assemble_circuit(n).unwrap();
            let grid: Vec<f64> = (0..=12).map(|k| k as f64 * 0.25).collect();
            let curve = loss_sweep(&layout, &grid, true).unwrap();
            assert_eq!(curve[0].fidelity, 1.0);
            assert!(
                curve
                    .windows(2)
                    .all(|w| w[1].fidelity <= w[0].fidelity + 1e-15)
            );
            let at2 = curve.iter().find(|p| p.db == 2.0).unwrap().fidelity;
            assert!((0.85..=0.95).contains(&at2), "n={n} F={at2}");
        }
        // crossings lossless, N=3: only splitters attenuate
        let layout = assemble_circuit(3).unwrap();
        let f = loss_sweep(&layout, &[2.0], false).unwrap()[0].fidelity;
        assert!(f > 0.95);
    }
}
