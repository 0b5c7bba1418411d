//! Equidistant state families: Gram determinant, linear-dependence threshold,
//! canonical decomposition and the cyclic shift used to multiply the family.
//!
//! A family of N unit vectors is equidistant when every pairwise inner product
//! equals `α = |α| e^{iθ}` or its conjugate. Its canonical decomposition is
//!
//! ```text
//! |φ_m⟩ = N^{-1/2} Σ_k (ω_k)^m √λ_k |k⟩,   ω_k = e^{-2i(θ - kπ)/N}
//! λ_k   = 1 - |α| sin(θ + (kπ - θ)/N) / sin((kπ - θ)/N)
//! ```
//!
//! The sine ratio has removable 0/0 points (k = 0 at θ = 0, k = 1 at θ = π).
//! Writing `x = (kπ - θ)/N` turns it into `(-1)^{k+1} U_{N-2}(cos x)` with
//! `U` the Chebyshev polynomial of the second kind, which is finite everywhere
//! and is what we evaluate.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // f64 math without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, ONE, ZERO, cis, mod_n};

/// Tolerance for algebraic identities (norms, inner products, completeness).
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance for quantities that go through a limit evaluation.
pub const LIMIT_TOL: f64 = 1e-10;

/// `U_n(c)` by the three-term recurrence.
fn chebyshev_u(n: usize, c: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * c);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = 2.0 * c * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `sin(θ + x) / sin(x)` with `x = (kπ - θ)/N`, limit-continued.
fn lambda_ratio(k: usize, theta: f64, n: usize) -> f64 {
    let x = (k as f64 * PI - theta) / n as f64;
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    sign * chebyshev_u(n - 2, x.cos())
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..2.0 * PI).contains(&theta) {
        return Err(Error::DegenerateThreshold { theta, n: 0 });
    }
    Ok(())
}

/// The N×N Gram matrix with 1 on the diagonal, `α` above and `α*` below.
pub fn gram_matrix(alpha: Complex64, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| match r.cmp(&c) {
        core::cmp::Ordering::Equal => ONE,
        core::cmp::Ordering::Less => alpha,
        core::cmp::Ordering::Greater => alpha.conj(),
    })
}

/// Determinant of the Gram matrix, computed directly by LU factorization.
pub fn gram_determinant(alpha: Complex64, n: usize) -> Result<Complex64> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { got: n, min: 2 });
    }
    Ok(gram_matrix(alpha, n).determinant())
}

/// Closed-form Gram determinant
/// `[α(1-α*)^N - α*(1-α)^N] / (α - α*)`.
///
/// With `β = 1 - α` the quotient is a pair of divided differences,
/// `h_{N-1}(β*, β) - |β|² h_{N-2}(β*, β)` where `h_n(x, y) = Σ_j x^j y^{n-j}`,
/// which stays finite (and exact) when α is real.
pub fn gram_determinant_closed_form(alpha: Complex64, n: usize) -> Result<Complex64> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { got: n, min: 2 });
    }
    let beta = ONE - alpha;
    let h = |deg: usize| -> Complex64 {
        let x = beta.conj();
        let mut xp = ONE;
        let mut acc = ZERO;
        for j in 0..=deg {
            acc += xp * beta.powu((deg - j) as u32);
            xp *= x;
        }
        acc
    };
    Ok(h(n - 1) - h(n - 2) * beta.norm_sqr())
}

/// Inner-product modulus at which the family becomes linearly dependent:
/// `sin((π-θ)/N) / sin(θ + (π-θ)/N)`.
///
/// At θ = π both sines vanish; the ratio equals `1 / U_{N-2}(cos((π-θ)/N))`,
/// giving `1/(N-1)` there.
pub fn alpha_ld(theta: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { got: n, min: 2 });
    }
    check_theta(theta).map_err(|_| Error::DegenerateThreshold { theta, n })?;
    let x = (PI - theta) / n as f64;
    let denom = chebyshev_u(n - 2, x.cos());
    if !denom.is_finite() || denom.abs() < 1e-15 {
        return Err(Error::DegenerateThreshold { theta, n });
    }
    Ok(1.0 / denom)
}

/// Canonical-decomposition weights of an equidistant family.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralWeights {
    pub lambdas: Vec<f64>,
    pub omegas: Vec<Complex64>,
}

pub fn spectral_weights(alpha_abs: f64, theta: f64, n: usize) -> Result<SpectralWeights> {
    let bound = alpha_ld(theta, n)?;
    if !(0.0..=bound + LIMIT_TOL).contains(&alpha_abs) {
        return Err(Error::AlphaOutOfRange { alpha_abs, bound });
    }
    let mut lambdas = Vec::with_capacity(n);
    let mut omegas = Vec::with_capacity(n);
    for k in 0..n {
        let mut lambda = 1.0 - alpha_abs * lambda_ratio(k, theta, n);
        if lambda < -IDENTITY_TOL {
            return Err(Error::NegativeWeight { k, value: lambda });
        }
        if lambda.abs() <= IDENTITY_TOL {
            lambda = 0.0;
        }
        lambdas.push(lambda);
        omegas.push(cis(-2.0 * (theta - k as f64 * PI) / n as f64));
    }
    Ok(SpectralWeights { lambdas, omegas })
}

/// State `m` of the θ = π family at the linear-dependence boundary:
/// `(N-1)^{-1/2} Σ_{k≠1} e^{2iπ m (k-1)/N} |k⟩`.
pub fn equidistant_state(m: usize, n: usize) -> Result<CVector> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { got: n, min: 2 });
    }
    if m >= n {
        return Err(Error::IndexOutOfRange { index: m, bound: n });
    }
    let norm = 1.0 / ((n - 1) as f64).sqrt();
    Ok(CVector::from_fn(n, |k, _| {
        if k == 1 {
            ZERO
        } else {
            let phase = (m * mod_n(k as i64 - 1, n)) % n;
            cis(2.0 * PI * phase as f64 / n as f64) * norm
        }
    }))
}

/// `X^l |ψ⟩` where `X|k⟩ = |k ⊕ 1⟩`: component k of the result is component
/// `k ⊖ l` of the input.
pub fn shift_apply(state: &CVector, l: i64) -> CVector {
    let n = state.len();
    CVector::from_fn(n, |k, _| state[mod_n(k as i64 - l, n)])
}

/// A family of N equidistant states.
#[derive(Debug, Clone)]
pub struct EquidistantFamily {
    n: usize,
    theta: f64,
    alpha_abs: f64,
    states: Vec<CVector>,
}

impl EquidistantFamily {
    /// Builds the family from its canonical decomposition.
    pub fn new(n: usize, theta: f64, alpha_abs: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { got: n, min: 2 });
        }
        let w = spectral_weights(alpha_abs, theta, n)?;
        let scale = 1.0 / (n as f64).sqrt();
        let states = (0..n)
            .map(|m| {
                CVector::from_fn(n, |k, _| {
                    w.omegas[k].powu(m as u32) * w.lambdas[k].sqrt() * scale
                })
            })
            .collect();
        Ok(Self {
            n,
            theta,
            alpha_abs,
            states,
        })
    }

    /// The θ = π family with `|α| = 1/(N-1)`, the one the POVM is built from.
    pub fn canonical(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { got: n, min: 2 });
        }
        let states = (0..n)
            .map(|m| equidistant_state(m, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            theta: PI,
            alpha_abs: 1.0 / (n - 1) as f64,
            states,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha_abs(&self) -> f64 {
        self.alpha_abs
    }

    pub fn alpha(&self) -> Complex64 {
        cis(self.theta) * self.alpha_abs
    }

    pub fn states(&self) -> &[CVector] {
        &self.states
    }

    pub fn inner_product(&self, m: usize, k: usize) -> Complex64 {
        self.states[m].dotc(&self.states[k])
    }

    /// Largest deviation of any off-diagonal inner product from the nearer of
    /// `α` and `α*`.
    pub fn equidistance_error(&self) -> f64 {
        let a = self.alpha();
        let mut worst: f64 = 0.0;
        for m in 0..self.n {
            for k in 0..self.n {
                if m != k {
                    let ip = self.inner_product(m, k);
                    worst = worst.max((ip - a).norm().min((ip - a.conj()).norm()));
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector_norm_sqr;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gram_determinant_examples() {
        assert!((gram_determinant(ZERO, 5).unwrap() - ONE).norm() < 1e-14);
        assert!(gram_determinant(ONE, 3).unwrap().norm() < 1e-14);
        // direct 3×3 with α = -1/2: 1 + 2α³ - 3α² = 1 - 1/4 - 3/4 = 0
        assert!(gram_determinant(c(-0.5, 0.0), 3).unwrap().norm() < 1e-14);
        assert!(
            gram_determinant_closed_form(c(-0.5, 0.0), 3)
                .unwrap()
                .norm()
                < 1e-14
        );
        assert!(gram_determinant(ZERO, 1).is_err());
    }

    #[test]
    fn closed_form_matches_literal_quotient_off_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.random_range(2..10);
            let a = cis(rng.random_range(0.3..2.8)) * rng.random_range(0.05..0.95);
            let literal = (a * (ONE - a.conj()).powu(n as u32)
                - a.conj() * (ONE - a).powu(n as u32))
                / (a - a.conj());
            let closed = gram_determinant_closed_form(a, n).unwrap();
            assert!((literal - closed).norm() <= 1e-10 * literal.norm().max(1e-3));
        }
    }

    #[test]
    fn closed_form_real_limit() {
        // real α: (1-α)^{N-1} (1 + (N-1)α)
        for n in 2..9 {
            for &a in &[-0.3, 0.0, 0.2, 0.7] {
                let want = (1.0 - a).powi(n as i32 - 1) * (1.0 + (n as f64 - 1.0) * a);
                let got = gram_determinant_closed_form(c(a, 0.0), n).unwrap();
                assert!((got - c(want, 0.0)).norm() < 1e-12, "n={n} a={a}");
            }
        }
    }

    #[test]
    fn gram_consistency_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(2..13);
            let theta = rng.random_range(0.0..2.0 * PI);
            let bound = alpha_ld(theta, n).unwrap();
            let a = cis(theta) * rng.random_range(0.0..0.95) * bound;
            let direct = gram_determinant(a, n).unwrap();
            let closed = gram_determinant_closed_form(a, n).unwrap();
            let rel = (direct - closed).norm() / direct.norm();
            assert!(rel < 1e-9, "n={n} a={a} rel={rel}");
        }
    }

    #[test]
    fn alpha_ld_examples() {
        for n in 2..12 {
            assert!((alpha_ld(0.0, n).unwrap() - 1.0).abs() < 1e-12);
            assert!((alpha_ld(PI, n).unwrap() - 1.0 / (n as f64 - 1.0)).abs() < 1e-12);
        }
        assert!((alpha_ld(PI, 3).unwrap() - 0.5).abs() < 1e-15);
        assert!((alpha_ld(PI, 5).unwrap() - 0.25).abs() < 1e-15);
        assert!(alpha_ld(2.0 * PI, 4).is_err());
        assert!(alpha_ld(-0.1, 4).is_err());
    }

    #[test]
    fn alpha_ld_matches_sine_ratio_away_from_pi() {
        for n in 2..9 {
            for i in 0..40 {
                let theta = 0.05 + i as f64 * 0.15;
                if (theta - PI).abs() < 1e-3 {
                    continue;
                }
                let x = (PI - theta) / n as f64;
                let raw = x.sin() / (theta + x).sin();
                assert!((alpha_ld(theta, n).unwrap() - raw).abs() < 1e-10 * raw.abs().max(1.0));
            }
        }
    }

    #[test]
    fn alpha_ld_is_a_singular_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.random_range(3..9);
            let theta = rng.random_range(0.0..2.0 * PI);
            let a = cis(theta) * alpha_ld(theta, n).unwrap();
            assert!(gram_determinant(a, n).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn spectral_weights_examples() {
        let w = spectral_weights(0.5, PI, 3).unwrap();
        assert_eq!(w.lambdas[1], 0.0);
        assert!((w.lambdas[0] - 1.5).abs() < 1e-12 && (w.lambdas[2] - 1.5).abs() < 1e-12);
        for (k, om) in w.omegas.iter().enumerate() {
            let want = cis(2.0 * PI * (k as f64 - 1.0) / 3.0);
            assert!((om - want).norm() < 1e-14);
        }

        let w = spectral_weights(1.0 / 3.0, PI, 4).unwrap();
        assert_eq!(w.lambdas[1], 0.0);
        for k in [0, 2, 3] {
            assert!((w.lambdas[k] - 4.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_weights_match_raw_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let n = rng.random_range(3..9);
            let theta = rng.random_range(0.1..6.2);
            let a = rng.random_range(0.0..1.0) * alpha_ld(theta, n).unwrap();
            let w = spectral_weights(a, theta, n).unwrap();
            for k in 0..n {
                let x = (k as f64 * PI - theta) / n as f64;
                if x.sin().abs() < 1e-6 {
                    continue;
                }
                let raw = 1.0 - a * (theta + x).sin() / x.sin();
                assert!((w.lambdas[k] - raw).abs() < 1e-10);
                assert!(w.lambdas[k] >= 0.0);
            }
            // Σ λ_k = N (trace of the Gram matrix)
            let sum: f64 = w.lambdas.iter().sum();
            assert!((sum - n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_weights_reject_out_of_range_alpha() {
        assert!(matches!(
            spectral_weights(0.6, PI, 3),
            Err(Error::AlphaOutOfRange { .. })
        ));
    }

    #[test]
    fn equidistant_state_examples() {
        let s = equidistant_state(0, 4).unwrap();
        let r = 1.0 / 3f64.sqrt();
        let want = [r, 0.0, r, r];
        for k in 0..4 {
            assert!((s[k] - c(want[k], 0.0)).norm() < 1e-15);
        }
        for n in 3..12 {
            for m in 0..n {
                assert!((vector_norm_sqr(&equidistant_state(m, n).unwrap()) - 1.0).abs() < 1e-14);
            }
        }
        assert!(equidistant_state(4, 4).is_err());
    }

    #[test]
    fn equidistant_inner_products_geometric_sum() {
        // Σ_{k≠1} e^{2iπ d (k-1)/N} = -1 for d ≢ 0, so ⟨φ_m|φ_n⟩ = -1/(N-1).
        for n in 3..11 {
            for m in 0..n {
                for k in 0..n {
                    if m == k {
                        continue;
                    }
                    let d = mod_n(k as i64 - m as i64, n);
                    let mut geo = ZERO;
                    for j in 0..n {
                        if j != 1 {
                            geo += cis(2.0 * PI * (d as f64) * (j as f64 - 1.0) / n as f64);
                        }
                    }
                    let oracle = geo / (n as f64 - 1.0);
                    let ip = equidistant_state(m, n)
                        .unwrap()
                        .dotc(&equidistant_state(k, n).unwrap());
                    assert!((ip - oracle).norm() < 1e-12);
                    assert!((ip + c(1.0 / (n as f64 - 1.0), 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn canonical_decomposition_reproduces_simplified_states() {
        for n in 3..10 {
            let generic = EquidistantFamily::new(n, PI, 1.0 / (n as f64 - 1.0)).unwrap();
            let canon = EquidistantFamily::canonical(n).unwrap();
            for m in 0..n {
                assert!((&generic.states()[m] - &canon.states()[m]).norm() < 1e-12);
            }
            assert!(canon.equidistance_error() < 1e-12);
        }
    }

    #[test]
    fn generic_families_are_equidistant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..60 {
            let n = rng.random_range(3..9);
            let theta = rng.random_range(0.0..2.0 * PI);
            let a = rng.random_range(0.0..1.0) * alpha_ld(theta, n).unwrap();
            let fam = EquidistantFamily::new(n, theta, a).unwrap();
            for s in fam.states() {
                assert!((vector_norm_sqr(s) - 1.0).abs() < 1e-12);
            }
            assert!(
                fam.equidistance_error() < 1e-12,
                "n={n} theta={theta} a={a}"
            );
        }
    }

    #[test]
    fn shift_examples() {
        let e0 = CVector::from_vec(alloc::vec![ONE, ZERO, ZERO, ZERO]);
        let e1 = shift_apply(&e0, 1);
        assert_eq!(e1[1], ONE);
        assert_eq!(shift_apply(&e0, 0), e0);
        assert_eq!(shift_apply(&e0, 4), e0);
        assert_eq!(shift_apply(&e1, -1), e0);
    }
}
