//! Density matrices.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // f64 math without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{
    CMatrix, CVector, hermitian_eigen, hermiticity_deviation, trace, vector_norm_sqr,
};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-12;
pub const EIGEN_TOL: f64 = 1e-10;
/// Accepted deviation of `‖ψ‖²` from 1 for pure-state inputs.
pub const NORM_TOL: f64 = 1e-6;

/// A validated N×N density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let herm = hermiticity_deviation(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = trace(&m);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::TraceNotOne(tr.re));
        }
        let (values, _) = hermitian_eigen(&m);
        let min = values.first().copied().unwrap_or(0.0);
        if min < -EIGEN_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self(m))
    }

    /// `|ψ⟩⟨ψ|`; `ψ` must have unit norm within [`NORM_TOL`] and is renormalized.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm_sqr = vector_norm_sqr(psi);
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm_sqr));
        }
        let psi = psi.unscale(norm_sqr.sqrt());
        Ok(Self(&psi * psi.adjoint()))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(CMatrix::identity(n, n).unscale(n as f64))
    }

    /// Uniform mixture of the given density matrices.
    pub fn mixture(states: &[DensityMatrix]) -> Result<Self> {
        let first = states
            .first()
            .ok_or(Error::DimensionTooSmall { got: 0, min: 1 })?;
        let n = first.dimension();
        let mut acc = CMatrix::zeros(n, n);
        for s in states {
            if s.dimension() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: s.dimension(),
                });
            }
            acc += &s.0;
        }
        Self::new(acc.unscale(states.len() as f64))
    }

    pub fn dimension(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn entry(&self, r: usize, s: usize) -> Complex64 {
        self.0[(r, s)]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.0).0
    }

    pub fn purity(&self) -> f64 {
        trace(&(&self.0 * &self.0)).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};

    #[test]
    fn validation_rejects_bad_matrices() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ZERO]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
        let m = CMatrix::identity(2, 2);
        assert!(matches!(DensityMatrix::new(m), Err(Error::TraceNotOne(_))));
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.1, 0.0),
                ZERO,
                ZERO,
                Complex64::new(-0.1, 0.0),
            ],
        );
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotPositive(_))));
    }

    #[test]
    fn pure_and_mixed() {
        let psi = CVector::from_vec(alloc::vec![ONE, ZERO, ZERO]);
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        let mm = DensityMatrix::maximally_mixed(3);
        assert!((mm.purity() - 1.0 / 3.0).abs() < 1e-14);
        let bad = CVector::from_vec(alloc::vec![ONE, ONE]);
        assert!(matches!(
            DensityMatrix::pure(&bad),
            Err(Error::NotNormalized(_))
        ));

        let basis: Vec<_> = (0..3)
            .map(|k| {
                DensityMatrix::pure(&CVector::from_fn(3, |i, _| if i == k { ONE } else { ZERO }))
                    .unwrap()
            })
            .collect();
        let avg = DensityMatrix::mixture(&basis).unwrap();
        assert!(crate::linalg::max_abs_diff(avg.matrix(), mm.matrix()) < 1e-15);
    }
}
