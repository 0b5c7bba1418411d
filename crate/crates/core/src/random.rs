//! Random states and unitaries for sampling-based checks.

use num_complex::Complex64;
#[allow(unused_imports)] // f64 math without std
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMatrix, CVector, trace};
use crate::state::DensityMatrix;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| gaussian(rng))
}

/// Full-rank mixed state `G G† / Tr(G G†)` with `G` a square complex Gaussian matrix.
pub fn random_density_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(n, rng);
    let w = &g * g.adjoint();
    let tr = trace(&w).re;
    DensityMatrix::new(w.unscale(tr)).expect("Gram matrix of a Gaussian sample is a valid state")
}

/// Unit vector drawn uniformly from the complex sphere.
pub fn random_pure_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(n, |_, _| gaussian(rng));
    let norm = v.norm();
    v.unscale(norm)
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of R's
/// diagonal divided out.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}
