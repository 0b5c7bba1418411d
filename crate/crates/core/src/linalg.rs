//! Small dense linear-algebra helpers on top of `nalgebra`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)] // f64 math without std
use num_traits::Float;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Singular values below this are treated as zero when counting rank.
pub const RANK_TOL: f64 = 1e-8;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Mathematical modulus: the result lies in `0..n` for any sign of `i`.
#[inline]
pub fn mod_n(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `max |U†U - I|`; `f64::INFINITY` for non-square input.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(n, n))
}

pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().copied().sum()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Left-multiplies rows `a` and `b` of `m` by a 2×2 block
/// `[[b00, b01], [b10, b11]]` acting on `(a, b)`.
pub fn apply_two_mode(m: &mut CMatrix, a: usize, b: usize, block: &[[Complex64; 2]; 2]) {
    for col in 0..m.ncols() {
        let xa = m[(a, col)];
        let xb = m[(b, col)];
        m[(a, col)] = block[0][0] * xa + block[0][1] * xb;
        m[(b, col)] = block[1][0] * xa + block[1][1] * xb;
    }
}

/// Same as [`apply_two_mode`] but on a single column vector.
pub fn apply_two_mode_vec(v: &mut CVector, a: usize, b: usize, block: &[[Complex64; 2]; 2]) {
    let xa = v[a];
    let xb = v[b];
    v[a] = block[0][0] * xa + block[0][1] * xb;
    v[b] = block[1][0] * xa + block[1][1] * xb;
}

/// Thin SVD `a = U diag(σ) Vᵀ` with σ descending, taken from the symmetric
/// eigenproblem of `[[0, a], [aᵀ, 0]]` (eigenvalues `±σ`, eigenvectors
/// `[u; ±v]/√2`).
pub struct Svd {
    pub u: RMatrix,
    pub singular_values: Vec<f64>,
    pub v: RMatrix,
}

pub fn svd(a: &RMatrix) -> Svd {
    let (m, n) = a.shape();
    let k = m.min(n);
    let mut h = RMatrix::zeros(m + n, m + n);
    h.view_mut((0, m), (m, n)).copy_from(a);
    h.view_mut((m, 0), (n, m)).copy_from(&a.transpose());
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..m + n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut u = RMatrix::zeros(m, k);
    let mut v = RMatrix::zeros(n, k);
    let mut singular_values = Vec::with_capacity(k);
    let root2 = core::f64::consts::SQRT_2;
    for (dst, &src) in order.iter().take(k).enumerate() {
        singular_values.push(eig.eigenvalues[src].max(0.0));
        let w = eig.eigenvectors.column(src);
        u.set_column(dst, &(w.rows(0, m) * root2));
        v.set_column(dst, &(w.rows(m, n) * root2));
    }
    Svd {
        u,
        singular_values,
        v,
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &RMatrix) -> Vec<f64> {
    svd(a).singular_values
}

pub fn numerical_rank(a: &RMatrix, tol: f64) -> usize {
    singular_values(a).iter().filter(|&&s| s > tol).count()
}

/// Minimum-norm least-squares solution of `a x = b` via the SVD pseudo-inverse.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: DVector<f64>,
    pub rank: usize,
    /// Ratio of largest to smallest retained singular value.
    pub condition_number: f64,
    /// `‖a x - b‖₂`.
    pub residual: f64,
}

/// Singular values at or below `tol` are treated as zero.
pub fn least_squares(a: &RMatrix, b: &DVector<f64>, tol: f64) -> LeastSquares {
    let d = svd(a);
    let mut solution = DVector::zeros(a.ncols());
    let mut rank = 0;
    for (i, &s) in d.singular_values.iter().enumerate() {
        if s > tol {
            let coef = d.u.column(i).dot(b) / s;
            solution += d.v.column(i) * coef;
            rank += 1;
        }
    }
    let residual = (a * &solution - b).norm();
    let condition_number = if rank == 0 {
        f64::INFINITY
    } else {
        d.singular_values[0] / d.singular_values[rank - 1]
    };
    LeastSquares {
        solution,
        rank,
        condition_number,
        residual,
    }
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues (ascending) and
/// the matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Rebuilds `V diag(f(λ)) V†` from a Hermitian eigen-decomposition.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for (j, &lam) in values.iter().enumerate() {
        let w = f(lam);
        for i in 0..n {
            scaled[(i, j)] *= w;
        }
    }
    scaled * vectors.adjoint()
}

pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

pub fn vector_norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

#[inline]
pub(crate) fn cis(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let tau = 2.0 * core::f64::consts::PI;
    let w = phi - tau * (phi / tau).floor();
    if w >= tau { 0.0 } else { w }
}
