//! Rectangular (Clements) factorization of an N×N unitary into adjacent
//! two-mode rotations and a final diagonal of phases.
//!
//! An element on modes `(p, p+1)` acts as
//! `[[e^{iφ} cos θ, -sin θ], [e^{iφ} sin θ, cos θ]]`. Nulling alternates between
//! right multiplications by `T⁻¹` (even diagonals) and left multiplications by
//! `T` (odd diagonals); the left factors are then pushed through the residual
//! diagonal so that the whole unitary is a single ordered list of elements
//! followed by output phases.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
#[allow(unused_imports)] // f64 math without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, apply_two_mode, cis, unitarity_deviation, wrap_phase};

/// Pivots smaller than this are treated as exact zeros.
pub const PIVOT_TOL: f64 = 1e-13;
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshElement {
    /// Upper mode `p`; the element couples `(p, p + 1)`.
    pub mode: usize,
    /// Mixing angle θ in `[0, π/2]`.
    pub angle: f64,
    /// Phase φ in `[0, 2π)`.
    pub phase: f64,
}

impl MeshElement {
    pub fn new(mode: usize, angle: f64, phase: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&angle) || !phase.is_finite() {
            return Err(Error::InvalidElement("mixing angle outside [0, π/2]"));
        }
        Ok(Self {
            mode,
            angle,
            phase: wrap_phase(phase),
        })
    }

    pub fn modes(&self) -> (usize, usize) {
        (self.mode, self.mode + 1)
    }

    /// `cos²θ`.
    pub fn transmittance(&self) -> f64 {
        let c = self.angle.cos();
        c * c
    }

    /// `sin²θ`.
    pub fn reflectivity(&self) -> f64 {
        let s = self.angle.sin();
        s * s
    }

    pub fn block(&self) -> [[Complex64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        let e = cis(self.phase);
        [
            [e * c, Complex64::new(-s, 0.0)],
            [e * s, Complex64::new(c, 0.0)],
        ]
    }

    fn block_adjoint(&self) -> [[Complex64; 2]; 2] {
        let b = self.block();
        [
            [b[0][0].conj(), b[1][0].conj()],
            [b[0][1].conj(), b[1][1].conj()],
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    n: usize,
    elements: Vec<MeshElement>,
    output_phases: Vec<f64>,
    output_relabeling: Option<Vec<usize>>,
}

impl Mesh {
    pub fn new(n: usize, elements: Vec<MeshElement>, output_phases: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { got: n, min: 2 });
        }
        if output_phases.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: output_phases.len(),
            });
        }
        for e in &elements {
            if e.mode + 1 >= n {
                return Err(Error::IndexOutOfRange {
                    index: e.mode + 1,
                    bound: n,
                });
            }
        }
        Ok(Self {
            n,
            elements,
            output_phases: output_phases.into_iter().map(wrap_phase).collect(),
            output_relabeling: None,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// In application order.
    pub fn elements(&self) -> &[MeshElement] {
        &self.elements
    }

    pub fn output_phases(&self) -> &[f64] {
        &self.output_phases
    }

    /// `Some(perm)` when the mesh realizes the target with its rows
    /// reordered: row `i` of the composed matrix is row `perm[i]` of the target.
    pub fn output_relabeling(&self) -> Option<&[usize]> {
        self.output_relabeling.as_deref()
    }

    /// Length of the longest chain of elements through any single mode.
    pub fn depth(&self) -> usize {
        let mut level = alloc::vec![0usize; self.n];
        let mut best = 0;
        for e in &self.elements {
            let d = level[e.mode].max(level[e.mode + 1]) + 1;
            level[e.mode] = d;
            level[e.mode + 1] = d;
            best = best.max(d);
        }
        best
    }
}

/// `U_{mj} = σ^{m(j+1)} / √N` with `σ = e^{2iπ/N}`.
pub fn fourier_matrix(n: usize) -> CMatrix {
    let norm = (n as f64).sqrt();
    CMatrix::from_fn(n, n, |m, j| {
        cis(2.0 * PI * ((m * (j + 1)) % n) as f64 / n as f64) / norm
    })
}

fn nulling_angles(target: Complex64, partner: Complex64, phase_of_target: f64) -> (f64, f64) {
    if target.norm() < PIVOT_TOL {
        return (0.0, 0.0);
    }
    let phase = if partner.norm() < PIVOT_TOL {
        phase_of_target
    } else {
        phase_of_target - partner.arg()
    };
    (target.norm().atan2(partner.norm()), wrap_phase(phase))
}

/// `W ← W B` with `B` acting on columns `(k, k + 1)`.
fn multiply_right(w: &mut CMatrix, k: usize, b: &[[Complex64; 2]; 2]) {
    for row in 0..w.nrows() {
        let (x, y) = (w[(row, k)], w[(row, k + 1)]);
        w[(row, k)] = x * b[0][0] + y * b[1][0];
        w[(row, k + 1)] = x * b[0][1] + y * b[1][1];
    }
}

pub fn decompose(u: &CMatrix) -> Result<Mesh> {
    let n = u.nrows();
    if n < 2 {
        return Err(Error::DimensionTooSmall { got: n, min: 2 });
    }
    let dev = unitarity_deviation(u);
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary(dev));
    }
    let mut w = u.clone();
    let mut right = Vec::new();
    let mut left = Vec::new();
    for i in 0..n - 1 {
        if i % 2 == 0 {
            for j in 0..=i {
                let x = n - 1 - j;
                let k = i - j;
                let (a, b) = (w[(x, k)], w[(x, k + 1)]);
                let (angle, phase) = nulling_angles(a, b, a.arg());
                let e = MeshElement {
                    mode: k,
                    angle,
                    phase,
                };
                multiply_right(&mut w, k, &e.block_adjoint());
                right.push(e);
            }
        } else {
            for j in 1..=i + 1 {
                let x = n + j - i - 2;
                let y = j - 1;
                let k = x - 1;
                let (a, b) = (w[(k, y)], w[(x, y)]);
                let (angle, phase) = nulling_angles(b, a, (-b).arg());
                let e = MeshElement {
                    mode: k,
                    angle,
                    phase,
                };
                apply_two_mode(&mut w, k, k + 1, &e.block());
                left.push(e);
            }
        }
    }
    let mut d: Vec<Complex64> = (0..n).map(|k| w[(k, k)]).collect();
    let mut pushed = Vec::with_capacity(left.len());
    for e in left.iter().rev() {
        let k = e.mode;
        let phase = if e.angle == 0.0 {
            d[k] *= cis(-e.phase);
            0.0
        } else {
            let phase = wrap_phase((-d[k] / d[k + 1]).arg());
            d[k] = -cis(-e.phase) * d[k + 1];
            phase
        };
        pushed.push(MeshElement {
            mode: k,
            angle: e.angle,
            phase,
        });
    }
    right.extend(pushed);
    Ok(Mesh {
        n,
        elements: right,
        output_phases: d.iter().map(|z| wrap_phase(z.arg())).collect(),
        output_relabeling: None,
    })
}

/// Decomposes the row-permuted target `P U` (row `i` taken from row `perm[i]`)
/// and records the permutation on the mesh.
pub fn decompose_relabeled(u: &CMatrix, perm: &[usize]) -> Result<Mesh> {
    let n = u.nrows();
    let mut seen = alloc::vec![false; n];
    if perm.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: perm.len(),
        });
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidElement("relabeling is not a permutation"));
        }
        seen[p] = true;
    }
    let permuted = CMatrix::from_fn(n, n, |i, j| u[(perm[i], j)]);
    let mut mesh = decompose(&permuted)?;
    mesh.output_relabeling = Some(perm.to_vec());
    Ok(mesh)
}

/// Applies the elements in order, then the output phases.
pub fn compose(mesh: &Mesh) -> CMatrix {
    let n = mesh.n;
    let mut m = CMatrix::identity(n, n);
    for e in &mesh.elements {
        apply_two_mode(&mut m, e.mode, e.mode + 1, &e.block());
    }
    for (k, &phi) in mesh.output_phases.iter().enumerate() {
        let z = cis(phi);
        for j in 0..n {
            m[(k, j)] *= z;
        }
    }
    m
}

/// The target before relabeling: [`compose`] with the recorded row
/// permutation undone.
pub fn compose_target(mesh: &Mesh) -> CMatrix {
    let m = compose(mesh);
    match &mesh.output_relabeling {
        None => m,
        Some(perm) => {
            let mut out = m.clone();
            for (i, &p) in perm.iter().enumerate() {
                out.set_row(p, &m.row(i));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::random::haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_has_trivial_mesh() {
        let mesh = decompose(&CMatrix::identity(4, 4)).unwrap();
        assert_eq!(mesh.elements().len(), 6);
        assert!(mesh.elements().iter().all(|e| e.angle == 0.0));
        assert!(
            mesh.output_phases()
                .iter()
                .all(|&p| p.abs() < 1e-14 || (p - 2.0 * PI).abs() < 1e-14)
        );
        assert!(max_abs_diff(&compose(&mesh), &CMatrix::identity(4, 4)) < 1e-14);
    }

    #[test]
    fn empty_mesh_and_balanced_splitter() {
        let empty = Mesh::new(3, Vec::new(), alloc::vec![0.0; 3]).unwrap();
        assert_eq!(compose(&empty), CMatrix::identity(3, 3));
        let e = MeshElement::new(0, PI / 4.0, 0.0).unwrap();
        assert!((e.transmittance() - 0.5).abs() < 1e-15);
        assert!((e.transmittance() + e.reflectivity() - 1.0).abs() < 1e-15);
        let m = compose(&Mesh::new(2, alloc::vec![e], alloc::vec![0.0; 2]).unwrap());
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let want = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(-h, 0.0), c(h, 0.0), c(h, 0.0)]);
        assert!(max_abs_diff(&m, &want) < 1e-15);
    }

    #[test]
    fn element_blocks_are_unitary() {
        for k in 0..50 {
            let e = MeshElement::new(0, k as f64 * FRAC_PI_2 / 49.0, k as f64 * 0.37).unwrap();
            let b = e.block();
            let m = CMatrix::from_row_slice(2, 2, &[b[0][0], b[0][1], b[1][0], b[1][1]]);
            assert!(unitarity_deviation(&m) < 1e-14);
        }
        assert!(MeshElement::new(0, 2.0, 0.0).is_err());
    }

    #[test]
    fn fourier_examples() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let f2 = fourier_matrix(2);
        let want = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(-h, 0.0), c(h, 0.0)]);
        assert!(max_abs_diff(&f2, &want) < 1e-15);
        for n in 2..=12 {
            let f = fourier_matrix(n);
            assert!(unitarity_deviation(&f) < 1e-13);
            for m in 0..n {
                assert!((f[(0, m)] - c(1.0 / (n as f64).sqrt(), 0.0)).norm() < 1e-15);
                assert!((f[(m, n - 1)] - c(1.0 / (n as f64).sqrt(), 0.0)).norm() < 1e-15);
            }
        }
    }

    fn u4_printed() -> CMatrix {
        CMatrix::from_row_slice(
            4,
            4,
            &[
                c(0.0, -1.0),
                c(0.0, 1.0),
                c(-1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(-1.0, 0.0),
                c(-1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 1.0),
                c(0.0, -1.0),
                c(-1.0, 0.0),
                c(1.0, 0.0),
            ],
        )
        .scale(0.5)
    }

    #[test]
    fn fourier_four_against_printed_matrix() {
        let mesh = decompose_relabeled(&fourier_matrix(4), &[1, 0, 2, 3]).unwrap();
        assert_eq!(mesh.output_relabeling(), Some(&[1usize, 0, 2, 3][..]));
        let realized = compose(&mesh);
        let printed = u4_printed();
        // swapping the first two rows alone does not give the printed matrix
        assert!(max_abs_diff(&realized, &printed) > 0.5);
        // the printed columns are a cyclic reordering of the row-swapped ones
        let cols = [2, 0, 1, 3];
        let reordered = CMatrix::from_fn(4, 4, |i, j| realized[(i, cols[j])]);
        assert!(max_abs_diff(&reordered, &printed) < 1e-10);
        assert!(max_abs_diff(&compose_target(&mesh), &fourier_matrix(4)) < 1e-10);
    }

    #[test]
    fn fourier_meshes_round_trip_with_depth_n() {
        for n in 2..=12 {
            let mesh = decompose(&fourier_matrix(n)).unwrap();
            assert!(
                max_abs_diff(&compose(&mesh), &fourier_matrix(n)) < 1e-10,
                "n={n}"
            );
            assert_eq!(mesh.elements().len(), n * (n - 1) / 2);
            if n >= 3 {
                assert_eq!(mesh.depth(), n, "n={n}");
            }
        }
    }

    #[test]
    fn haar_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 2..=12 {
            for _ in 0..50 {
                let u = haar_unitary(n, &mut rng);
                let mesh = decompose(&u).unwrap();
                assert_eq!(mesh.elements().len(), n * (n - 1) / 2);
                assert!(max_abs_diff(&compose(&mesh), &u) < 1e-10);
                for e in mesh.elements() {
                    assert!((0.0..=FRAC_PI_2).contains(&e.angle));
                    assert!((0.0..2.0 * PI).contains(&e.phase));
                }
            }
        }
    }

    #[test]
    fn permutation_and_diagonal_targets() {
        // exact zero pivots everywhere
        let mut p = CMatrix::zeros(5, 5);
        for (i, j) in [(0, 3), (1, 0), (2, 4), (3, 1), (4, 2)] {
            p[(i, j)] = cis(0.3 * i as f64);
        }
        assert!(max_abs_diff(&compose(&decompose(&p).unwrap()), &p) < 1e-12);
        let d = CMatrix::from_diagonal(&crate::linalg::CVector::from_fn(4, |k, _| cis(k as f64)));
        assert!(max_abs_diff(&compose(&decompose(&d).unwrap()), &d) < 1e-12);
    }

    #[test]
    fn long_meshes_stay_unitary() {
        let mut elements = Vec::new();
        for k in 0..500 {
            elements.push(
                MeshElement::new(k % 7, (k as f64 * 0.61) % FRAC_PI_2, k as f64 * 1.3).unwrap(),
            );
        }
        let mesh = Mesh::new(8, elements, (0..8).map(|k| k as f64).collect()).unwrap();
        assert!(unitarity_deviation(&compose(&mesh)) < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            decompose(&CMatrix::identity(1, 1)),
            Err(Error::DimensionTooSmall { .. })
        ));
        let m = CMatrix::identity(3, 3).scale(1.1);
        assert!(matches!(decompose(&m), Err(Error::NotUnitary(_))));
        assert!(decompose_relabeled(&CMatrix::identity(3, 3), &[0, 0, 1]).is_err());
        assert!(
            Mesh::new(
                3,
                alloc::vec![MeshElement::new(2, 0.0, 0.0).unwrap()],
                alloc::vec![0.0; 3]
            )
            .is_err()
        );
    }
}
