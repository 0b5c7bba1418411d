//! The three-stage tomography interferometer on N² path modes.
//!
//! Mode `(layer m, sector l)` has flat index `m·N + l`. The photon enters on
//! layer 0. Stage 1 spreads each sector's amplitude evenly over layers
//! `0..N-1`, stage 2 cyclically shifts the sectors of every layer, stage 3
//! applies the Fourier matrix inside every sector.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // f64 math without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, apply_two_mode, cis, wrap_phase};
use crate::mesh::{Mesh, decompose, fourier_matrix};
use crate::povm::{PovmSet, build_povm};

/// Ports and POVM responses must agree to this tolerance during calibration.
pub const PORT_MAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Decomposition,
    Permutation,
    Fourier,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Decomposition => "decomposition",
            Stage::Permutation => "permutation",
            Stage::Fourier => "fourier",
        }
    }

    pub fn from_name(s: &str) -> Option<Stage> {
        match s {
            "decomposition" => Some(Stage::Decomposition),
            "permutation" => Some(Stage::Permutation),
            "fourier" => Some(Stage::Fourier),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementKind {
    /// `t` is the fraction of power crossing to the partner mode:
    /// `[[e^{iφ}√r, -√t], [e^{iφ}√t, √r]]` with `r = 1 - t`.
    Splitter { t: f64, phase: f64 },
    /// Exact swap of the two modes.
    Crossing,
    /// `e^{iφ}` on a single mode.
    Phase { phase: f64 },
}

impl ElementKind {
    pub fn name(&self) -> &'static str {
        match self {
            ElementKind::Splitter { .. } => "splitter",
            ElementKind::Crossing => "crossing",
            ElementKind::Phase { .. } => "phase",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeCoordinate {
    pub layer: usize,
    pub sector: usize,
}

impl ModeCoordinate {
    pub fn flat(&self, n: usize) -> usize {
        self.layer * n + self.sector
    }

    pub fn from_flat(index: usize, n: usize) -> Self {
        Self {
            layer: index / n,
            sector: index % n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitElement {
    pub stage: Stage,
    /// Longitudinal slot.
    pub depth: usize,
    pub kind: ElementKind,
    pub mode: usize,
    /// Second mode of splitters and crossings.
    pub partner: Option<usize>,
}

impl CircuitElement {
    fn two_mode(stage: Stage, kind: ElementKind, a: usize, b: usize) -> Self {
        Self {
            stage,
            depth: 0,
            kind,
            mode: a,
            partner: Some(b),
        }
    }

    fn phase(stage: Stage, mode: usize, phase: f64) -> Self {
        Self {
            stage,
            depth: 0,
            kind: ElementKind::Phase {
                phase: wrap_phase(phase),
            },
            mode,
            partner: None,
        }
    }

    /// Transmittance (crossing fraction); 1 for crossings, `None` for phases.
    pub fn transmittance(&self) -> Option<f64> {
        match self.kind {
            ElementKind::Splitter { t, .. } => Some(t),
            ElementKind::Crossing => Some(1.0),
            ElementKind::Phase { .. } => None,
        }
    }

    pub fn reflectivity(&self) -> Option<f64> {
        self.transmittance().map(|t| 1.0 - t)
    }

    pub fn phase_value(&self) -> f64 {
        match self.kind {
            ElementKind::Splitter { phase, .. } | ElementKind::Phase { phase } => phase,
            ElementKind::Crossing => 0.0,
        }
    }

    /// 2×2 block on `(mode, partner)`; `None` for phase elements.
    pub fn block(&self) -> Option<[[Complex64; 2]; 2]> {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match self.kind {
            ElementKind::Splitter { t, phase } => {
                let e = cis(phase);
                let (st, sr) = (t.sqrt(), (1.0 - t).max(0.0).sqrt());
                Some([
                    [e * sr, Complex64::new(-st, 0.0)],
                    [e * st, Complex64::new(sr, 0.0)],
                ])
            }
            ElementKind::Crossing => Some([[zero, one], [one, zero]]),
            ElementKind::Phase { .. } => None,
        }
    }
}

/// Applies `elements` in order to the rows of `m`; each two-mode block is
/// scaled by `amplitude(element)`.
pub fn apply_elements(
    m: &mut CMatrix,
    elements: &[CircuitElement],
    amplitude: impl Fn(&CircuitElement) -> f64,
) {
    for e in elements {
        match (e.block(), e.partner) {
            (Some(mut b), Some(p)) => {
                let a = amplitude(e);
                if a != 1.0 {
                    for z in b.iter_mut().flatten() {
                        *z *= a;
                    }
                }
                apply_two_mode(m, e.mode, p, &b);
            }
            _ => {
                let z = cis(e.phase_value());
                for j in 0..m.ncols() {
                    m[(e.mode, j)] *= z;
                }
            }
        }
    }
}

/// Assigns each element the earliest slot after everything already on its
/// modes. Phase elements take the next free slot without occupying it.
/// Returns the number of slots used by two-mode elements.
fn schedule(elements: &mut [CircuitElement], modes: usize) -> usize {
    let mut level = alloc::vec![0usize; modes];
    let mut best = 0;
    for e in elements.iter_mut() {
        match e.partner {
            Some(p) => {
                let d = level[e.mode].max(level[p]);
                e.depth = d;
                level[e.mode] = d + 1;
                level[p] = d + 1;
                best = best.max(d + 1);
            }
            None => e.depth = level[e.mode],
        }
    }
    best
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { got: n, min: 3 });
    }
    Ok(())
}

/// Per sector, splitters `T_k` (k = N-2 down to 1) on layers `(N-2-k, N-1-k)`
/// with `t_k = k/(k+1)`.
pub fn build_decomposition_stage(n: usize) -> Result<Vec<CircuitElement>> {
    check_dimension(n)?;
    let mut out = Vec::with_capacity(n * (n - 2));
    for l in 0..n {
        for j in 0..n - 2 {
            let k = (n - 2 - j) as f64;
            out.push(CircuitElement::two_mode(
                Stage::Decomposition,
                ElementKind::Splitter {
                    t: k / (k + 1.0),
                    phase: 0.0,
                },
                j * n + l,
                (j + 1) * n + l,
            ));
        }
    }
    schedule(&mut out, n * n);
    Ok(out)
}

/// Adjacent crossings moving sector `s` of one layer to sector `s + shift`
/// (mod N), in bubble-sort order.
pub fn cyclic_shift_crossings(n: usize, shift: usize) -> Vec<(usize, usize)> {
    // rank of the element that must end at each position
    let rank = |e: usize| (e + shift) % n;
    let mut arr: Vec<usize> = (0..n).collect();
    let mut swaps = Vec::new();
    loop {
        let mut changed = false;
        for i in 0..n - 1 {
            if rank(arr[i]) > rank(arr[i + 1]) {
                arr.swap(i, i + 1);
                swaps.push((i, i + 1));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    swaps
}

/// Layer `m` is shifted by `υ = N - 1 - m`; the last layer is left alone.
pub fn build_permutation_stage(n: usize) -> Result<Vec<CircuitElement>> {
    check_dimension(n)?;
    let mut out = Vec::new();
    for m in 0..n - 1 {
        let shift = n - 1 - m;
        for (a, b) in cyclic_shift_crossings(n, shift) {
            out.push(CircuitElement::two_mode(
                Stage::Permutation,
                ElementKind::Crossing,
                m * n + a,
                m * n + b,
            ));
        }
    }
    schedule(&mut out, n * n);
    Ok(out)
}

/// The Fourier mesh on every sector's layer modes, then its output phases.
pub fn build_fourier_stage(n: usize) -> Result<Vec<CircuitElement>> {
    check_dimension(n)?;
    let mesh = decompose(&fourier_matrix(n))?;
    Ok(fourier_stage_from_mesh(&mesh))
}

fn fourier_stage_from_mesh(mesh: &Mesh) -> Vec<CircuitElement> {
    let n = mesh.dimension();
    let mut out = Vec::new();
    for l in 0..n {
        for e in mesh.elements() {
            out.push(CircuitElement::two_mode(
                Stage::Fourier,
                ElementKind::Splitter {
                    t: e.reflectivity(),
                    phase: e.phase,
                },
                e.mode * n + l,
                (e.mode + 1) * n + l,
            ));
        }
        for (k, &phi) in mesh.output_phases().iter().enumerate() {
            out.push(CircuitElement::phase(Stage::Fourier, k * n + l, phi));
        }
    }
    schedule(&mut out, n * n);
    out
}

#[derive(Debug, Clone)]
pub struct CircuitLayout {
    n: usize,
    elements: Vec<CircuitElement>,
    port_map: Vec<usize>,
    fourier_mesh: Mesh,
}

impl CircuitLayout {
    /// Rebuilds a layout from stored parts, recalibrating nothing: the caller
    /// vouches for `port_map`.
    pub fn from_parts(
        n: usize,
        elements: Vec<CircuitElement>,
        port_map: Vec<usize>,
    ) -> Result<Self> {
        check_dimension(n)?;
        let modes = n * n;
        for e in &elements {
            let bad = e.mode >= modes || e.partner.is_some_and(|p| p >= modes || p == e.mode);
            if bad {
                return Err(Error::InvalidElement("element mode out of range"));
            }
            if let ElementKind::Splitter { t, .. } = e.kind
                && !(0.0..=1.0).contains(&t)
            {
                return Err(Error::InvalidElement("transmittance outside [0, 1]"));
            }
        }
        check_permutation(&port_map, modes)?;
        Ok(Self {
            n,
            elements,
            port_map,
            fourier_mesh: decompose(&fourier_matrix(n))?,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.n * self.n
    }

    pub fn elements(&self) -> &[CircuitElement] {
        &self.elements
    }

    pub fn stage_elements(&self, stage: Stage) -> impl Iterator<Item = &CircuitElement> {
        self.elements.iter().filter(move |e| e.stage == stage)
    }

    /// `port_map()[port]` is the flat POVM index `m·N + l` read at that port.
    pub fn port_map(&self) -> &[usize] {
        &self.port_map
    }

    /// Output port carrying POVM outcome `index`.
    pub fn port_of(&self, index: usize) -> usize {
        self.port_map
            .iter()
            .position(|&q| q == index)
            .expect("port map is a bijection")
    }

    pub fn fourier_mesh(&self) -> &Mesh {
        &self.fourier_mesh
    }

    /// Ideal N²×N² transfer matrix.
    pub fn transfer(&self) -> CMatrix {
        let mut m = CMatrix::identity(self.modes(), self.modes());
        apply_elements(&mut m, &self.elements, |_| 1.0);
        m
    }

    /// Columns of the ideal transfer matrix for the N layer-0 input ports.
    pub fn input_transfer(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.modes(), self.n);
        for l in 0..self.n {
            m[(l, l)] = Complex64::new(1.0, 0.0);
        }
        apply_elements(&mut m, &self.elements, |_| 1.0);
        m
    }

    /// POVM-indexed probabilities from port probabilities.
    pub fn to_povm_order(&self, port_probs: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; port_probs.len()];
        for (port, &q) in self.port_map.iter().enumerate() {
            out[q] = port_probs[port];
        }
        out
    }
}

fn check_permutation(perm: &[usize], len: usize) -> Result<()> {
    if perm.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            got: perm.len(),
        });
    }
    let mut seen = alloc::vec![false; len];
    for (port, &q) in perm.iter().enumerate() {
        if q >= len || seen[q] {
            return Err(Error::PortMap {
                port,
                error: f64::INFINITY,
            });
        }
        seen[q] = true;
    }
    Ok(())
}

/// `|k⟩`, `(|j⟩ + |k⟩)/√2` and `(|j⟩ + i|k⟩)/√2`: N² states whose
/// projectors span the Hermitian matrices.
pub fn probe_states(n: usize) -> Vec<CVector> {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        let mut v = CVector::zeros(n);
        v[k] = Complex64::new(1.0, 0.0);
        out.push(v);
    }
    for j in 0..n {
        for k in j + 1..n {
            for z in [Complex64::new(h, 0.0), Complex64::new(0.0, h)] {
                let mut v = CVector::zeros(n);
                v[j] = Complex64::new(h, 0.0);
                v[k] = z;
                out.push(v);
            }
        }
    }
    out
}

/// Matches every output port to the POVM element with the same response on
/// the probe states.
pub fn calibrate_port_map(input_transfer: &CMatrix, povm: &PovmSet) -> Result<Vec<usize>> {
    let n = povm.dimension();
    let probes = probe_states(n);
    let port_response: Vec<Vec<f64>> = (0..n * n)
        .map(|p| {
            probes
                .iter()
                .map(|psi| (input_transfer.row(p) * psi)[0].norm_sqr())
                .collect()
        })
        .collect();
    let povm_response: Vec<Vec<f64>> = (0..n * n)
        .map(|q| {
            let phi = povm.state(q);
            probes
                .iter()
                .map(|psi| phi.dotc(psi).norm_sqr() / n as f64)
                .collect()
        })
        .collect();
    let mut map = Vec::with_capacity(n * n);
    for (port, resp) in port_response.iter().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for (q, target) in povm_response.iter().enumerate() {
            let err = resp
                .iter()
                .zip(target)
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            if err < best.0 {
                best = (err, q);
            }
        }
        if best.0 > PORT_MAP_TOL {
            return Err(Error::PortMap {
                port,
                error: best.0,
            });
        }
        map.push(best.1);
    }
    check_permutation(&map, n * n)?;
    Ok(map)
}

/// Concatenates the three stages, schedules them jointly and calibrates the
/// port map against the POVM.
pub fn assemble_circuit(n: usize) -> Result<CircuitLayout> {
    check_dimension(n)?;
    let mesh = decompose(&fourier_matrix(n))?;
    let mut elements = build_decomposition_stage(n)?;
    elements.extend(build_permutation_stage(n)?);
    elements.extend(fourier_stage_from_mesh(&mesh));
    schedule(&mut elements, n * n);
    let mut layout = CircuitLayout {
        n,
        elements,
        port_map: Vec::new(),
        fourier_mesh: mesh,
    };
    let povm = build_povm(n)?;
    layout.port_map = calibrate_port_map(&layout.input_transfer(), &povm)?;
    Ok(layout)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementCounts {
    pub part1: usize,
    /// Crossings actually synthesized, including the layer-0 shift.
    pub part2: usize,
    /// `Σ_{υ=1}^{N-2} υ(N-υ)`.
    pub part2_closed_form: usize,
    pub part3: usize,
    pub total: usize,
    /// `½[N³ + N² - 4N + Σ_{υ=1}^{N-2} 2υ(N-υ)]`.
    pub closed_form: usize,
    /// Crossings realizing the layer-0 shift by `N - 1`.
    pub layer0_routing: usize,
}

impl ElementCounts {
    pub fn delta(&self) -> i64 {
        self.total as i64 - self.closed_form as i64
    }
}

pub fn closed_form(n: usize) -> usize {
    let sum: usize = (1..=n.saturating_sub(2)).map(|u| 2 * u * (n - u)).sum();
    (n * n * n + n * n - 4 * n + sum) / 2
}

fn two_mode_count(elements: &[CircuitElement]) -> usize {
    elements.iter().filter(|e| e.partner.is_some()).count()
}

pub fn element_counts(n: usize) -> Result<ElementCounts> {
    let part1 = two_mode_count(&build_decomposition_stage(n)?);
    let part2 = two_mode_count(&build_permutation_stage(n)?);
    let part3 = two_mode_count(&build_fourier_stage(n)?);
    let part2_closed_form = (1..=n - 2).map(|u| u * (n - u)).sum();
    Ok(ElementCounts {
        part1,
        part2,
        part2_closed_form,
        part3,
        total: part1 + part2 + part3,
        closed_form: closed_form(n),
        layer0_routing: cyclic_shift_crossings(n, n - 1).len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthReport {
    pub measured: usize,
    /// `3(N - 1)`.
    pub closed_form: usize,
}

/// Longest chain of splitters and crossings on any path.
pub fn measured_depth(elements: &[CircuitElement], modes: usize) -> usize {
    let mut copy = elements.to_vec();
    schedule(&mut copy, modes)
}

pub fn optical_depth(n: usize) -> Result<DepthReport> {
    let mut elements = build_decomposition_stage(n)?;
    elements.extend(build_permutation_stage(n)?);
    elements.extend(build_fourier_stage(n)?);
    Ok(DepthReport {
        measured: measured_depth(&elements, n * n),
        closed_form: 3 * (n - 1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityRow {
    pub n: usize,
    pub n_bs_ours: usize,
    pub n_bs_paper_formula: usize,
    /// `M(M-1)/2` for a general `M = N²` mode interferometer.
    pub n_bs_general: usize,
    pub od_ours: usize,
    pub od_clements: usize,
    pub od_reck: usize,
}

pub fn comparison_table(ns: impl IntoIterator<Item = usize>) -> Result<Vec<ComplexityRow>> {
    ns.into_iter()
        .map(|n| {
            let counts = element_counts(n)?;
            let m = n * n;
            Ok(ComplexityRow {
                n,
                n_bs_ours: counts.total,
                n_bs_paper_formula: counts.closed_form,
                n_bs_general: m * (m - 1) / 2,
                od_ours: optical_depth(n)?.measured,
                od_clements: m,
                od_reck: 2 * m - 3,
            })
        })
        .collect()
}

/// Flat input vector on the layer-0 ports for an N-dimensional state.
pub fn embed_input(psi: &CVector) -> CVector {
    let n = psi.len();
    let mut v = CVector::zeros(n * n);
    v.rows_mut(0, n).copy_from(psi);
    v
}
