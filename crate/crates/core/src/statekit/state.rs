// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64 as C64;

use super::eig::{check_psd, hermitian_eig};
use super::layout::{LocalIndex, SlotLayout};
use super::matrix::CMatrix;
use crate::error::{Error, Result};

/// Normalization tolerance for states and density matrices.
pub const NORM_TOL: f64 = 1e-12;
/// Unitarity tolerance for operators flagged unitary.
pub const UNITARY_TOL: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Anything that can be evolved slot-locally: pure states and density matrices.
pub trait QuantumState: Clone {
    fn layout(&self) -> &SlotLayout;

    /// Applies `op` (acting on `targets`, in that order) as `ψ → op ψ` or `ρ → op ρ op†`.
    fn apply_local(&mut self, op: &CMatrix, targets: &[usize]);

    /// Probability of each basis state.
    fn populations(&self) -> Vec<f64>;

    /// Total probability on basis states whose occupations satisfy `pred`.
    fn weight_where(&self, pred: impl Fn(&[usize]) -> bool) -> f64 {
        let layout = self.layout();
        self.populations()
            .iter()
            .enumerate()
            .filter(|(i, _)| pred(&layout.occupations(*i)))
            .map(|(_, p)| p)
            .sum()
    }

    /// Applies `op` on the named slots.
    fn apply(&mut self, op: &CMatrix, targets: &[&str]) -> Result<()> {
        let pos = self.layout().positions(targets)?;
        let local_dim: usize = pos.iter().map(|&p| self.layout().slots()[p].dim).product();
        if op.rows() != local_dim || op.cols() != local_dim {
            return Err(Error::DimensionMismatch {
                expected: local_dim,
                found: op.rows(),
            });
        }
        self.apply_local(op, &pos);
        Ok(())
    }
}

fn apply_to_buffer(buf: &mut [C64], op: &CMatrix, idx: &LocalIndex, scratch: &mut Vec<C64>) {
    let d = idx.offsets.len();
    scratch.resize(d, ZERO);
    for &base in &idx.bases {
        for (l, &off) in idx.offsets.iter().enumerate() {
            scratch[l] = buf[base + off];
        }
        for (i, &off) in idx.offsets.iter().enumerate() {
            let row = op.row(i);
            let mut acc = ZERO;
            for (a, x) in row.iter().zip(scratch.iter()) {
                acc += a * x;
            }
            buf[base + off] = acc;
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    layout: SlotLayout,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(layout: SlotLayout, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn vacuum(layout: SlotLayout) -> Self {
        let mut amplitudes = vec![ZERO; layout.dim()];
        amplitudes[0] = C64::new(1.0, 0.0);
        Self { layout, amplitudes }
    }

    /// Fock basis state with the given occupation per slot, in layout order.
    pub fn basis(layout: SlotLayout, occupations: &[usize]) -> Result<Self> {
        let idx = layout.index_of(occupations)?;
        let mut amplitudes = vec![ZERO; layout.dim()];
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(Self { layout, amplitudes })
    }

    /// Superposition `Σ cₖ |occₖ⟩` (not normalized).
    pub fn superposition(layout: SlotLayout, terms: &[(C64, &[usize])]) -> Result<Self> {
        let mut amplitudes = vec![ZERO; layout.dim()];
        for (c, occ) in terms {
            amplitudes[layout.index_of(occ)?] += c;
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn layout(&self) -> &SlotLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupations: &[usize]) -> Result<C64> {
        Ok(self.amplitudes[self.layout.index_of(occupations)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= 0.0 {
            return Err(Error::NotNormalized(n));
        }
        let s = 1.0 / n.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(self)
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            layout: self.layout.clone(),
            matrix: CMatrix::outer(&self.amplitudes, &self.amplitudes),
        }
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }
}

impl QuantumState for StateVector {
    fn layout(&self) -> &SlotLayout {
        &self.layout
    }

    fn apply_local(&mut self, op: &CMatrix, targets: &[usize]) {
        let idx = self.layout.local_index(targets);
        let mut scratch = Vec::new();
        apply_to_buffer(&mut self.amplitudes, op, &idx, &mut scratch);
    }

    fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// `|⟨a|b⟩|²` for normalized pure states.
pub fn state_fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.inner(b).norm_sqr()
}

/// Max-norm distance after removing the global phase, aligned on the
/// largest-magnitude amplitude of `reference`.
pub fn phase_aligned_distance(state: &StateVector, reference: &StateVector) -> f64 {
    let (k, _) =
        reference.amplitudes.iter().enumerate().fold(
            (0, 0.0),
            |acc, (i, a)| if a.norm() > acc.1 { (i, a.norm()) } else { acc },
        );
    let r = reference.amplitudes[k];
    let s = state.amplitudes[k];
    let phase = if s.norm() > 0.0 {
        (r / s) / (r / s).norm()
    } else {
        C64::new(1.0, 0.0)
    };
    state
        .amplitudes
        .iter()
        .zip(&reference.amplitudes)
        .map(|(a, b)| (a * phase - b).norm())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SlotLayout,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Wraps a square matrix; checks shape and Hermiticity but not trace or positivity.
    pub fn new(layout: SlotLayout, matrix: CMatrix) -> Result<Self> {
        let d = layout.dim();
        if matrix.rows() != d || matrix.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.rows(),
            });
        }
        let dev = matrix.hermitian_deviation();
        if dev > 1e-10 * matrix.max_abs().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { layout, matrix })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        state.to_density()
    }

    pub fn maximally_mixed(layout: SlotLayout) -> Self {
        let d = layout.dim();
        Self {
            layout,
            matrix: CMatrix::identity(d).scale_real(1.0 / d as f64),
        }
    }

    /// Convex mixture `Σ wᵢ ρᵢ` over a common layout.
    pub fn mixture(terms: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let d = first.1.layout.dim();
        let mut m = CMatrix::zeros(d, d);
        for (w, rho) in terms {
            if rho.layout != first.1.layout {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: rho.layout.dim(),
                });
            }
            m = &m + &rho.matrix.scale_real(*w);
        }
        Ok(Self {
            layout: first.1.layout.clone(),
            matrix: m,
        })
    }

    pub fn layout(&self) -> &SlotLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn entry(&self, row: &[usize], col: &[usize]) -> Result<C64> {
        Ok(self.matrix[(self.layout.index_of(row)?, self.layout.index_of(col)?)])
    }

    /// Returns `ρ / Tr ρ`.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::NotNormalized(t));
        }
        Ok(Self {
            layout: self.layout.clone(),
            matrix: self.matrix.scale_real(1.0 / t),
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: self.matrix.scale_real(s),
        }
    }

    /// Checks Hermiticity, unit trace and positivity at the module tolerances.
    pub fn validate(&self) -> Result<()> {
        let dev = self.matrix.hermitian_deviation();
        if dev > NORM_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let t = self.trace();
        if (t - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(t));
        }
        let eig = hermitian_eig(&self.matrix)?;
        match eig.values.last() {
            Some(&min) if min < -1e-10 => Err(Error::NotPositive(min)),
            _ => Ok(()),
        }
    }

    /// Eigenvalues, descending.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let eig = hermitian_eig(&self.matrix)?;
        check_psd(&eig)?;
        Ok(eig.values)
    }

    /// Applies an arbitrary (not necessarily unitary) local map `ρ → K ρ K†`.
    pub fn conjugated(&self, op: &CMatrix, targets: &[&str]) -> Result<Self> {
        let mut out = self.clone();
        out.apply(op, targets)?;
        Ok(out)
    }

    /// `Σₖ Kₖ ρ Kₖ†` on the named slots.
    pub fn apply_kraus(&self, kraus: &[CMatrix], targets: &[&str]) -> Result<Self> {
        let d = self.layout.dim();
        let mut acc = CMatrix::zeros(d, d);
        for k in kraus {
            let branch = self.conjugated(k, targets)?;
            acc = &acc + &branch.matrix;
        }
        Ok(Self {
            layout: self.layout.clone(),
            matrix: acc,
        })
    }

    /// Reduced state on `keep`, laid out in the order given.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        partial_trace(self, keep)
    }

    /// Expectation value `Tr(ρ O)` of a global operator.
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        let d = self.layout.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += self.matrix[(i, j)] * op[(j, i)];
            }
        }
        acc
    }
}

impl QuantumState for DensityMatrix {
    fn layout(&self) -> &SlotLayout {
        &self.layout
    }

    fn apply_local(&mut self, op: &CMatrix, targets: &[usize]) {
        let idx = self.layout.local_index(targets);
        let d = self.layout.dim();
        let mut scratch = Vec::new();
        // ρ ← ρ op†: each row r becomes conj(op) r
        let op_conj = op.conj();
        let data = self.matrix.as_mut_slice();
        for row in data.chunks_mut(d) {
            apply_to_buffer(row, &op_conj, &idx, &mut scratch);
        }
        // ρ ← op ρ: act on columns
        let mut column = vec![ZERO; d];
        for j in 0..d {
            for i in 0..d {
                column[i] = data[i * d + j];
            }
            apply_to_buffer(&mut column, op, &idx, &mut scratch);
            for i in 0..d {
                data[i * d + j] = column[i];
            }
        }
    }

    fn populations(&self) -> Vec<f64> {
        (0..self.layout.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    layout: SlotLayout,
    matrix: CMatrix,
    unitary: bool,
}

impl Operator {
    pub fn new(layout: SlotLayout, matrix: CMatrix) -> Result<Self> {
        let d = layout.dim();
        if matrix.rows() != d || matrix.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.rows(),
            });
        }
        Ok(Self {
            layout,
            matrix,
            unitary: false,
        })
    }

    /// Wraps a matrix flagged unitary; rejects it if `‖U†U − I‖_max > 1e-10`.
    pub fn unitary(layout: SlotLayout, matrix: CMatrix) -> Result<Self> {
        let mut op = Self::new(layout, matrix)?;
        let dev = op.matrix.unitarity_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        op.unitary = true;
        Ok(op)
    }

    pub fn identity(layout: SlotLayout) -> Self {
        let d = layout.dim();
        Self {
            layout,
            matrix: CMatrix::identity(d),
            unitary: true,
        }
    }

    pub fn layout(&self) -> &SlotLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn compose(&self, after: &Operator) -> Result<Operator> {
        if self.layout != after.layout {
            return Err(Error::DimensionMismatch {
                expected: self.layout.dim(),
                found: after.layout.dim(),
            });
        }
        Ok(Operator {
            layout: self.layout.clone(),
            matrix: after.matrix.matmul(&self.matrix),
            unitary: self.unitary && after.unitary,
        })
    }

    pub fn apply_to(&self, state: &StateVector) -> Result<StateVector> {
        if state.layout != self.layout {
            return Err(Error::DimensionMismatch {
                expected: self.layout.dim(),
                found: state.layout.dim(),
            });
        }
        Ok(StateVector {
            layout: self.layout.clone(),
            amplitudes: self.matrix.mul_vec(&state.amplitudes),
        })
    }

    /// `U ρ U†`
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.layout != self.layout {
            return Err(Error::DimensionMismatch {
                expected: self.layout.dim(),
                found: rho.layout.dim(),
            });
        }
        Ok(DensityMatrix {
            layout: self.layout.clone(),
            matrix: self.matrix.matmul(&rho.matrix).matmul(&self.matrix.adjoint()),
        })
    }
}

// ---------------------------------------------------------------------------

/// Kronecker product with concatenated layouts.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ok(Self { layout, amplitudes })
    }
}

impl Tensor for Operator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            layout: self.layout.concat(&other.layout)?,
            matrix: self.matrix.kron(&other.matrix),
            unitary: self.unitary && other.unitary,
        })
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            layout: self.layout.concat(&other.layout)?,
            matrix: self.matrix.kron(&other.matrix),
        })
    }
}

pub fn tensor_product<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

/// Lifts `op` (defined on the slots `targets`, in that order) to `layout`,
/// acting as the identity elsewhere.
pub fn embed(op: &Operator, targets: &[&str], layout: &SlotLayout) -> Result<Operator> {
    let pos = layout.positions(targets)?;
    let expected: Vec<usize> = pos.iter().map(|&p| layout.slots()[p].dim).collect();
    if op.layout.dims() != expected {
        return Err(Error::DimensionMismatch {
            expected: expected.iter().product(),
            found: op.layout.dim(),
        });
    }
    let idx = layout.local_index(&pos);
    let d = layout.dim();
    let mut m = CMatrix::zeros(d, d);
    for &base in &idx.bases {
        for (i, &oi) in idx.offsets.iter().enumerate() {
            for (j, &oj) in idx.offsets.iter().enumerate() {
                m[(base + oi, base + oj)] = op.matrix[(i, j)];
            }
        }
    }
    Ok(Operator {
        layout: layout.clone(),
        matrix: m,
        unitary: op.unitary,
    })
}

pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    let layout = &rho.layout;
    let pos = layout.positions(keep)?;
    let kept = layout.select(keep)?;
    let idx = layout.local_index(&pos);
    let dk = kept.dim();
    let mut m = CMatrix::zeros(dk, dk);
    for &base in &idx.bases {
        for (i, &oi) in idx.offsets.iter().enumerate() {
            for (j, &oj) in idx.offsets.iter().enumerate() {
                m[(i, j)] += rho.matrix[(base + oi, base + oj)];
            }
        }
    }
    Ok(DensityMatrix {
        layout: kept,
        matrix: m,
    })
}
