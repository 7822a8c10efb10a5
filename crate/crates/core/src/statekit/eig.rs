// SPDX-License-Identifier: Apache-2.0

//! Hermitian eigendecomposition by cyclic Jacobi rotations, and the matrix
//! functions built on it.

use num_complex::Complex64 as C64;

use super::matrix::CMatrix;
use crate::error::{Error, Result};

/// Largest Hermiticity defect accepted on input.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Off-diagonal Frobenius norm (relative to ‖A‖_F) at which sweeps stop.
pub const JACOBI_TOL: f64 = 1e-12;
/// Eigenvalues below this are treated as roundoff and clamped to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-6;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `V f(Λ) V†`
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

pub fn hermitian_eig(h: &CMatrix) -> Result<Eigen> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            found: h.cols(),
        });
    }
    let scale = h.max_abs().max(1.0);
    let dev = h.hermitian_deviation();
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }

    let n = h.rows();
    let mut a = h.hermitian_part();
    let mut v = CMatrix::identity(n);
    let norm = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_TOL * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(Eigen { values, vectors })
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One complex Jacobi rotation zeroing `a[p][q]`.
///
/// With `a_pq = |a_pq| e^{iφ}`, the rotation is `J = diag(1, e^{-iφ}) · R(θ)`
/// restricted to (p, q), where `R` is the real rotation annihilating the
/// phase-stripped 2×2 block. `A ← J†AJ`, `V ← VJ`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag < f64::MIN_POSITIVE * 1e10 {
        return;
    }
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let zeta = (aqq - app) / (2.0 * mag);
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
    } else {
        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.rows();
    let ph_conj = phase.conj();

    // columns: A ← A J
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * ph_conj * s;
        a[(k, q)] = akp * s + akq * ph_conj * c;
    }
    // rows: A ← J† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * s + aqk * phase * c;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * ph_conj * s;
        v[(k, q)] = vkp * s + vkq * ph_conj * c;
    }
}

/// Principal square root of a positive semidefinite matrix.
///
/// Roundoff-negative eigenvalues are clamped to zero; anything below
/// `-NEGATIVE_CLAMP` is rejected.
pub fn psd_sqrt(rho: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(rho)?;
    check_psd(&eig)?;
    // eigenvalues at roundoff level would otherwise leak in as √ε
    let floor = 1e-14 * eig.values.first().copied().unwrap_or(0.0).abs();
    Ok(eig.reassemble(|l| if l > floor { l.sqrt() } else { 0.0 }))
}

pub(crate) fn check_psd(eig: &Eigen) -> Result<()> {
    match eig.values.last() {
        Some(&min) if min < -NEGATIVE_CLAMP => Err(Error::NotPositive(min)),
        _ => Ok(()),
    }
}

/// Closest (Frobenius) unit-trace positive semidefinite matrix to a
/// Hermitian input: eigenvalues are projected onto the probability simplex.
pub fn project_to_density(h: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(h)?;
    let projected = project_simplex(&eig.values);
    let n = projected.len();
    let mut out = CMatrix::zeros(n, n);
    for (k, &w) in projected.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let col = eig.vector(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += col[i] * col[j].conj() * w;
            }
        }
    }
    Ok(out)
}

/// Euclidean projection of `values` onto `{x ≥ 0, Σx = 1}`.
pub(crate) fn project_simplex(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k as f64 + 1.0);
        if u - candidate > 0.0 {
            shift = candidate;
        }
    }
    values.iter().map(|&x| (x - shift).max(0.0)).collect()
}
