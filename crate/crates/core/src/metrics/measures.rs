// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::statekit::{hermitian_eig, psd_sqrt, CMatrix, DensityMatrix, StateVector, C64};

/// Square roots of the eigenvalues of a PSD product, with roundoff-level
/// eigenvalues (relative to the largest) set to zero.
fn sqrt_spectrum(m: &CMatrix) -> Result<Vec<f64>> {
    let values = hermitian_eig(&m.hermitian_part())?.values;
    let floor = 1e-13 * values.first().copied().unwrap_or(0.0).abs();
    Ok(values.iter().map(|&l| if l > floor { l.sqrt() } else { 0.0 }).collect())
}

fn check_same_layout(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.layout() != b.layout() {
        return Err(Error::DimensionMismatch {
            expected: a.layout().dim(),
            found: b.layout().dim(),
        });
    }
    Ok(())
}

/// Uhlmann fidelity `Tr √(√ρ σ √ρ)` (not squared).
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_layout(rho, sigma)?;
    let s = psd_sqrt(rho.matrix())?;
    let f: f64 = sqrt_spectrum(&(&(&s * sigma.matrix()) * &s))?.iter().sum();
    Ok(f.min(1.0))
}

/// `½ Tr|ρ − σ|`
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_layout(rho, sigma)?;
    let diff = (rho.matrix() - sigma.matrix()).hermitian_part();
    Ok(0.5 * hermitian_eig(&diff)?.values.iter().map(|l| l.abs()).sum::<f64>())
}

fn check_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.layout().dims() != [2, 2] {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.layout().dim(),
        });
    }
    Ok(())
}

/// Two-qubit concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`.
pub fn wootters_concurrence(rho: &DensityMatrix) -> Result<f64> {
    check_two_qubit(rho)?;
    // σ_y ⊗ σ_y is real: antidiagonal (-1, 1, 1, -1)
    let mut yy = CMatrix::zeros(4, 4);
    for (i, s) in [-1.0, 1.0, 1.0, -1.0].into_iter().enumerate() {
        yy[(i, 3 - i)] = C64::new(s, 0.0);
    }
    let tilde = &(&yy * &rho.matrix().conj()) * &yy;
    let s = psd_sqrt(rho.matrix())?;
    let lambda = sqrt_spectrum(&(&(&s * &tilde) * &s))?;
    Ok((lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(0.0))
}

fn binary_entropy(x: f64) -> f64 {
    [x, 1.0 - x]
        .into_iter()
        .filter(|&p| p > 0.0)
        .fold(0.0, |acc, p| acc - p * p.log2())
}

/// Entanglement of formation (ebits) as a function of concurrence.
pub fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    binary_entropy((1.0 + (1.0 - c * c).sqrt()) / 2.0)
}

pub fn entanglement_of_formation(rho: &DensityMatrix) -> Result<f64> {
    Ok(eof_from_concurrence(wootters_concurrence(rho)?))
}

/// Pure-state 2-concurrence `2(1 − Tr ρ_A²)` across the cut `part_a | rest`.
pub fn i_concurrence_pure(psi: &StateVector, part_a: &[&str]) -> Result<f64> {
    if !psi.is_normalized() {
        return Err(Error::NotNormalized(psi.norm_sqr()));
    }
    let reduced = psi.to_density().partial_trace(part_a)?;
    Ok((2.0 * (1.0 - reduced.purity())).max(0.0))
}
