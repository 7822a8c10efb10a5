// SPDX-License-Identifier: Apache-2.0

//! Closed-form reference quantities for the two-qubit target states.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{check_probability, Result};
use crate::statekit::{CMatrix, DensityMatrix, SlotLayout, SlotRole, StateVector, C64};

/// Two-qubit layout `Q1 ⊗ Q2` with basis `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn qubit_pair_layout() -> SlotLayout {
    SlotLayout::builder()
        .slot("Q1", 2, SlotRole::Mode)
        .slot("Q2", 2, SlotRole::Mode)
        .build()
        .expect("static layout")
}

/// `(|01⟩ + |10⟩)/√2`
pub fn psi_plus() -> StateVector {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    StateVector::superposition(qubit_pair_layout(), &[(s, &[0, 1]), (s, &[1, 0])]).expect("static state")
}

/// Discounted protocol output
/// `ρ_d = [|Ψ⁺⟩⟨Ψ⁺| + (η₁/2)(|00⟩⟨00| + |11⟩⟨11|)] / (1 + η₁)`.
pub fn rho_discounted(eta1: f64) -> Result<DensityMatrix> {
    check_probability("eta1", eta1)?;
    let n = 1.0 + eta1;
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = C64::new(eta1 / 2.0 / n, 0.0);
    m[(3, 3)] = C64::new(eta1 / 2.0 / n, 0.0);
    for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        m[(i, j)] = C64::new(0.5 / n, 0.0);
    }
    DensityMatrix::new(qubit_pair_layout(), m)
}

/// The four per-measurement NO probabilities of the standard protocol on
/// `|+⟩|+⟩`, in execution order.
pub fn pf_factors(eta1: f64, eta2: f64) -> Result<[f64; 4]> {
    check_probability("eta1", eta1)?;
    check_probability("eta2", eta2)?;
    let a = 1.0 - eta2;
    Ok([
        (7.0 * a + eta1) / 8.0,
        ((6.0 + eta1) * a + eta1) / (7.0 + eta1),
        ((5.0 + 2.0 * eta1) * a + eta1) / (6.0 + 2.0 * eta1),
        ((4.0 + 3.0 * eta1) * a + eta1) / (5.0 + 3.0 * eta1),
    ])
}

/// Probability of passing all four checks.
pub fn pf_closed_form(eta1: f64, eta2: f64) -> Result<f64> {
    Ok(pf_factors(eta1, eta2)?.iter().product())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pf_examples() {
        assert!((pf_closed_form(0.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        // factors 6.4/8, 5.59/7.1, 4.78/6.2, 3.97/5.3
        let p = pf_closed_form(0.1, 0.1).unwrap();
        let hand = 0.8 * (5.59 / 7.1) * (4.78 / 6.2) * (3.97 / 5.3);
        assert!((p - hand).abs() < 1e-14);
        assert!((p - 0.364).abs() < 5e-4);
        assert_eq!(pf_closed_form(0.0, 1.0).unwrap(), 0.0);
        assert!(pf_closed_form(1.2, 0.0).is_err());
    }

    #[test]
    fn ideal_factors() {
        let f = pf_factors(0.0, 0.0).unwrap();
        for (got, want) in f.iter().zip([7.0 / 8.0, 6.0 / 7.0, 5.0 / 6.0, 4.0 / 5.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn discounted_state_is_normalized() {
        for k in 0..=10 {
            let rho = rho_discounted(k as f64 / 10.0).unwrap();
            rho.validate().unwrap();
        }
    }
}
