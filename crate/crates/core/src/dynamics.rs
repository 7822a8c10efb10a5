// SPDX-License-Identifier: Apache-2.0

//! Mode-cavity coupling.
//!
//! A collective spin-wave mode, once mapped onto the superradiant k = 0 mode by
//! a gradient pulse, exchanges excitations resonantly with the cavity at the
//! collective rate `J`. Mode addressing is modeled as exact slot selection, so
//! "couple mode i for time t" is simply the pair propagator embedded on
//! `(mode i, cavity)`.
//!
//! The pair propagator is block diagonal in the total excitation number. The
//! one- and two-excitation blocks use their closed forms; higher complete
//! sectors (only present when the cutoff exceeds two) are exponentiated
//! spectrally. Sectors cut by the Fock truncation are never populated by valid
//! protocol states; [`couple`] refuses states with weight there.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statekit::{hermitian_eig, CMatrix, DensityMatrix, Operator, QuantumState, SlotLayout, SlotRole, C64};

/// Weight tolerated outside the complete excitation sectors before
/// [`couple`] reports a truncation violation.
pub const TRUNCATION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Collective coupling `J = √N·ḡ`, rad/s.
    pub coupling: f64,
    /// Excitation energy `ε`, rad/s. Zero in the rotating frame.
    pub energy: f64,
    /// Cavity photon decay rate `κ`, 1/s.
    pub cavity_decay: f64,
    /// Highest Fock level kept per slot.
    pub fock_cutoff: usize,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            coupling: 2.0 * PI * 6.0e6,
            energy: 0.0,
            cavity_decay: 0.0,
            fock_cutoff: 2,
        }
    }
}

impl PhysicalParams {
    /// Default parameters with the storage-cavity decay time `20/(2π)` μs.
    pub fn reference_device() -> Self {
        Self {
            cavity_decay: 2.0 * PI / 20.0e-6,
            ..Self::default()
        }
    }

    pub fn with_coupling(coupling: f64) -> Self {
        Self {
            coupling,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling J must be positive, got {}",
                self.coupling
            )));
        }
        if !self.energy.is_finite() {
            return Err(Error::InvalidParameter("energy ε must be finite".into()));
        }
        if !(self.cavity_decay.is_finite() && self.cavity_decay >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cavity decay κ must be non-negative, got {}",
                self.cavity_decay
            )));
        }
        if self.fock_cutoff < 2 {
            return Err(Error::InvalidParameter(format!(
                "Fock cutoff must be at least 2, got {}",
                self.fock_cutoff
            )));
        }
        Ok(())
    }

    /// Full single-excitation swap time `τ = π / 2J`.
    pub fn swap_time(&self) -> f64 {
        PI / (2.0 * self.coupling)
    }

    /// Interaction time producing the partial swap angle `θ′ = J t`.
    pub fn time_for_angle(&self, angle: f64) -> f64 {
        angle / self.coupling
    }
}

/// Single-excitation Hamiltonian in the basis `|1_M 0_C⟩, |0_M 1_C⟩`.
pub fn build_h1(params: &PhysicalParams) -> CMatrix {
    let (e, j) = (params.energy, params.coupling);
    CMatrix::from_real_rows(&[&[e, j], &[j, e]])
}

/// Two-excitation Hamiltonian in the basis `|2_M 0_C⟩, |1_M 1_C⟩, |0_M 2_C⟩`.
pub fn build_h2(params: &PhysicalParams) -> CMatrix {
    let (e, j) = (params.energy, params.coupling);
    let g = SQRT_2 * j;
    CMatrix::from_real_rows(&[&[2.0 * e, g, 0.0], &[g, 2.0 * e, g], &[0.0, g, 2.0 * e]])
}

/// Closed-form single-excitation propagator.
pub fn single_excitation_block(params: &PhysicalParams, t: f64) -> CMatrix {
    let jt = params.coupling * t;
    let phase = C64::from_polar(1.0, -params.energy * t);
    let (s, c) = jt.sin_cos();
    CMatrix::from_vec(
        2,
        2,
        vec![C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0)],
    )
    .scale(phase)
}

/// Closed-form two-excitation propagator.
pub fn two_excitation_block(params: &PhysicalParams, t: f64) -> CMatrix {
    let jt = params.coupling * t;
    let phase = C64::from_polar(1.0, -2.0 * params.energy * t);
    let (s, c) = jt.sin_cos();
    let c2 = C64::new(c * c, 0.0);
    let s2 = C64::new(-s * s, 0.0);
    let x = C64::new(0.0, -FRAC_1_SQRT_2 * (2.0 * jt).sin());
    let d = C64::new((2.0 * jt).cos(), 0.0);
    CMatrix::from_vec(3, 3, vec![c2, x, s2, x, d, x, s2, x, c2]).scale(phase)
}

/// Unitary on one `(mode, cavity)` pair for an interaction of length `duration`.
#[derive(Clone, Debug)]
pub struct PairPropagator {
    pub op: Operator,
    pub duration: f64,
}

impl PairPropagator {
    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }
}

/// Pair-space layout used by [`pair_propagator`]: slots `mode` then `cavity`.
pub fn pair_layout(params: &PhysicalParams) -> Result<SlotLayout> {
    let d = params.fock_cutoff + 1;
    SlotLayout::builder()
        .slot("mode", d, SlotRole::Mode)
        .slot("cavity", d, SlotRole::Cavity)
        .build()
}

/// Basis of the total-excitation-`n` sector, ordered by decreasing mode occupation.
fn sector_basis(n: usize, cutoff: usize) -> Vec<(usize, usize)> {
    (0..=n)
        .rev()
        .filter(|&m| m <= cutoff && n - m <= cutoff)
        .map(|m| (m, n - m))
        .collect()
}

pub fn pair_propagator(params: &PhysicalParams, t: f64) -> Result<PairPropagator> {
    params.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "interaction time must be non-negative, got {t}"
        )));
    }
    let cutoff = params.fock_cutoff;
    let d = cutoff + 1;
    let mut u = CMatrix::zeros(d * d, d * d);
    for n in 0..=2 * cutoff {
        let basis = sector_basis(n, cutoff);
        let block = match n {
            0 => CMatrix::identity(1),
            1 => single_excitation_block(params, t),
            2 => two_excitation_block(params, t),
            // sectors cut by the truncation are unreachable; keep them inert
            _ if n > cutoff => CMatrix::identity(basis.len()),
            _ => spectral_block(params, n, &basis, t)?,
        };
        for (a, &(ma, ca)) in basis.iter().enumerate() {
            for (b, &(mb, cb)) in basis.iter().enumerate() {
                u[(ma * d + ca, mb * d + cb)] = block[(a, b)];
            }
        }
    }
    Ok(PairPropagator {
        op: Operator::unitary(pair_layout(params)?, u)?,
        duration: t,
    })
}

fn spectral_block(params: &PhysicalParams, n: usize, basis: &[(usize, usize)], t: f64) -> Result<CMatrix> {
    let k = basis.len();
    let h = CMatrix::from_fn(k, k, |a, b| {
        let (ma, ca) = basis[a];
        let (mb, cb) = basis[b];
        if a == b {
            C64::new(params.energy * n as f64, 0.0)
        } else if ma == mb + 1 {
            // ⟨m+1, c−1| m† c |m, c⟩ = √(m+1)·√c
            C64::new(params.coupling * ((mb + 1) as f64 * cb as f64).sqrt(), 0.0)
        } else if mb == ma + 1 {
            C64::new(params.coupling * ((ma + 1) as f64 * ca as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let eig = hermitian_eig(&h)?;
    let mut out = CMatrix::zeros(k, k);
    for (idx, &lambda) in eig.values.iter().enumerate() {
        let v = eig.vector(idx);
        let ph = C64::from_polar(1.0, -lambda * t);
        for i in 0..k {
            for j in 0..k {
                out[(i, j)] += v[i] * v[j].conj() * ph;
            }
        }
    }
    Ok(out)
}

/// Label of the (first) cavity slot.
pub fn cavity_label(layout: &SlotLayout) -> Result<&str> {
    layout
        .first_with_role(SlotRole::Cavity)
        .ok_or_else(|| Error::UnknownLabel("<cavity>".into()))
}

/// Refuses states with weight in pair sectors that the truncation cuts.
pub fn check_pair_support<S: QuantumState>(state: &S, mode: &str, cavity: &str, cutoff: usize) -> Result<()> {
    let layout = state.layout();
    let pm = layout.position(mode)?;
    let pc = layout.position(cavity)?;
    let weight = state.weight_where(|occ| occ[pm] + occ[pc] > cutoff);
    if weight > TRUNCATION_TOL {
        return Err(Error::TruncationViolation {
            slots: format!("{mode}, {cavity}"),
            weight,
        });
    }
    Ok(())
}

fn check_slot_dims(layout: &SlotLayout, labels: &[&str], params: &PhysicalParams) -> Result<()> {
    for l in labels {
        let dim = layout.slot(l)?.dim;
        if dim != params.fock_cutoff + 1 {
            return Err(Error::DimensionMismatch {
                expected: params.fock_cutoff + 1,
                found: dim,
            });
        }
    }
    Ok(())
}

/// Resonant interaction of `mode` with the cavity for time `t`.
pub fn couple<S: QuantumState>(state: &S, mode: &str, t: f64, params: &PhysicalParams) -> Result<S> {
    let cavity = cavity_label(state.layout())?.to_string();
    check_slot_dims(state.layout(), &[mode, &cavity], params)?;
    check_pair_support(state, mode, &cavity, params.fock_cutoff)?;
    let prop = pair_propagator(params, t)?;
    let mut out = state.clone();
    out.apply(prop.matrix(), &[mode, &cavity])?;
    Ok(out)
}

/// Phase `e^{−iδt·n}` on the addressed mode's occupation `n`. The cavity is
/// unaffected by the bias field.
pub fn detune_phase<S: QuantumState>(state: &S, mode: &str, detuning: f64, t: f64) -> Result<S> {
    let dim = state.layout().slot(mode)?.dim;
    let phases: Vec<C64> = (0..dim)
        .map(|n| C64::from_polar(1.0, -detuning * t * n as f64))
        .collect();
    let mut out = state.clone();
    out.apply(&CMatrix::diag(&phases), &[mode])?;
    Ok(out)
}

/// Kraus operators of photon loss on a `dim`-level cavity with per-photon
/// survival probability `survival`.
///
/// `K_k = Σ_n √(C(n,k) (1−s)^k s^(n−k)) |n−k⟩⟨n|`.
pub fn amplitude_damping_kraus(dim: usize, survival: f64) -> Vec<CMatrix> {
    let lost = 1.0 - survival;
    (0..dim)
        .map(|k| {
            let mut m = CMatrix::zeros(dim, dim);
            for n in k..dim {
                let amp = (binomial(n, k) * lost.powi(k as i32) * survival.powi((n - k) as i32)).sqrt();
                m[(n - k, n)] = C64::new(amp, 0.0);
            }
            m
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Photon leakage from the cavity over time `t`: amplitude damping with
/// survival `e^{−κt}` per photon.
pub fn cavity_loss(state: &DensityMatrix, t: f64, params: &PhysicalParams) -> Result<DensityMatrix> {
    params.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "loss time must be non-negative, got {t}"
        )));
    }
    let cavity = cavity_label(state.layout())?.to_string();
    let dim = state.layout().slot(&cavity)?.dim;
    let survival = (-params.cavity_decay * t).exp();
    state.apply_kraus(&amplitude_damping_kraus(dim, survival), &[&cavity])
}

/// Single-photon loss estimate over an active window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageBudget {
    pub active_time: f64,
    /// `κ t`
    pub linear: f64,
    /// `1 − e^{−κt}`
    pub exponential: f64,
}

pub fn leakage_budget(cavity_decay: f64, active_time: f64) -> LeakageBudget {
    let kt = cavity_decay * active_time;
    LeakageBudget {
        active_time,
        linear: kt,
        exponential: -(-kt).exp_m1(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statekit::StateVector;

    fn unit() -> PhysicalParams {
        PhysicalParams::with_coupling(1.0)
    }

    fn pair_state(m: usize, c: usize) -> StateVector {
        StateVector::basis(pair_layout(&unit()).unwrap(), &[m, c]).unwrap()
    }

    #[test]
    fn h1_examples() {
        let h = build_h1(&unit());
        assert_eq!(h, CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]));
        let p = PhysicalParams {
            energy: 0.3,
            coupling: 0.7,
            ..unit()
        };
        let eig = hermitian_eig(&build_h1(&p)).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] + 0.4).abs() < 1e-14);
    }

    #[test]
    fn h2_zero_params_is_zero() {
        let p = PhysicalParams {
            energy: 0.0,
            coupling: 0.0,
            ..unit()
        };
        assert_eq!(build_h2(&p).max_abs(), 0.0);
    }

    #[test]
    fn reference_coupling_and_swap_time() {
        let p = PhysicalParams::reference_device();
        assert!((p.coupling / (2.0 * PI) - 6.0e6).abs() < 1e-6);
        // τ = 1/(4·6 MHz) ≈ 41.7 ns
        assert!((p.swap_time() - 41.666_666_7e-9).abs() < 1e-15);
        assert!((1.0 / p.cavity_decay - 3.183_098_9e-6).abs() < 1e-12);
    }

    #[test]
    fn full_swap_moves_single_excitation_into_cavity() {
        let p = unit();
        let tau = p.swap_time();
        let out = couple(&pair_state(1, 0), "mode", tau, &p).unwrap();
        let a = out.amplitude(&[0, 1]).unwrap();
        assert!((a - C64::new(0.0, -1.0)).norm() < 1e-14);

        let twice = couple(&out, "mode", tau, &p).unwrap();
        assert!((twice.amplitude(&[1, 0]).unwrap() + 1.0).norm() < 1e-14);
    }

    #[test]
    fn full_swap_of_two_excitations() {
        let p = unit();
        let out = couple(&pair_state(2, 0), "mode", p.swap_time(), &p).unwrap();
        assert!((out.amplitude(&[0, 2]).unwrap() + 1.0).norm() < 1e-14);
    }

    #[test]
    fn quarter_swap_splits_doubly_occupied_pair() {
        let p = unit();
        let out = couple(&pair_state(1, 1), "mode", PI / 4.0, &p).unwrap();
        let a20 = out.amplitude(&[2, 0]).unwrap();
        let a02 = out.amplitude(&[0, 2]).unwrap();
        assert!(out.amplitude(&[1, 1]).unwrap().norm() < 1e-14);
        assert!((a20.norm() - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((a20 - a02).norm() < 1e-14);
    }

    #[test]
    fn zero_time_is_identity() {
        let prop = pair_propagator(&unit(), 0.0).unwrap();
        assert!(prop.matrix().max_abs_diff(&CMatrix::identity(9)) < 1e-15);
    }

    #[test]
    fn detected_truncation_violation() {
        let p = unit();
        let err = couple(&pair_state(2, 1), "mode", 0.1, &p).unwrap_err();
        assert!(matches!(err, Error::TruncationViolation { .. }));
    }

    #[test]
    fn negative_time_rejected() {
        assert!(pair_propagator(&unit(), -1.0).is_err());
    }

    #[test]
    fn detuning_examples() {
        let layout = SlotLayout::builder().mode("A").mode("B").cavity("C").build().unwrap();
        let s = FRAC_1_SQRT_2;
        let psi = StateVector::superposition(
            layout,
            &[(C64::new(s, 0.0), &[1, 0, 0]), (C64::new(s, 0.0), &[0, 1, 0])],
        )
        .unwrap();
        let out = detune_phase(&psi, "B", 2.0, 0.3).unwrap();
        assert!((out.amplitude(&[1, 0, 0]).unwrap() - s).norm() < 1e-15);
        let expected = C64::from_polar(s, -0.6);
        assert!((out.amplitude(&[0, 1, 0]).unwrap() - expected).norm() < 1e-15);

        let full = detune_phase(&psi, "B", 2.0 * PI, 1.0).unwrap();
        assert!(crate::statekit::phase_aligned_distance(&full, &psi) < 1e-14);
    }

    #[test]
    fn loss_examples() {
        let mut p = PhysicalParams::reference_device();
        let layout = SlotLayout::builder().mode("M").cavity("C").build().unwrap();
        let one = StateVector::basis(layout.clone(), &[0, 1]).unwrap().to_density();
        // κt = 0.1571
        let t = 0.1571 / p.cavity_decay;
        let out = cavity_loss(&one, t, &p).unwrap();
        let survive = out.entry(&[0, 1], &[0, 1]).unwrap().re;
        assert!((survive - (-0.1571f64).exp()).abs() < 1e-12);
        assert!((survive - 0.8546).abs() < 1e-4);
        assert!((out.trace() - 1.0).abs() < 1e-14);

        let vac = StateVector::vacuum(layout).to_density();
        assert_eq!(cavity_loss(&vac, t, &p).unwrap(), vac);

        p.cavity_decay = 0.0;
        assert!(cavity_loss(&one, t, &p).unwrap().matrix().max_abs_diff(one.matrix()) < 1e-15);
    }

    #[test]
    fn budget_at_reference_numbers() {
        let b = leakage_budget(1.0 / 3.183e-6, 0.5e-6);
        assert!((b.linear - 0.15708).abs() < 1e-4);
        assert!((b.exponential - 0.14536).abs() < 1e-4);
    }

    #[test]
    fn higher_cutoff_propagator_is_unitary() {
        let p = PhysicalParams {
            fock_cutoff: 3,
            ..unit()
        };
        let prop = pair_propagator(&p, 0.37).unwrap();
        assert!(prop.matrix().unitarity_deviation() < 1e-10);
    }
}
