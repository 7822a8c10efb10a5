// SPDX-License-Identifier: Apache-2.0

//! Dual-rail logical qubits.
//!
//! A qubit is one excitation shared by two modes: `|0⟩_L = |10⟩`,
//! `|1⟩_L = |01⟩` on `(rail0, rail1)`. All gates are sequences of mode-cavity
//! swaps and bias-field detunings; the cavity is empty before and after each
//! gate.
//!
//! The swap legs carry exact `−i` phases. The bare X pulse sequence
//! (swap rail0, partial swap rail1, swap rail0) therefore acts as
//! `[[−cos θ′, −sin θ′], [−sin θ′, cos θ′]]`; [`rotate_x`] conjugates it with
//! quarter-turn phase gates so that the logical action is exactly
//! `[[cos θ′, −i sin θ′], [−i sin θ′, cos θ′]]` up to a global phase.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::{cavity_label, couple, detune_phase, PhysicalParams};
use crate::error::{Error, Result};
use crate::statekit::{CMatrix, DensityMatrix, QuantumState, SlotLayout, StateVector, C64};

/// Weight tolerated outside an expected subspace before a precondition fails.
pub const SUPPORT_TOL: f64 = 1e-10;

pub const M1: &str = "M1";
pub const M2: &str = "M2";
pub const M3: &str = "M3";
pub const M4: &str = "M4";
pub const CAVITY: &str = "C";
pub const FLAG: &str = "F";

/// Four memory modes and the cavity, optionally followed by the readout flag.
pub fn register_layout(with_flag: bool) -> SlotLayout {
    let mut b = SlotLayout::builder().mode(M1).mode(M2).mode(M3).mode(M4).cavity(CAVITY);
    if with_flag {
        b = b.flag(FLAG);
    }
    b.build().expect("static layout")
}

/// The four memory modes alone.
pub fn modes_layout() -> SlotLayout {
    register_layout(false).select(&[M1, M2, M3, M4]).expect("static layout")
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DualRailQubit {
    pub rail0: String,
    pub rail1: String,
}

impl DualRailQubit {
    pub fn new(rail0: &str, rail1: &str) -> Result<Self> {
        if rail0 == rail1 {
            return Err(Error::DuplicateLabel(rail0.into()));
        }
        Ok(Self {
            rail0: rail0.into(),
            rail1: rail1.into(),
        })
    }

    /// `Q1 = (M1, M2)`, `Q2 = (M3, M4)`.
    pub fn standard_pair() -> (Self, Self) {
        (
            Self {
                rail0: M1.into(),
                rail1: M2.into(),
            },
            Self {
                rail0: M3.into(),
                rail1: M4.into(),
            },
        )
    }

    pub fn rails(&self) -> [&str; 2] {
        [&self.rail0, &self.rail1]
    }
}

fn require_empty<S: QuantumState>(state: &S, label: &str) -> Result<()> {
    let p = state.layout().position(label)?;
    let weight = state.weight_where(|occ| occ[p] > 0);
    if weight > SUPPORT_TOL {
        return Err(Error::SlotOccupied {
            label: label.into(),
            weight,
        });
    }
    Ok(())
}

fn require_encoded<S: QuantumState>(state: &S, q: &DualRailQubit) -> Result<()> {
    let layout = state.layout();
    let (p0, p1) = (layout.position(&q.rail0)?, layout.position(&q.rail1)?);
    let weight = state.weight_where(|occ| !matches!((occ[p0], occ[p1]), (1, 0) | (0, 1)));
    if weight > SUPPORT_TOL {
        return Err(Error::InvalidEncoding {
            rail0: q.rail0.clone(),
            rail1: q.rail1.clone(),
            weight,
        });
    }
    Ok(())
}

/// Loads one photon into the empty cavity and swaps it into rail0.
pub fn prepare_zero<S: QuantumState>(state: &S, q: &DualRailQubit, params: &PhysicalParams) -> Result<S> {
    let cavity = cavity_label(state.layout())?.to_string();
    for label in [q.rail0.as_str(), q.rail1.as_str(), cavity.as_str()] {
        require_empty(state, label)?;
    }
    let dim = state.layout().slot(&cavity)?.dim;
    // photon source: exchange Fock levels 0 and 1 of the cavity
    let load = CMatrix::from_fn(dim, dim, |i, j| {
        let hit = match (i, j) {
            (0, 1) | (1, 0) => true,
            _ => i == j && i > 1,
        };
        C64::new(if hit { 1.0 } else { 0.0 }, 0.0)
    });
    let mut out = state.clone();
    out.apply(&load, &[&cavity])?;
    couple(&out, &q.rail0, params.swap_time(), params)
}

/// Bare X pulse sequence: full swap rail0↔C, partial swap C↔rail1 for
/// `θ′/J`, full swap rail0↔C. Logical action `[[−c, −s], [−s, c]]`.
pub(crate) fn x_pulse_sequence<S: QuantumState>(
    state: &S,
    q: &DualRailQubit,
    theta: f64,
    params: &PhysicalParams,
) -> Result<S> {
    let tau = params.swap_time();
    let theta = theta.rem_euclid(TAU);
    let s = couple(state, &q.rail0, tau, params)?;
    let s = couple(&s, &q.rail1, params.time_for_angle(theta), params)?;
    couple(&s, &q.rail0, tau, params)
}

/// Bare Z pulse sequence: swap rail0 into the cavity, detune rail1 by `δ = J`
/// for `φ′/δ`, swap back. Logical action `diag(−1, e^{−iφ′})`.
fn z_pulse_sequence<S: QuantumState>(state: &S, q: &DualRailQubit, phase: f64, params: &PhysicalParams) -> Result<S> {
    let tau = params.swap_time();
    let detuning = params.coupling;
    let s = couple(state, &q.rail0, tau, params)?;
    let s = detune_phase(&s, &q.rail1, detuning, phase.rem_euclid(TAU) / detuning)?;
    couple(&s, &q.rail0, tau, params)
}

pub(crate) fn rotate_z_unchecked<S: QuantumState>(
    state: &S,
    q: &DualRailQubit,
    phi: f64,
    params: &PhysicalParams,
) -> Result<S> {
    // the two swap legs contribute (−i)² = −1 on |0⟩_L
    z_pulse_sequence(state, q, phi - PI, params)
}

pub(crate) fn rotate_x_unchecked<S: QuantumState>(
    state: &S,
    q: &DualRailQubit,
    theta: f64,
    params: &PhysicalParams,
) -> Result<S> {
    let s = rotate_z_unchecked(state, q, FRAC_PI_2, params)?;
    let s = x_pulse_sequence(&s, q, theta, params)?;
    rotate_z_unchecked(&s, q, FRAC_PI_2, params)
}

fn check_gate_preconditions<S: QuantumState>(state: &S, q: &DualRailQubit) -> Result<()> {
    let cavity = cavity_label(state.layout())?.to_string();
    require_empty(state, &cavity)?;
    require_encoded(state, q)
}

/// Logical `[[cos θ′, −i sin θ′], [−i sin θ′, cos θ′]]` up to a global phase.
pub fn rotate_x<S: QuantumState>(state: &S, q: &DualRailQubit, theta: f64, params: &PhysicalParams) -> Result<S> {
    check_gate_preconditions(state, q)?;
    rotate_x_unchecked(state, q, theta, params)
}

/// Logical `diag(1, e^{−iφ})` up to a global phase.
pub fn rotate_z<S: QuantumState>(state: &S, q: &DualRailQubit, phi: f64, params: &PhysicalParams) -> Result<S> {
    check_gate_preconditions(state, q)?;
    rotate_z_unchecked(state, q, phi, params)
}

/// `(|0⟩_L + |1⟩_L)/√2` up to a global phase, from empty rails.
pub fn prepare_plus<S: QuantumState>(state: &S, q: &DualRailQubit, params: &PhysicalParams) -> Result<S> {
    let s = prepare_zero(state, q, params)?;
    let s = rotate_x(&s, q, FRAC_PI_4, params)?;
    rotate_z(&s, q, -FRAC_PI_2, params)
}

/// `|+⟩_{Q1}|+⟩_{Q2}` on the standard register, built by the gate sequences.
pub fn plus_plus_register(with_flag: bool, params: &PhysicalParams) -> Result<DensityMatrix> {
    let (q1, q2) = DualRailQubit::standard_pair();
    let psi = StateVector::vacuum(register_layout(with_flag));
    let psi = prepare_plus(&psi, &q1, params)?;
    let psi = prepare_plus(&psi, &q2, params)?;
    Ok(psi.to_density())
}

/// Occupations for the logical basis state `bits` (first qubit most
/// significant), all other slots empty.
fn logical_occupations(layout: &SlotLayout, qubits: &[DualRailQubit], bits: usize) -> Result<Vec<usize>> {
    let mut occ = vec![0; layout.len()];
    let n = qubits.len();
    for (k, q) in qubits.iter().enumerate() {
        let bit = (bits >> (n - 1 - k)) & 1;
        let rail = if bit == 0 { &q.rail0 } else { &q.rail1 };
        occ[layout.position(rail)?] = 1;
    }
    Ok(occ)
}

fn logical_indices(layout: &SlotLayout, qubits: &[DualRailQubit]) -> Result<Vec<usize>> {
    (0..1usize << qubits.len())
        .map(|bits| layout.index_of(&logical_occupations(layout, qubits, bits)?))
        .collect()
}

/// Projection of a pure state onto the computational dual-rail basis.
#[derive(Clone, Debug)]
pub struct LogicalAmplitudes {
    /// Indexed by the logical bit string, first qubit most significant.
    pub amplitudes: Vec<C64>,
    /// Weight outside the computational subspace.
    pub leakage: f64,
}

/// Amplitudes on products of `{|10⟩, |01⟩}` per qubit, with every other slot
/// in vacuum.
pub fn logical_amplitudes(state: &StateVector, qubits: &[DualRailQubit]) -> Result<LogicalAmplitudes> {
    let idx = logical_indices(state.layout(), qubits)?;
    let amplitudes: Vec<C64> = idx.iter().map(|&i| state.amplitudes()[i]).collect();
    let inside: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    Ok(LogicalAmplitudes {
        amplitudes,
        leakage: (state.norm_sqr() - inside).max(0.0),
    })
}

/// Density-matrix counterpart of [`logical_amplitudes`].
#[derive(Clone, Debug)]
pub struct LogicalBlock {
    /// Unnormalized computational block.
    pub matrix: CMatrix,
    pub leakage: f64,
}

pub fn logical_block(rho: &DensityMatrix, qubits: &[DualRailQubit]) -> Result<LogicalBlock> {
    let idx = logical_indices(rho.layout(), qubits)?;
    let n = idx.len();
    let matrix = CMatrix::from_fn(n, n, |a, b| rho.matrix()[(idx[a], idx[b])]);
    let inside = matrix.trace().re;
    Ok(LogicalBlock {
        matrix,
        leakage: (rho.trace() - inside).max(0.0),
    })
}
