// SPDX-License-Identifier: Apache-2.0

//! Numerically exact simulation of a spin-ensemble quantum memory coupled to
//! a stripline cavity and a number-resolving photon detector.
//!
//! Collective spin-wave modes are modeled as Fock-truncated bosonic slots that
//! exchange excitations with a single cavity slot. On top of that substrate
//! the crate provides:
//!
//! - [`dynamics`]: mode-cavity propagators, detuning phases, cavity loss.
//! - [`logical`]: dual-rail qubits and their X/Z rotations built from swaps.
//! - [`protocol`]: the faulty "exactly n photons?" measurement and the
//!   two-block parity projection (four-readout and flag-deferred variants),
//!   plus a Monte Carlo trajectory engine.
//! - [`metrics`]: fidelity, Wootters concurrence, entanglement of formation,
//!   the generalized 2-concurrence via a convex-roof optimizer, and the
//!   dephase/discount post-processing channels.
//! - [`tomography`]: sampled single-photon readout in two bases and
//!   reconstruction of the two-qubit state.
//!
//! All evolution happens on density matrices; the register used by the
//! protocol is four modes plus the cavity (3⁵ = 243 levels), or 486 levels
//! with the two-level readout flag.

pub mod analytic;
pub mod dynamics;
mod error;
pub mod logical;
pub mod metrics;
pub mod protocol;
pub mod statekit;
pub mod tomography;

pub use error::{Error, Result};
