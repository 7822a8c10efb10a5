// SPDX-License-Identifier: Apache-2.0

//! Faulty photon-number measurement and the parity-projection protocol.
//!
//! One building block on the rail pair `(A, B)` is: swap `A` into the cavity,
//! couple `B` for `π/4J`, check "two photons?", couple `B` for `π/2J`, check
//! again, couple `B` for `π/4J`, swap `A` back. The `B` interaction totals a
//! full `2τ` cycle, so single-excitation components return untouched, while
//! the `|1_A 1_B⟩` component is pushed through `|2⟩` cavity states and removed
//! by the NO-conditioned checks. Running the block on the rail0 pair and then
//! on the rail1 pair keeps only odd logical parity.

mod engine;
mod measurement;
mod trajectories;

pub use engine::{
    block_schedule, flag_cnot, parity_block, parity_projection, parity_projection_deferred, reset_kraus, Action,
    BlockOutcome, Protocol, ProtocolResult, SlotNames, Snapshot, StepRecord, Timing, Variant, CHECK_PHOTONS,
    FLAG_GATE_TIME, READOUT_TIME,
};
pub use measurement::{
    measure_cavity_n, measure_slot, Branch, Conditioning, MeasurementModel, MeasurementResult, Outcome, BRANCH_TOL,
};
pub use trajectories::{run_trajectories, TrajectorySummary};

pub use crate::analytic::{pf_closed_form, pf_factors};
