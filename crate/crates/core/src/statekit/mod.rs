// SPDX-License-Identifier: Apache-2.0

//! Dense linear algebra over small labeled tensor products of Fock-truncated
//! slots. Every other module builds on these types.

mod eig;
mod layout;
mod matrix;
mod state;

pub use eig::{hermitian_eig, project_to_density, psd_sqrt, Eigen, HERMITIAN_TOL, JACOBI_TOL};
pub use layout::{LayoutBuilder, Slot, SlotLayout, SlotRole, DEFAULT_SLOT_DIM};
pub use matrix::CMatrix;
pub use state::{
    embed, partial_trace, phase_aligned_distance, state_fidelity, tensor_product, DensityMatrix, Operator,
    QuantumState, StateVector, Tensor, NORM_TOL, UNITARY_TOL,
};

pub use num_complex::Complex64 as C64;
