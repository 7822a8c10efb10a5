// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("slot label `{0}` appears more than once")]
    DuplicateLabel(String),

    #[error("unknown slot label `{0}`")]
    UnknownLabel(String),

    #[error("slot `{label}` has dimension {dim}; at least two levels are required")]
    SlotTooSmall { label: String, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix has a significantly negative eigenvalue {0:.3e}")]
    NotPositive(f64),

    #[error("operator flagged unitary deviates from unitarity by {0:.3e}")]
    NotUnitary(f64),

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("weight {weight:.3e} above the complete excitation sectors of slots ({slots})")]
    TruncationViolation { slots: String, weight: f64 },

    #[error("slot `{label}` must be empty but holds weight {weight:.3e} in excited levels")]
    SlotOccupied { label: String, weight: f64 },

    #[error(
        "qubit ({rail0}, {rail1}) is not dual-rail encoded: weight {weight:.3e} outside the one-excitation subspace"
    )]
    InvalidEncoding { rail0: String, rail1: String, weight: f64 },

    #[error("measurement outcome {0} has zero probability")]
    ZeroProbability(&'static str),

    #[error("probability `{name}` = {value} lies outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state has weight {0:.3e} outside the mapped quinit levels")]
    Unmappable(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed readout record `{0}`")]
    MalformedRecord(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}
