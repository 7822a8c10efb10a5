// SPDX-License-Identifier: Apache-2.0

//! Fidelity and entanglement measures of the protocol output.

mod convex_roof;
mod measures;
mod quinit;

use serde::{Deserialize, Serialize};

pub use convex_roof::{convex_roof_c2, ConvexRoofOptions, ConvexRoofResult, StartReport};
pub use measures::{
    entanglement_of_formation, eof_from_concurrence, fidelity, i_concurrence_pure, trace_distance, wootters_concurrence,
};
pub use quinit::{
    dephase_outside, discount, quinit_pair_layout, to_quinits, Discounted, OutsideLevels, QuinitState, COMPUTATIONAL,
    QUINIT_DIM, QUINIT_LEVELS,
};

use crate::analytic::psi_plus;
use crate::error::Result;
use crate::logical::DualRailQubit;
use crate::statekit::{DensityMatrix, StateVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportVariant {
    Raw,
    DephasedOutside,
    Discounted,
}

impl ReportVariant {
    pub const ALL: [ReportVariant; 3] = [
        ReportVariant::Raw,
        ReportVariant::DephasedOutside,
        ReportVariant::Discounted,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub variant: ReportVariant,
    pub fidelity_psi_plus: f64,
    /// For the quinit variants: of the renormalized computational block.
    pub wootters_c: f64,
    pub e_f: f64,
    pub c2_squared: f64,
    /// Spread of the convex-roof starts.
    pub c2_spread: f64,
}

/// `(|01⟩ + |10⟩)/√2` on two quinits.
pub fn psi_plus_quinit() -> StateVector {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    StateVector::superposition(quinit_pair_layout(), &[(s, &[0, 1]), (s, &[1, 0])]).expect("static state")
}

/// Metrics of one post-processing variant of a final mode state.
pub fn entanglement_report(
    rho_modes: &DensityMatrix,
    q1: &DualRailQubit,
    q2: &DualRailQubit,
    variant: ReportVariant,
    opts: &ConvexRoofOptions,
) -> Result<EntanglementReport> {
    let q = to_quinits(rho_modes, q1, q2)?;
    let (full, block, target) = match variant {
        ReportVariant::Raw => {
            let block = q.projected_qubits()?;
            (q.into_density(), block, psi_plus_quinit())
        }
        ReportVariant::DephasedOutside => {
            let d = dephase_outside(&q, OutsideLevels::All)?;
            let block = d.projected_qubits()?;
            (d.into_density(), block, psi_plus_quinit())
        }
        ReportVariant::Discounted => {
            let d = discount(&q)?.state;
            (d.clone(), d, psi_plus())
        }
    };
    let wootters_c = wootters_concurrence(&block)?;
    let roof = convex_roof_c2(&full, &["Q1"], opts)?;
    Ok(EntanglementReport {
        variant,
        fidelity_psi_plus: fidelity(&full, &target.to_density())?,
        wootters_c,
        e_f: eof_from_concurrence(wootters_c),
        c2_squared: roof.value,
        c2_spread: roof.spread,
    })
}
