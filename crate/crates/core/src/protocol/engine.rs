// SPDX-License-Identifier: Apache-2.0

//! Density-matrix engine for the two-block parity projection.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::measurement::{measure_slot, MeasurementModel, Outcome};
use crate::dynamics::{cavity_label, cavity_loss, couple, leakage_budget, LeakageBudget, PhysicalParams};
use crate::error::{Error, Result};
use crate::logical::{DualRailQubit, SUPPORT_TOL};
use crate::statekit::{partial_trace, CMatrix, DensityMatrix, QuantumState, SlotRole, C64};

/// Probe readout of the measurement cavity.
pub const READOUT_TIME: f64 = 400e-9;
/// Photon-number-controlled flag flip.
pub const FLAG_GATE_TIME: f64 = 50e-9;
/// Photon number the parity checks look for.
pub const CHECK_PHOTONS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub readout: f64,
    pub flag_gate: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            readout: READOUT_TIME,
            flag_gate: FLAG_GATE_TIME,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Two cavity readouts per block.
    #[default]
    Standard,
    /// Checks copied onto the flag, one flag readout per block.
    Deferred,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Standard => "standard",
            Variant::Deferred => "deferred",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Variant::Standard),
            "deferred" => Ok(Variant::Deferred),
            other => Err(Error::InvalidParameter(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    /// Resonant mode-cavity interaction.
    Couple { mode: String, duration: f64 },
    /// "Exactly `photons` in `slot`?", continuing only on NO.
    Check { slot: String, photons: usize },
    /// Flip the flag iff the cavity holds two photons.
    FlagCnot,
    /// Return the flag to `|0⟩`.
    FlagReset,
}

impl Action {
    pub fn duration(&self, timing: &Timing) -> f64 {
        match self {
            Action::Couple { duration, .. } => *duration,
            Action::Check { .. } => timing.readout,
            Action::FlagCnot => timing.flag_gate,
            Action::FlagReset => 0.0,
        }
    }

    pub fn is_readout(&self) -> bool {
        matches!(self, Action::Check { .. })
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Couple { mode, .. } => write!(f, "couple({mode})"),
            Action::Check { slot, photons } => write!(f, "check({slot}, n={photons})"),
            Action::FlagCnot => f.write_str("flag_cnot"),
            Action::FlagReset => f.write_str("flag_reset"),
        }
    }
}

/// Operation sequence of one building block acting on `(rail_a, rail_b)`.
///
/// The deferred block puts its flag-CNOTs exactly where the standard block
/// reads out, and reads the flag once after the closing swap.
pub fn block_schedule(
    rail_a: &str,
    rail_b: &str,
    variant: Variant,
    params: &PhysicalParams,
    slots: &SlotNames,
) -> Vec<Action> {
    let tau = params.swap_time();
    let t1 = params.time_for_angle(FRAC_PI_4);
    let t2 = tau;
    let t3 = t1;
    let swap = || Action::Couple {
        mode: rail_a.into(),
        duration: tau,
    };
    let partial = |duration| Action::Couple {
        mode: rail_b.into(),
        duration,
    };
    let checkpoint = || match variant {
        Variant::Standard => Action::Check {
            slot: slots.cavity.clone(),
            photons: CHECK_PHOTONS,
        },
        Variant::Deferred => Action::FlagCnot,
    };
    let mut steps = vec![
        swap(),
        partial(t1),
        checkpoint(),
        partial(t2),
        checkpoint(),
        partial(t3),
        swap(),
    ];
    if variant == Variant::Deferred {
        steps.push(Action::Check {
            slot: slots.flag.clone(),
            photons: 1,
        });
        steps.push(Action::FlagReset);
    }
    steps
}

/// Labels of the register's cavity and (for the deferred variant) flag.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SlotNames {
    pub cavity: String,
    pub flag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based block index.
    pub block: usize,
    pub action: Action,
    pub start: f64,
    pub duration: f64,
    /// NO probability for readouts.
    pub no_probability: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub label: String,
    pub state: DensityMatrix,
}

#[derive(Clone, Debug)]
pub struct ProtocolResult {
    pub variant: Variant,
    /// Post-selected state of the memory modes (cavity and flag traced out).
    pub final_state: DensityMatrix,
    /// Post-selected state of the whole register.
    pub register_state: DensityMatrix,
    pub success_probability: f64,
    pub step_log: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    /// Weight left in the cavity at the end.
    pub cavity_residual: f64,
}

impl ProtocolResult {
    pub fn no_probabilities(&self) -> Vec<f64> {
        self.step_log.iter().filter_map(|s| s.no_probability).collect()
    }

    pub fn readout_count(&self) -> usize {
        self.step_log.iter().filter(|s| s.action.is_readout()).count()
    }

    pub fn active_time(&self) -> f64 {
        self.step_log.iter().map(|s| s.duration).sum()
    }

    pub fn leakage_budget(&self, params: &PhysicalParams) -> LeakageBudget {
        leakage_budget(params.cavity_decay, self.active_time())
    }

    pub fn snapshot(&self, label: &str) -> Option<&DensityMatrix> {
        self.snapshots.iter().find(|s| s.label == label).map(|s| &s.state)
    }
}

/// Parity-projection driver.
#[derive(Clone, Debug)]
pub struct Protocol {
    pub model: MeasurementModel,
    pub params: PhysicalParams,
    pub timing: Timing,
    pub variant: Variant,
    /// Apply cavity photon loss for the duration of every step.
    pub cavity_loss: bool,
}

impl Protocol {
    pub fn new(model: MeasurementModel, params: PhysicalParams, variant: Variant) -> Self {
        Self {
            model,
            params,
            timing: Timing::default(),
            variant,
            cavity_loss: false,
        }
    }

    fn slot_names(&self, state: &DensityMatrix) -> Result<SlotNames> {
        let layout = state.layout();
        let flag = match self.variant {
            Variant::Standard => String::new(),
            Variant::Deferred => layout
                .first_with_role(SlotRole::Flag)
                .map(String::from)
                .ok_or_else(|| Error::UnknownLabel("<flag>".into()))?,
        };
        Ok(SlotNames {
            cavity: cavity_label(layout)?.to_string(),
            flag,
        })
    }

    /// Full schedule as `(block, action)` pairs.
    pub fn schedule(&self, q1: &DualRailQubit, q2: &DualRailQubit, slots: &SlotNames) -> Vec<(usize, Action)> {
        [(&q1.rail0, &q2.rail0), (&q1.rail1, &q2.rail1)]
            .iter()
            .enumerate()
            .flat_map(|(b, (a, r))| {
                block_schedule(a, r, self.variant, &self.params, slots)
                    .into_iter()
                    .map(move |s| (b + 1, s))
            })
            .collect()
    }

    fn require_cavity_empty(&self, state: &DensityMatrix) -> Result<String> {
        let cavity = cavity_label(state.layout())?.to_string();
        let pos = state.layout().position(&cavity)?;
        let weight = state.weight_where(|occ| occ[pos] > 0);
        if weight > SUPPORT_TOL {
            return Err(Error::SlotOccupied { label: cavity, weight });
        }
        Ok(cavity)
    }

    /// Runs one building block on `(rail_a, rail_b)` and returns the
    /// post-selected state, the block's NO probability and its step log.
    pub fn parity_block(&self, state: &DensityMatrix, rail_a: &str, rail_b: &str) -> Result<BlockOutcome> {
        self.require_cavity_empty(state)?;
        let slots = self.slot_names(state)?;
        let actions: Vec<(usize, Action)> = block_schedule(rail_a, rail_b, self.variant, &self.params, &slots)
            .into_iter()
            .map(|a| (1, a))
            .collect();
        self.execute(state, &actions, &slots)
    }

    pub fn run(&self, state: &DensityMatrix, q1: &DualRailQubit, q2: &DualRailQubit) -> Result<ProtocolResult> {
        self.model.validate()?;
        self.params.validate()?;
        let cavity = self.require_cavity_empty(state)?;
        let slots = self.slot_names(state)?;
        let outcome = self.execute(state, &self.schedule(q1, q2, &slots), &slots)?;

        let register_state = outcome.state;
        let pos = register_state.layout().position(&cavity)?;
        let cavity_residual = register_state.weight_where(|occ| occ[pos] > 0);
        let modes: Vec<&str> = register_state
            .layout()
            .slots()
            .iter()
            .filter(|s| s.role == SlotRole::Mode)
            .map(|s| s.label.as_str())
            .collect();
        let final_state = partial_trace(&register_state, &modes)?;
        let mut snapshots = outcome.snapshots;
        snapshots.push(Snapshot {
            label: "final".into(),
            state: register_state.clone(),
        });
        Ok(ProtocolResult {
            variant: self.variant,
            final_state,
            register_state,
            success_probability: outcome.probability,
            step_log: outcome.log,
            snapshots,
            cavity_residual,
        })
    }

    fn execute(&self, state: &DensityMatrix, actions: &[(usize, Action)], slots: &SlotNames) -> Result<BlockOutcome> {
        let SlotNames { cavity, flag } = slots;
        let mut rho = state.clone();
        let mut probability = 1.0;
        let mut clock = 0.0;
        let mut log = Vec::with_capacity(actions.len());
        let mut snapshots = Vec::new();
        let mut checkpoint = 0;

        for (idx, (block, action)) in actions.iter().enumerate() {
            let duration = action.duration(&self.timing);
            let mut no_probability = None;
            match action {
                Action::Couple { mode, duration } => {
                    rho = couple(&rho, mode, *duration, &self.params)?;
                }
                Action::Check { slot, photons } => {
                    let (p, next) = measure_slot(&rho, slot, *photons, &self.model)?.take(Outcome::No)?;
                    probability *= p;
                    no_probability = Some(p);
                    rho = next;
                }
                Action::FlagCnot => {
                    rho.apply(&flag_cnot(rho.layout().slot(cavity)?.dim), &[cavity, flag])?;
                }
                Action::FlagReset => {
                    rho = rho.apply_kraus(&reset_kraus(), &[flag])?;
                }
            }
            if self.cavity_loss && duration > 0.0 {
                rho = cavity_loss(&rho, duration, &self.params)?;
            }
            log.push(StepRecord {
                block: *block,
                action: action.clone(),
                start: clock,
                duration,
                no_probability,
            });
            clock += duration;

            if matches!(action, Action::FlagCnot) || matches!(action, Action::Check { slot, .. } if slot == cavity) {
                checkpoint += 1;
                snapshots.push(Snapshot {
                    label: format!("block{block}.check{checkpoint}"),
                    state: rho.clone(),
                });
            }
            let block_ends = actions.get(idx + 1).is_none_or(|(next, _)| next != block);
            if block_ends {
                checkpoint = 0;
                snapshots.push(Snapshot {
                    label: format!("block{block}"),
                    state: rho.clone(),
                });
            }
        }
        Ok(BlockOutcome {
            state: rho,
            probability,
            log,
            snapshots,
        })
    }
}

#[derive(Clone, Debug)]
pub struct BlockOutcome {
    pub state: DensityMatrix,
    /// Product of the NO probabilities.
    pub probability: f64,
    pub log: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
}

/// `P₂ ⊗ X + (I − P₂) ⊗ I` on (cavity, flag).
pub fn flag_cnot(cavity_dim: usize) -> CMatrix {
    let d = cavity_dim * 2;
    CMatrix::from_fn(d, d, |i, j| {
        let (ci, fi) = (i / 2, i % 2);
        let (cj, fj) = (j / 2, j % 2);
        let hit = ci == cj && if ci == CHECK_PHOTONS { fi != fj } else { fi == fj };
        C64::new(if hit { 1.0 } else { 0.0 }, 0.0)
    })
}

/// Kraus operators `|0⟩⟨0|`, `|0⟩⟨1|` of the flag reset.
pub fn reset_kraus() -> Vec<CMatrix> {
    vec![
        CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]),
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]),
    ]
}

/// One building block with default timing, standard variant.
pub fn parity_block(
    state: &DensityMatrix,
    rail_a: &str,
    rail_b: &str,
    model: &MeasurementModel,
    params: &PhysicalParams,
) -> Result<(DensityMatrix, Vec<StepRecord>)> {
    let out = Protocol::new(*model, *params, Variant::Standard).parity_block(state, rail_a, rail_b)?;
    Ok((out.state, out.log))
}

/// Four-readout parity projection.
pub fn parity_projection(
    state: &DensityMatrix,
    q1: &DualRailQubit,
    q2: &DualRailQubit,
    model: &MeasurementModel,
    params: &PhysicalParams,
) -> Result<ProtocolResult> {
    Protocol::new(*model, *params, Variant::Standard).run(state, q1, q2)
}

/// Two-readout parity projection; `state` must carry a flag slot.
pub fn parity_projection_deferred(
    state: &DensityMatrix,
    q1: &DualRailQubit,
    q2: &DualRailQubit,
    model: &MeasurementModel,
    params: &PhysicalParams,
) -> Result<ProtocolResult> {
    Protocol::new(*model, *params, Variant::Deferred).run(state, q1, q2)
}
