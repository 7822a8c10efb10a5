// SPDX-License-Identifier: Apache-2.0

//! The faulty "exactly n photons?" measurement.
//!
//! With `P` the projector onto occupation `n` of the measured slot, `Q = I − P`
//! and `p = Tr(PρP)`, a NO is reported with probability
//! `η₁ p + (1 − η₂)(1 − p)`. The post-measurement states are block diagonal
//! in `P`/`Q` (the apparatus dephases whatever the outcome).

use serde::{Deserialize, Serialize};

use crate::dynamics::cavity_label;
use crate::error::{check_probability, Error, Result};
use crate::statekit::{DensityMatrix, C64};

/// How the NO-branch state is weighted between the `P` and `Q` blocks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// NO-state `∝ η₁ PρP + QρQ`: type II errors change only the abort
    /// probability, never the surviving state.
    #[default]
    ProbabilityOnly,
    /// NO-state `∝ η₁ PρP + (1 − η₂) QρQ`, the full Bayesian update of a
    /// classical confusion channel.
    Bayesian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    /// Probability of a NO although exactly `n` photons are present.
    pub eta1: f64,
    /// Probability of a YES although they are not.
    pub eta2: f64,
    /// Destroy `P`–`Q` coherences in both branches. When false the branches
    /// use the minimal Kraus operators instead.
    pub dephase_always: bool,
    pub conditioning: Conditioning,
}

impl Default for MeasurementModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl MeasurementModel {
    pub fn ideal() -> Self {
        Self {
            eta1: 0.0,
            eta2: 0.0,
            dephase_always: true,
            conditioning: Conditioning::ProbabilityOnly,
        }
    }

    pub fn new(eta1: f64, eta2: f64) -> Result<Self> {
        let m = Self {
            eta1,
            eta2,
            ..Self::ideal()
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("eta1", self.eta1)?;
        check_probability("eta2", self.eta2)
    }

    pub fn no_probability(&self, p: f64) -> f64 {
        self.eta1 * p + (1.0 - self.eta2) * (1.0 - p)
    }

    /// Unnormalized weights `(a, b)` of the NO-branch state `a PρP + b QρQ`.
    pub fn no_weights(&self) -> (f64, f64) {
        match self.conditioning {
            Conditioning::ProbabilityOnly => (self.eta1, 1.0),
            Conditioning::Bayesian => (self.eta1, 1.0 - self.eta2),
        }
    }

    pub fn yes_weights(&self) -> (f64, f64) {
        (1.0 - self.eta1, self.eta2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    No,
    Yes,
}

impl Outcome {
    fn name(self) -> &'static str {
        match self {
            Outcome::No => "NO",
            Outcome::Yes => "YES",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub probability: f64,
    /// Normalized post-measurement state; `None` when the branch is impossible.
    pub state: Option<DensityMatrix>,
}

#[derive(Clone, Debug)]
pub struct MeasurementResult {
    /// `Tr(PρP)`
    pub occupation_probability: f64,
    pub no: Branch,
    pub yes: Branch,
}

impl MeasurementResult {
    pub fn branch(&self, outcome: Outcome) -> &Branch {
        match outcome {
            Outcome::No => &self.no,
            Outcome::Yes => &self.yes,
        }
    }

    /// Probability and state of `outcome`, failing if it cannot occur.
    pub fn take(self, outcome: Outcome) -> Result<(f64, DensityMatrix)> {
        let branch = match outcome {
            Outcome::No => self.no,
            Outcome::Yes => self.yes,
        };
        match branch.state {
            Some(state) => Ok((branch.probability, state)),
            None => Err(Error::ZeroProbability(outcome.name())),
        }
    }
}

/// Probabilities below this are treated as impossible branches.
pub const BRANCH_TOL: f64 = 1e-15;

/// Measures "is slot `label` in Fock level `n`?".
pub fn measure_slot(rho: &DensityMatrix, label: &str, n: usize, model: &MeasurementModel) -> Result<MeasurementResult> {
    model.validate()?;
    let layout = rho.layout();
    let pos = layout.position(label)?;
    let dim = layout.slots()[pos].dim;
    if n >= dim {
        return Err(Error::InvalidParameter(format!(
            "photon number {n} exceeds the cutoff of slot `{label}`"
        )));
    }
    let in_p: Vec<bool> = (0..layout.dim()).map(|i| layout.occupations(i)[pos] == n).collect();
    let p = (0..layout.dim())
        .filter(|&i| in_p[i])
        .map(|i| rho.matrix()[(i, i)].re)
        .sum::<f64>()
        .clamp(0.0, 1.0);

    let p_no = model.no_probability(p).clamp(0.0, 1.0);
    let p_yes = (1.0 - p_no).max(0.0);
    let no = branch(rho, &in_p, model.no_weights(), model.dephase_always, p_no)?;
    let yes = branch(rho, &in_p, model.yes_weights(), model.dephase_always, p_yes)?;
    Ok(MeasurementResult {
        occupation_probability: p,
        no,
        yes,
    })
}

/// "Are there exactly `n` photons in the cavity?"
pub fn measure_cavity_n(rho: &DensityMatrix, n: usize, model: &MeasurementModel) -> Result<MeasurementResult> {
    let cavity = cavity_label(rho.layout())?.to_string();
    measure_slot(rho, &cavity, n, model)
}

fn branch(rho: &DensityMatrix, in_p: &[bool], (a, b): (f64, f64), dephase: bool, probability: f64) -> Result<Branch> {
    if probability <= BRANCH_TOL {
        return Ok(Branch {
            probability,
            state: None,
        });
    }
    // coherence weight between the blocks: dropped, or √a·√b from the Kraus
    // operator √a P + √b Q
    let cross = if dephase { 0.0 } else { (a * b).sqrt() };
    let d = in_p.len();
    let mut m = rho.matrix().clone();
    for i in 0..d {
        for j in 0..d {
            let w = match (in_p[i], in_p[j]) {
                (true, true) => a,
                (false, false) => b,
                _ => cross,
            };
            m[(i, j)] *= w;
        }
    }
    let trace = m.trace().re;
    if trace <= BRANCH_TOL {
        return Ok(Branch {
            probability,
            state: None,
        });
    }
    let state = DensityMatrix::new(rho.layout().clone(), m.scale(C64::new(1.0 / trace, 0.0)))?;
    Ok(Branch {
        probability,
        state: Some(state),
    })
}
