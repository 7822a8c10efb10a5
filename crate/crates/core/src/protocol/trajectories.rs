// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo unraveling of the parity projection on pure states.
//!
//! Every readout first samples which block (`P` or `Q`) the state collapses
//! to and then whether the detector reports NO given that block, so the
//! NO-conditioned ensemble reproduces the density-matrix engine's
//! post-selected state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::engine::{flag_cnot, Action, Protocol, SlotNames, Variant};
use super::measurement::{Conditioning, MeasurementModel};
use crate::dynamics::{cavity_label, pair_propagator, TRUNCATION_TOL};
use crate::error::{Error, Result};
use crate::logical::DualRailQubit;
use crate::statekit::{CMatrix, DensityMatrix, QuantumState, SlotRole, StateVector, C64};

const CHUNK: usize = 1024;

#[derive(Clone, Debug)]
pub struct TrajectorySummary {
    pub trials: usize,
    pub successes: usize,
    /// `successes / trials`
    pub empirical_pf: f64,
    /// Binomial standard error of `empirical_pf`.
    pub standard_error: f64,
    /// Per trial: index of the readout that reported YES, or `None` if the
    /// trial passed every check.
    pub outcomes: Vec<Option<usize>>,
    /// Average of the successful trials' mode states.
    pub mean_final_state: Option<DensityMatrix>,
}

enum Compiled {
    Unitary {
        op: CMatrix,
        targets: Vec<usize>,
        /// Basis indices outside the propagator's complete sectors.
        forbidden: Vec<usize>,
    },
    Check {
        in_p: Vec<bool>,
    },
    Reset {
        one: Vec<bool>,
        flip: CMatrix,
        target: usize,
    },
}

fn compile(
    protocol: &Protocol,
    initial: &StateVector,
    q1: &DualRailQubit,
    q2: &DualRailQubit,
) -> Result<Vec<Compiled>> {
    let layout = initial.layout();
    let cavity = cavity_label(layout)?.to_string();
    let flag = match protocol.variant {
        Variant::Standard => String::new(),
        Variant::Deferred => layout
            .first_with_role(SlotRole::Flag)
            .ok_or_else(|| Error::UnknownLabel("<flag>".into()))?
            .to_string(),
    };
    let slots = SlotNames {
        cavity: cavity.clone(),
        flag: flag.clone(),
    };
    let cutoff = protocol.params.fock_cutoff;
    let cav_pos = layout.position(&cavity)?;
    let occupations: Vec<Vec<usize>> = (0..layout.dim()).map(|i| layout.occupations(i)).collect();

    let mut out = Vec::new();
    for (_, action) in protocol.schedule(q1, q2, &slots) {
        match action {
            Action::Couple { mode, duration } => {
                let m = layout.position(&mode)?;
                let op = pair_propagator(&protocol.params, duration)?.matrix().clone();
                let forbidden = (0..layout.dim())
                    .filter(|&i| occupations[i][m] + occupations[i][cav_pos] > cutoff)
                    .collect();
                out.push(Compiled::Unitary {
                    op,
                    targets: vec![m, cav_pos],
                    forbidden,
                });
            }
            Action::Check { slot, photons } => {
                let p = layout.position(&slot)?;
                out.push(Compiled::Check {
                    in_p: occupations.iter().map(|o| o[p] == photons).collect(),
                });
            }
            Action::FlagCnot => {
                let f = layout.position(&flag)?;
                out.push(Compiled::Unitary {
                    op: flag_cnot(layout.slots()[cav_pos].dim),
                    targets: vec![cav_pos, f],
                    forbidden: Vec::new(),
                });
            }
            Action::FlagReset => {
                let f = layout.position(&flag)?;
                out.push(Compiled::Reset {
                    one: occupations.iter().map(|o| o[f] == 1).collect(),
                    flip: CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
                    target: f,
                });
            }
        }
    }
    Ok(out)
}

fn weight(psi: &StateVector, mask: &[bool]) -> f64 {
    psi.amplitudes()
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(a, _)| a.norm_sqr())
        .sum()
}

/// Scales the `P` and `Q` blocks by `sp` and `sq` and renormalizes.
fn reweight(psi: &mut StateVector, mask: &[bool], sp: f64, sq: f64) {
    for (a, &m) in psi.amplitudes_mut().iter_mut().zip(mask) {
        *a *= if m { sp } else { sq };
    }
    let n = psi.norm_sqr().sqrt();
    if n > 0.0 {
        psi.amplitudes_mut().iter_mut().for_each(|a| *a /= n);
    }
}

/// Runs one readout; returns whether it reported NO.
fn readout(psi: &mut StateVector, in_p: &[bool], model: &MeasurementModel, rng: &mut ChaCha8Rng) -> bool {
    let p = weight(psi, in_p).clamp(0.0, 1.0);
    let p_no = model.no_probability(p);
    let (a, b) = model.no_weights();
    if !model.dephase_always {
        let no = rng.gen::<f64>() < p_no;
        if no {
            reweight(psi, in_p, a.sqrt(), b.sqrt());
        }
        return no;
    }
    // per-block NO likelihoods reproducing P(NO) and the NO-state weights
    let (lp, lq) = match model.conditioning {
        Conditioning::Bayesian => (a, b),
        Conditioning::ProbabilityOnly => {
            let z = a * p + b * (1.0 - p);
            let s = if z > 0.0 { p_no / z } else { 0.0 };
            (a * s, b * s)
        }
    };
    let in_block_p = rng.gen::<f64>() < p;
    if in_block_p {
        reweight(psi, in_p, 1.0, 0.0);
    } else {
        reweight(psi, in_p, 0.0, 1.0);
    }
    rng.gen::<f64>() < if in_block_p { lp } else { lq }
}

struct ChunkResult {
    outcomes: Vec<Option<usize>>,
    state_sum: CMatrix,
}

pub fn run_trajectories(
    protocol: &Protocol,
    initial: &StateVector,
    q1: &DualRailQubit,
    q2: &DualRailQubit,
    trials: usize,
    seed: u64,
) -> Result<TrajectorySummary> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if protocol.cavity_loss {
        return Err(Error::InvalidParameter(
            "cavity loss is not supported by the trajectory engine".into(),
        ));
    }
    protocol.model.validate()?;
    if !initial.is_normalized() {
        return Err(Error::NotNormalized(initial.norm_sqr()));
    }
    let program = compile(protocol, initial, q1, q2)?;

    let layout = initial.layout();
    let mode_labels: Vec<&str> = layout
        .slots()
        .iter()
        .filter(|s| s.role == SlotRole::Mode)
        .map(|s| s.label.as_str())
        .collect();
    let mode_pos = layout.positions(&mode_labels)?;
    let idx = layout.local_index(&mode_pos);
    let dm = idx.offsets.len();

    let run_trial = |trial: usize| -> Result<(Option<usize>, StateVector)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let mut psi = initial.clone();
        let mut k = 0;
        for step in &program {
            match step {
                Compiled::Unitary { op, targets, forbidden } => {
                    let w: f64 = forbidden.iter().map(|&i| psi.amplitudes()[i].norm_sqr()).sum();
                    if w > TRUNCATION_TOL {
                        return Err(Error::TruncationViolation {
                            slots: format!("{targets:?}"),
                            weight: w,
                        });
                    }
                    psi.apply_local(op, targets);
                }
                Compiled::Check { in_p } => {
                    if !readout(&mut psi, in_p, &protocol.model, &mut rng) {
                        return Ok((Some(k), psi));
                    }
                    k += 1;
                }
                Compiled::Reset { one, flip, target } => {
                    // collapse the flag, then rotate |1⟩ back to |0⟩
                    if rng.gen::<f64>() < weight(&psi, one) {
                        reweight(&mut psi, one, 1.0, 0.0);
                        psi.apply_local(flip, &[*target]);
                    } else {
                        reweight(&mut psi, one, 0.0, 1.0);
                    }
                }
            }
        }
        Ok((None, psi))
    };

    let chunks: Vec<ChunkResult> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| -> Result<ChunkResult> {
            let mut outcomes = Vec::with_capacity(CHUNK);
            let mut state_sum = CMatrix::zeros(dm, dm);
            for trial in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let (outcome, psi) = run_trial(trial)?;
                if outcome.is_none() {
                    accumulate_reduced(&mut state_sum, psi.amplitudes(), &idx.offsets, &idx.bases);
                }
                outcomes.push(outcome);
            }
            Ok(ChunkResult { outcomes, state_sum })
        })
        .collect::<Result<_>>()?;

    let mut outcomes = Vec::with_capacity(trials);
    let mut state_sum = CMatrix::zeros(dm, dm);
    for chunk in chunks {
        outcomes.extend(chunk.outcomes);
        state_sum = &state_sum + &chunk.state_sum;
    }
    let successes = outcomes.iter().filter(|o| o.is_none()).count();
    let pf = successes as f64 / trials as f64;
    let mean_final_state = if successes > 0 {
        let modes = layout.select(&mode_labels)?;
        let m = state_sum.scale(C64::new(1.0 / successes as f64, 0.0));
        Some(DensityMatrix::new(modes, m.hermitian_part())?)
    } else {
        None
    };
    Ok(TrajectorySummary {
        trials,
        successes,
        empirical_pf: pf,
        standard_error: (pf * (1.0 - pf) / trials as f64).sqrt(),
        outcomes,
        mean_final_state,
    })
}

/// Adds `Tr_env |ψ⟩⟨ψ|` to `acc`, skipping empty environment configurations.
fn accumulate_reduced(acc: &mut CMatrix, psi: &[C64], offsets: &[usize], bases: &[usize]) {
    for &base in bases {
        if offsets.iter().all(|&o| psi[base + o].norm_sqr() == 0.0) {
            continue;
        }
        for (i, &oi) in offsets.iter().enumerate() {
            let a = psi[base + oi];
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, &oj) in offsets.iter().enumerate() {
                acc[(i, j)] += a * psi[base + oj].conj();
            }
        }
    }
}
