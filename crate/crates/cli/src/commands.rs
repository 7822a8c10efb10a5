// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use anyhow::{anyhow, Result};
use ensemble_qip::analytic::{pf_closed_form, rho_discounted};
use ensemble_qip::dynamics::{leakage_budget, LeakageBudget, PhysicalParams};
use ensemble_qip::logical::{plus_plus_register, prepare_plus, register_layout, DualRailQubit};
use ensemble_qip::metrics::{
    convex_roof_c2, dephase_outside, discount, eof_from_concurrence, fidelity, psi_plus_quinit, to_quinits,
    wootters_concurrence, OutsideLevels,
};
use ensemble_qip::protocol::{run_trajectories, Conditioning, Protocol, ProtocolResult, StepRecord, Variant};
use ensemble_qip::statekit::{DensityMatrix, StateVector};
use ensemble_qip::tomography::{
    exact_run, postselected_fraction, record_string, write_csv, Coherences, CountTable, Diagonals, ReadoutBasis,
    ReadoutSetting, RecordStats, TomographyRun,
};
use ensemble_qip::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Grid};
use crate::output::{to_json, Csv, MatrixJson};

/// A computed quantity disagrees with its closed form.
#[derive(Debug)]
pub struct InvariantBreach(pub String);

impl fmt::Display for InvariantBreach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invariant breach: {}", self.0)
    }
}

impl std::error::Error for InvariantBreach {}

fn breach(msg: String) -> anyhow::Error {
    anyhow::Error::new(InvariantBreach(msg))
}

const CLOSED_FORM_TOL: f64 = 1e-9;
/// Trajectory estimates further than this many standard errors from the
/// closed form are reported as a breach.
const TRAJECTORY_SIGMAS: f64 = 5.0;

/// Whether the closed forms describe this configuration.
fn closed_forms_apply(cfg: &ExperimentConfig) -> bool {
    cfg.conditioning == Conditioning::ProbabilityOnly && !cfg.cavity_loss && cfg.energy == 0.0
}

fn run_protocol(cfg: &ExperimentConfig, eta1: f64, eta2: f64) -> Result<ProtocolResult> {
    let params = cfg.params();
    let (q1, q2) = DualRailQubit::standard_pair();
    let mut protocol = Protocol::new(cfg.model(eta1, eta2)?, params, cfg.variant);
    protocol.cavity_loss = cfg.cavity_loss;
    let rho = plus_plus_register(cfg.variant == Variant::Deferred, &params)?;
    Ok(protocol.run(&rho, &q1, &q2)?)
}

pub fn sweep_eta1(cfg: &ExperimentConfig) -> Result<String> {
    let points = cfg.probability_grid(Grid::new(0.0, 1.0, 0.05)?)?;
    let emit = cfg.emit;
    let mut header = vec!["eta1"];
    if emit.fidelity {
        header.push("F");
    }
    if emit.eof {
        header.push("E_F_projected");
    }
    if emit.c2 {
        header.extend(["C2sq_raw", "C2sq_dephased", "C2sq_discounted"]);
    }
    header.push("C_wootters_rho_d");
    if emit.eof {
        header.push("E_F_rho_d");
    }

    let check = closed_forms_apply(cfg) && cfg.variant == Variant::Standard;
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .map(|&eta| -> Result<Vec<f64>> {
            let (q1, q2) = DualRailQubit::standard_pair();
            let r = run_protocol(cfg, eta, cfg.eta2)?;
            let q = to_quinits(&r.final_state, &q1, &q2)?;
            let f = fidelity(q.density(), &psi_plus_quinit().to_density())?;
            let e_proj = eof_from_concurrence(wootters_concurrence(&q.projected_qubits()?)?);
            let disc = discount(&q)?.state;
            let c_d = wootters_concurrence(&disc)?;

            if check {
                let gap = (f - (1.0 / (1.0 + eta)).sqrt()).abs();
                if gap > CLOSED_FORM_TOL {
                    return Err(breach(format!(
                        "fidelity at eta1 = {eta} is off the closed form by {gap:e}"
                    )));
                }
                let gap = disc.matrix().max_abs_diff(rho_discounted(eta)?.matrix());
                if gap > CLOSED_FORM_TOL {
                    return Err(breach(format!("discounted state at eta1 = {eta} is off by {gap:e}")));
                }
            }

            let mut row = vec![eta];
            if emit.fidelity {
                row.push(f);
            }
            if emit.eof {
                row.push(e_proj);
            }
            if emit.c2 {
                let roof = |rho: &DensityMatrix| convex_roof_c2(rho, &["Q1"], &cfg.convex_roof).map(|r| r.value);
                row.push(roof(q.density())?);
                let dephased = dephase_outside(&q, OutsideLevels::All)?;
                row.push(roof(dephased.density())?);
                row.push(roof(&disc)?);
            }
            row.push(c_d);
            if emit.eof {
                row.push(eof_from_concurrence(c_d));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let mut csv = Csv::new(&header);
    for r in &rows {
        csv.row(r);
    }
    Ok(csv.into_string())
}

fn simulated_pf(cfg: &ExperimentConfig, eta1: f64, eta2: f64) -> Result<f64> {
    match run_protocol(cfg, eta1, eta2) {
        Ok(r) => Ok(r.success_probability),
        // the first check cannot report NO
        Err(e) if matches!(e.downcast_ref::<Error>(), Some(Error::ZeroProbability(_))) => Ok(0.0),
        Err(e) => Err(e),
    }
}

pub fn sweep_pf(cfg: &ExperimentConfig) -> Result<String> {
    let grid = cfg.probability_grid(Grid::new(0.0, 1.0, 0.1)?)?;
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for eta1 in [0.0, 0.1] {
        pairs.extend(grid.iter().map(|&e2| (eta1, e2)));
    }
    pairs.extend(grid.iter().map(|&e1| (e1, 0.0)));

    let check = closed_forms_apply(cfg);
    let rows: Vec<[f64; 4]> = pairs
        .par_iter()
        .map(|&(e1, e2)| -> Result<[f64; 4]> {
            let closed = pf_closed_form(e1, e2)?;
            let sim = simulated_pf(cfg, e1, e2)?;
            if check && (closed - sim).abs() > CLOSED_FORM_TOL {
                return Err(breach(format!(
                    "P_f({e1}, {e2}): simulated {sim} vs closed form {closed}"
                )));
            }
            Ok([e1, e2, closed, sim])
        })
        .collect::<Result<_>>()?;

    let mut csv = Csv::new(&["eta1", "eta2", "P_f_closed", "P_f_simulated"]);
    for r in &rows {
        csv.row(r);
    }
    Ok(csv.into_string())
}

#[derive(Serialize)]
struct SnapshotJson {
    label: String,
    state: MatrixJson,
}

#[derive(Serialize)]
struct RunReport {
    eta1: f64,
    eta2: f64,
    variant: Variant,
    params: PhysicalParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    success_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    success_probability_closed_form: Option<f64>,
    no_probabilities: Vec<f64>,
    readout_count: usize,
    cavity_residual: f64,
    fidelity_psi_plus: f64,
    leakage_budget: LeakageBudget,
    #[serde(skip_serializing_if = "Option::is_none")]
    leakage_budget_window: Option<LeakageBudget>,
    step_log: Vec<StepRecord>,
    snapshots: Vec<SnapshotJson>,
    final_state: MatrixJson,
}

pub fn run(cfg: &ExperimentConfig) -> Result<String> {
    let params = cfg.params();
    let r = run_protocol(cfg, cfg.eta1, cfg.eta2)?;
    let (q1, q2) = DualRailQubit::standard_pair();
    let q = to_quinits(&r.final_state, &q1, &q2)?;
    let f = fidelity(q.density(), &psi_plus_quinit().to_density())?;

    let trace = r.final_state.trace();
    if (trace - 1.0).abs() > CLOSED_FORM_TOL {
        return Err(breach(format!("final state has trace {trace}")));
    }
    if !cfg.cavity_loss && r.cavity_residual > CLOSED_FORM_TOL {
        return Err(breach(format!(
            "cavity holds weight {:e} after the protocol",
            r.cavity_residual
        )));
    }
    let closed = pf_closed_form(cfg.eta1, cfg.eta2)?;
    if closed_forms_apply(cfg) && (r.success_probability - closed).abs() > CLOSED_FORM_TOL {
        return Err(breach(format!(
            "success probability {} vs closed form {closed}",
            r.success_probability
        )));
    }

    let report = RunReport {
        eta1: cfg.eta1,
        eta2: cfg.eta2,
        variant: cfg.variant,
        params,
        success_probability: cfg.emit.pf.then_some(r.success_probability),
        success_probability_closed_form: cfg.emit.pf.then_some(closed),
        no_probabilities: r.no_probabilities(),
        readout_count: r.readout_count(),
        cavity_residual: r.cavity_residual,
        fidelity_psi_plus: f,
        leakage_budget: r.leakage_budget(&params),
        leakage_budget_window: cfg.budget_window.map(|t| leakage_budget(params.cavity_decay, t)),
        step_log: r.step_log.clone(),
        snapshots: if cfg.emit.intermediate_states {
            r.snapshots
                .iter()
                .map(|s| SnapshotJson {
                    label: s.label.clone(),
                    state: (&s.state).into(),
                })
                .collect()
        } else {
            Vec::new()
        },
        final_state: (&r.final_state).into(),
    };
    to_json(&report)
}

#[derive(Serialize)]
struct TrajectoryReport {
    eta1: f64,
    eta2: f64,
    variant: Variant,
    seed: u64,
    trials: usize,
    successes: usize,
    empirical_pf: f64,
    standard_error: f64,
    closed_form_pf: f64,
    /// `(empirical − closed) / σ` with the closed-form binomial σ.
    z_score: f64,
    /// How many trials stopped at each readout.
    aborted_at_readout: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_final_fidelity_psi_plus: Option<f64>,
}

pub fn trajectories(cfg: &ExperimentConfig) -> Result<String> {
    let params = cfg.params();
    let (q1, q2) = DualRailQubit::standard_pair();
    let psi = StateVector::vacuum(register_layout(cfg.variant == Variant::Deferred));
    let psi = prepare_plus(&prepare_plus(&psi, &q1, &params)?, &q2, &params)?;
    let protocol = Protocol::new(cfg.model(cfg.eta1, cfg.eta2)?, params, cfg.variant);
    let s = run_trajectories(&protocol, &psi, &q1, &q2, cfg.trials, cfg.seed)?;

    let closed = pf_closed_form(cfg.eta1, cfg.eta2)?;
    let sigma = (closed * (1.0 - closed) / s.trials as f64).sqrt();
    let z = if sigma > 0.0 {
        (s.empirical_pf - closed) / sigma
    } else {
        0.0
    };
    if closed_forms_apply(cfg) && z.abs() > TRAJECTORY_SIGMAS {
        return Err(breach(format!(
            "empirical P_f {} is {z:.1} standard errors from the closed form {closed}",
            s.empirical_pf
        )));
    }
    let mut aborted = vec![0; protocol_readouts(cfg.variant)];
    for k in s.outcomes.iter().flatten() {
        if *k >= aborted.len() {
            aborted.resize(k + 1, 0);
        }
        aborted[*k] += 1;
    }
    let mean_fid = match &s.mean_final_state {
        Some(rho) => Some(fidelity(
            to_quinits(rho, &q1, &q2)?.density(),
            &psi_plus_quinit().to_density(),
        )?),
        None => None,
    };
    to_json(&TrajectoryReport {
        eta1: cfg.eta1,
        eta2: cfg.eta2,
        variant: cfg.variant,
        seed: cfg.seed,
        trials: s.trials,
        successes: s.successes,
        empirical_pf: s.empirical_pf,
        standard_error: s.standard_error,
        closed_form_pf: closed,
        z_score: z,
        aborted_at_readout: aborted,
        mean_final_fidelity_psi_plus: mean_fid,
    })
}

fn protocol_readouts(variant: Variant) -> usize {
    match variant {
        Variant::Standard => 4,
        Variant::Deferred => 2,
    }
}

#[derive(Serialize)]
struct SettingSummary {
    setting: String,
    runs: u64,
    postselected_fraction: f64,
    counts: Vec<(String, u64)>,
}

#[derive(Serialize)]
struct TomographyReport {
    reference_eta1: f64,
    diagonals: Diagonals,
    coherences: Coherences,
    settings: Vec<SettingSummary>,
    reconstructed: MatrixJson,
    concurrence: f64,
    fidelity_rho_d: f64,
    trace_distance_rho_d: f64,
}

pub struct TomographyOutput {
    pub counts_csv: String,
    pub report: String,
}

/// Simulates the readout (or takes `counts` as given) and reconstructs.
pub fn tomography(cfg: &ExperimentConfig, counts: Option<&str>) -> Result<TomographyOutput> {
    let params = cfg.params();
    let run: TomographyRun<CountTable> = match counts {
        Some(text) => split_tables(CountTable::parse_csv(text)?)?,
        None => {
            let (q1, q2) = DualRailQubit::standard_pair();
            let state = run_protocol(cfg, cfg.eta1, cfg.eta2)?.final_state;
            let settings = ReadoutSetting::default_rotated(&params);
            exact_run(&state, &q1, &q2, &settings, &cfg.readout_model()?, &params)?.sample(cfg.runs, cfg.seed)?
        }
    };
    let (diag, co, rec) = run.reconstruct(&params, Some(cfg.eta1))?;

    let mut tables = vec![run.z.clone()];
    tables.extend(run.rotated.iter().cloned());
    let settings = tables
        .iter()
        .map(|t| SettingSummary {
            setting: t.setting.to_string(),
            runs: t.total(),
            postselected_fraction: postselected_fraction(t),
            counts: (0..16u8)
                .filter(|&r| t.counts[r as usize] > 0)
                .map(|r| (record_string(r), t.counts[r as usize]))
                .collect(),
        })
        .collect();
    let report = TomographyReport {
        reference_eta1: cfg.eta1,
        concurrence: wootters_concurrence(&rec.state)?,
        fidelity_rho_d: rec.fidelity.unwrap_or(f64::NAN),
        trace_distance_rho_d: rec.trace_distance.unwrap_or(f64::NAN),
        reconstructed: (&rec.state).into(),
        diagonals: diag,
        coherences: co,
        settings,
    };
    Ok(TomographyOutput {
        counts_csv: write_csv(&tables),
        report: to_json(&report)?,
    })
}

fn split_tables(tables: Vec<CountTable>) -> Result<TomographyRun<CountTable>> {
    let mut z = None;
    let mut rotated = Vec::new();
    for t in tables {
        match t.setting().basis {
            ReadoutBasis::Z if z.is_none() => z = Some(t),
            ReadoutBasis::Z => return Err(anyhow!("count file holds more than one Z-basis table")),
            ReadoutBasis::Rotated => rotated.push(t),
        }
    }
    Ok(TomographyRun {
        z: z.ok_or_else(|| anyhow!("count file has no Z-basis table"))?,
        rotated,
    })
}
