// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use ensemble_qip::dynamics::PhysicalParams;
use ensemble_qip::metrics::ConvexRoofOptions;
use ensemble_qip::protocol::{Conditioning, MeasurementModel, Variant};
use serde::{Deserialize, Serialize};

/// Inclusive grid `start:stop:step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let g = Self { start, stop, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.start.is_finite() && self.stop.is_finite() && self.step.is_finite(),
            "grid bounds must be finite"
        );
        ensure!(self.step > 0.0, "grid step must be positive, got {}", self.step);
        ensure!(
            self.stop >= self.start,
            "grid is empty: stop {} < start {}",
            self.stop,
            self.start
        );
        Ok(())
    }

    /// Points `start + k·step` up to `stop` (with a little slack for
    /// rounding), each rounded to 12 decimals.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| ((self.start + k as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

impl FromStr for Grid {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            bail!("grid `{s}` is not of the form start:stop:step");
        };
        let num = |x: &str| x.trim().parse::<f64>().with_context(|| format!("bad grid value `{x}`"));
        Grid::new(num(a)?, num(b)?, num(c)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Emit {
    pub fidelity: bool,
    pub eof: bool,
    pub c2: bool,
    pub pf: bool,
    pub intermediate_states: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Self {
            fidelity: true,
            eof: true,
            c2: true,
            pf: true,
            intermediate_states: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `J`, rad/s
    pub coupling: f64,
    /// `ε`, rad/s
    pub energy: f64,
    /// `κ`, 1/s
    pub cavity_decay: f64,
    /// Apply cavity loss during the protocol (density-matrix runs only).
    pub cavity_loss: bool,
    pub eta1: f64,
    pub eta2: f64,
    pub conditioning: Conditioning,
    /// Sweep grid; defaults depend on the subcommand.
    pub grid: Option<Grid>,
    pub variant: Variant,
    pub trials: usize,
    /// Readout runs per tomography setting.
    pub runs: u64,
    /// Errors of the tomography readout checks.
    pub readout_eta1: f64,
    pub readout_eta2: f64,
    /// Extra window (seconds) for which the leakage budget is reported.
    pub budget_window: Option<f64>,
    pub seed: u64,
    pub convex_roof: ConvexRoofOptions,
    pub emit: Emit,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = PhysicalParams::reference_device();
        Self {
            coupling: p.coupling,
            energy: p.energy,
            cavity_decay: p.cavity_decay,
            cavity_loss: false,
            eta1: 0.0,
            eta2: 0.0,
            conditioning: Conditioning::default(),
            grid: None,
            variant: Variant::Standard,
            trials: 100_000,
            runs: 100_000,
            readout_eta1: 0.0,
            readout_eta2: 0.0,
            budget_window: None,
            seed: 0,
            convex_roof: ConvexRoofOptions::default(),
            emit: Emit::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        for (name, v) in [
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("readout_eta1", self.readout_eta1),
            ("readout_eta2", self.readout_eta2),
        ] {
            ensure!((0.0..=1.0).contains(&v), "{name} = {v} lies outside [0, 1]");
        }
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        Ok(())
    }

    pub fn params(&self) -> PhysicalParams {
        PhysicalParams {
            coupling: self.coupling,
            energy: self.energy,
            cavity_decay: self.cavity_decay,
            ..PhysicalParams::default()
        }
    }

    pub fn model(&self, eta1: f64, eta2: f64) -> Result<MeasurementModel> {
        Ok(MeasurementModel {
            conditioning: self.conditioning,
            ..MeasurementModel::new(eta1, eta2)?
        })
    }

    pub fn readout_model(&self) -> Result<MeasurementModel> {
        Ok(MeasurementModel::new(self.readout_eta1, self.readout_eta2)?)
    }

    /// Sweep grid, checked to lie inside `[0, 1]`.
    pub fn probability_grid(&self, default: Grid) -> Result<Vec<f64>> {
        let pts = self.grid.unwrap_or(default).points();
        ensure!(!pts.is_empty(), "grid is empty");
        for p in &pts {
            ensure!((0.0..=1.0).contains(p), "grid point {p} lies outside [0, 1]");
        }
        Ok(pts)
    }
}
