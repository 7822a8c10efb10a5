// SPDX-License-Identifier: Apache-2.0

//! Readout of the two-qubit output with single-photon checks and a simple
//! X-state reconstruction.
//!
//! Each mode is swapped into the cavity, checked for "exactly one photon?",
//! and swapped back. A Z-basis setting reads the modes directly; a rotated
//! setting first applies `rotate_z(φ₀)` and a partial X rotation of angle
//! `J t₀` to each qubit. Records are four bits, `M1` most significant.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{qubit_pair_layout, rho_discounted};
use crate::dynamics::{cavity_label, couple, PhysicalParams};
use crate::error::{Error, Result};
use crate::logical::{logical_amplitudes, rotate_x_unchecked, rotate_z_unchecked, DualRailQubit, CAVITY, SUPPORT_TOL};
use crate::metrics::{fidelity, trace_distance};
use crate::protocol::{measure_cavity_n, MeasurementModel, Outcome};
use crate::statekit::{
    hermitian_eig, project_to_density, CMatrix, DensityMatrix, QuantumState, Slot, SlotLayout, SlotRole, StateVector,
    Tensor, C64,
};

/// Four-bit outcome, bit 3 = `M1`, bit 0 = `M4`; a set bit means "one photon".
pub type Record = u8;

pub const RECORDS: usize = 16;
/// Runs sampled from one RNG stream.
const RUN_CHUNK: usize = 4096;

pub fn record_string(r: Record) -> String {
    format!("{r:04b}")
}

pub fn parse_record(s: &str) -> Result<Record> {
    if s.len() != 4 || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::MalformedRecord(s.into()));
    }
    Record::from_str_radix(s, 2).map_err(|_| Error::MalformedRecord(s.into()))
}

/// Logical value of one qubit's two bits: `10 → 0`, `01 → 1`.
fn qubit_value(bits: u8) -> Option<usize> {
    match bits {
        0b10 => Some(0),
        0b01 => Some(1),
        _ => None,
    }
}

/// Two-qubit computational index of a record, if both qubits read validly.
pub fn logical_outcome(r: Record) -> Option<usize> {
    Some(qubit_value(r >> 2)? * 2 + qubit_value(r & 0b11)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadoutBasis {
    Z,
    Rotated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSetting {
    pub basis: ReadoutBasis,
    /// Partial-swap time of the pre-rotation, seconds.
    pub t0: f64,
    /// `φ₀` per qubit, radians.
    pub phases: [f64; 2],
}

impl ReadoutSetting {
    pub fn z() -> Self {
        Self {
            basis: ReadoutBasis::Z,
            t0: 0.0,
            phases: [0.0, 0.0],
        }
    }

    /// Rotated setting with the default `t₀ = τ/2`.
    pub fn rotated(params: &PhysicalParams, phases: [f64; 2]) -> Self {
        Self {
            basis: ReadoutBasis::Rotated,
            t0: params.swap_time() / 2.0,
            phases,
        }
    }

    /// `(0,0), (π/2,π/2), (0,π/2), (π/2,0)`.
    pub fn default_rotated(params: &PhysicalParams) -> Vec<Self> {
        use std::f64::consts::FRAC_PI_2 as H;
        [[0.0, 0.0], [H, H], [0.0, H], [H, 0.0]]
            .into_iter()
            .map(|p| Self::rotated(params, p))
            .collect()
    }

    pub fn validate(&self, params: &PhysicalParams) -> Result<()> {
        let tau = params.swap_time();
        if !(0.0..=tau * (1.0 + 1e-12)).contains(&self.t0) {
            return Err(Error::InvalidParameter(format!(
                "t0 = {} s lies outside [0, τ]",
                self.t0
            )));
        }
        if !self.phases.iter().all(|p| p.is_finite()) {
            return Err(Error::InvalidParameter("pre-rotation phase must be finite".into()));
        }
        Ok(())
    }

    /// Logical 2×2 matrix of the pre-rotation on one qubit, up to a global
    /// phase, obtained by running the gate sequence on the basis states.
    pub fn qubit_rotation(&self, qubit: usize, params: &PhysicalParams) -> Result<CMatrix> {
        if self.basis == ReadoutBasis::Z {
            return Ok(CMatrix::identity(2));
        }
        let layout = SlotLayout::builder().mode("a").mode("b").cavity("c").build()?;
        let q = DualRailQubit::new("a", "b")?;
        let mut m = CMatrix::zeros(2, 2);
        for (col, occ) in [[1, 0, 0], [0, 1, 0]].iter().enumerate() {
            let psi = StateVector::basis(layout.clone(), occ)?;
            let out = self.rotate(&psi, &q, qubit, params)?;
            let amps = logical_amplitudes(&out, std::slice::from_ref(&q))?;
            m[(0, col)] = amps.amplitudes[0];
            m[(1, col)] = amps.amplitudes[1];
        }
        Ok(m)
    }

    fn rotate<S: QuantumState>(
        &self,
        state: &S,
        q: &DualRailQubit,
        qubit: usize,
        params: &PhysicalParams,
    ) -> Result<S> {
        let s = rotate_z_unchecked(state, q, self.phases[qubit], params)?;
        rotate_x_unchecked(&s, q, params.coupling * self.t0, params)
    }
}

impl fmt::Display for ReadoutSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.basis {
            ReadoutBasis::Z => write!(f, "Z"),
            ReadoutBasis::Rotated => write!(
                f,
                "rot/t0={:e}/phi1={}/phi2={}",
                self.t0, self.phases[0], self.phases[1]
            ),
        }
    }
}

impl FromStr for ReadoutSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "Z" {
            return Ok(Self::z());
        }
        let bad = || Error::InvalidParameter(format!("unrecognized readout setting `{s}`"));
        let mut parts = s.split('/');
        if parts.next() != Some("rot") {
            return Err(bad());
        }
        let mut field = |key: &str| -> Result<f64> {
            parts
                .next()
                .and_then(|p| p.strip_prefix(key))
                .and_then(|v| v.parse().ok())
                .ok_or_else(bad)
        };
        let t0 = field("t0=")?;
        let phi1 = field("phi1=")?;
        let phi2 = field("phi2=")?;
        Ok(Self {
            basis: ReadoutBasis::Rotated,
            t0,
            phases: [phi1, phi2],
        })
    }
}

/// Read access shared by sampled counts and exact outcome distributions.
pub trait RecordStats {
    fn setting(&self) -> &ReadoutSetting;
    /// Relative frequency (or probability) of a record.
    fn frequency(&self, record: Record) -> f64;
    /// Number of runs behind the frequencies; `None` for exact statistics.
    fn runs(&self) -> Option<u64>;
}

/// Sampled outcome counts of one setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub setting: ReadoutSetting,
    pub counts: [u64; RECORDS],
}

impl CountTable {
    pub fn empty(setting: ReadoutSetting) -> Self {
        Self {
            setting,
            counts: [0; RECORDS],
        }
    }

    pub fn from_records(setting: ReadoutSetting, records: &[Record]) -> Result<Self> {
        let mut t = Self::empty(setting);
        for &r in records {
            if r as usize >= RECORDS {
                return Err(Error::MalformedRecord(format!("{r}")));
            }
            t.counts[r as usize] += 1;
        }
        Ok(t)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Rows `setting,record,count`, one per record value (zeros included).
    pub fn csv_rows(&self) -> Vec<String> {
        (0..RECORDS)
            .map(|r| format!("{},{},{}", self.setting, record_string(r as Record), self.counts[r]))
            .collect()
    }

    /// Parses CSV produced by [`write_csv`], grouping rows by setting in
    /// order of first appearance.
    pub fn parse_csv(text: &str) -> Result<Vec<CountTable>> {
        let mut tables: Vec<CountTable> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || (n == 0 && line.starts_with("setting")) {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let [setting, record, count] = cols[..] else {
                return Err(Error::MalformedRecord(line.into()));
            };
            let setting: ReadoutSetting = setting.parse()?;
            let record = parse_record(record)?;
            let count: u64 = count.trim().parse().map_err(|_| Error::MalformedRecord(line.into()))?;
            let idx = match tables.iter().position(|t| t.setting == setting) {
                Some(i) => i,
                None => {
                    tables.push(CountTable::empty(setting));
                    tables.len() - 1
                }
            };
            tables[idx].counts[record as usize] += count;
        }
        Ok(tables)
    }
}

pub fn write_csv(tables: &[CountTable]) -> String {
    let mut out = String::from("setting,record,count\n");
    for t in tables {
        for row in t.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

impl RecordStats for CountTable {
    fn setting(&self) -> &ReadoutSetting {
        &self.setting
    }

    fn frequency(&self, record: Record) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.counts[record as usize] as f64 / n as f64,
        }
    }

    fn runs(&self) -> Option<u64> {
        Some(self.total())
    }
}

/// Exact record probabilities of one setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub setting: ReadoutSetting,
    pub probabilities: [f64; RECORDS],
}

impl RecordStats for OutcomeDistribution {
    fn setting(&self) -> &ReadoutSetting {
        &self.setting
    }

    fn frequency(&self, record: Record) -> f64 {
        self.probabilities[record as usize]
    }

    fn runs(&self) -> Option<u64> {
        None
    }
}

/// Mode state with an empty cavity appended when none is present.
fn with_cavity(state: &DensityMatrix, params: &PhysicalParams) -> Result<DensityMatrix> {
    if let Ok(c) = cavity_label(state.layout()) {
        let pos = state.layout().position(c)?;
        let weight = state.weight_where(|occ| occ[pos] > 0);
        if weight > SUPPORT_TOL {
            return Err(Error::SlotOccupied {
                label: c.into(),
                weight,
            });
        }
        return Ok(state.clone());
    }
    let cavity = SlotLayout::new(vec![Slot::new(CAVITY, params.fock_cutoff + 1, SlotRole::Cavity)])?;
    let vac = StateVector::vacuum(cavity);
    state.tensor(&vac.to_density())
}

/// Exact probability of every record.
pub fn readout_distribution(
    final_state: &DensityMatrix,
    q1: &DualRailQubit,
    q2: &DualRailQubit,
    setting: &ReadoutSetting,
    model: &MeasurementModel,
    params: &PhysicalParams,
) -> Result<OutcomeDistribution> {
    setting.validate(params)?;
    model.validate()?;
    let mut rho = with_cavity(final_state, params)?;
    if setting.basis == ReadoutBasis::Rotated {
        for (k, q) in [q1, q2].into_iter().enumerate() {
            rho = setting.rotate(&rho, q, k, params)?;
        }
    }
    let modes = [&q1.rail0, &q1.rail1, &q2.rail0, &q2.rail1];
    let tau = params.swap_time();

    // breadth-first over the four checks: (record so far, weight, state)
    let mut branches = vec![(0u8, 1.0f64, rho)];
    for mode in modes {
        let mut next = Vec::with_capacity(branches.len() * 2);
        for (record, weight, state) in branches {
            let swapped = couple(&state, mode, tau, params)?;
            let m = measure_cavity_n(&swapped, 1, model)?;
            for (outcome, bit) in [(Outcome::No, 0u8), (Outcome::Yes, 1u8)] {
                let branch = m.branch(outcome);
                let Some(s) = &branch.state else { continue };
                let back = couple(s, mode, tau, params)?;
                next.push((record << 1 | bit, weight * branch.probability, back));
            }
        }
        branches = next;
    }

    let mut probabilities = [0.0; RECORDS];
    for (record, weight, _) in branches {
        probabilities[record as usize] += weight;
    }
    Ok(OutcomeDistribution {
        setting: *setting,
        probabilities,
    })
}

/// Samples `runs` records from the exact distribution. Chunk `k` of
/// `RUN_CHUNK` runs draws from stream `k` of a generator seeded with `seed`.
pub fn sample_counts(dist: &OutcomeDistribution, runs: u64, seed: u64) -> Result<CountTable> {
    if runs == 0 {
        return Ok(CountTable::empty(dist.setting));
    }
    let weights: Vec<f64> = dist.probabilities.iter().map(|p| p.max(0.0)).collect();
    let sampler = WeightedIndex::new(&weights).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let chunks = (runs as usize).div_ceil(RUN_CHUNK);
    let partial: Vec<[u64; RECORDS]> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let n = RUN_CHUNK.min(runs as usize - k * RUN_CHUNK);
            let mut counts = [0u64; RECORDS];
            for _ in 0..n {
                counts[sampler.sample(&mut rng)] += 1;
            }
            counts
        })
        .collect();
    let mut counts = [0u64; RECORDS];
    for c in &partial {
        for (total, x) in counts.iter_mut().zip(c) {
            *total += x;
        }
    }
    Ok(CountTable {
        setting: dist.setting,
        counts,
    })
}

/// Exact distribution followed by sampling; deterministic in `seed`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_readout(
    final_state: &DensityMatrix,
    q1: &DualRailQubit,
    q2: &DualRailQubit,
    setting: &ReadoutSetting,
    runs: u64,
    model: &MeasurementModel,
    params: &PhysicalParams,
    seed: u64,
) -> Result<CountTable> {
    let dist = readout_distribution(final_state, q1, q2, setting, model, params)?;
    sample_counts(&dist, runs, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagonals {
    /// `|00⟩, |01⟩, |10⟩, |11⟩` populations after redistributing leakage.
    pub populations: [f64; 4],
    /// Frequencies of the computational records alone.
    pub raw: [f64; 4],
    /// Frequency of the all-dark record `0000`.
    pub leakage: f64,
    /// Frequency of records that are neither computational nor `0000`;
    /// these are dropped.
    pub discarded: f64,
}

/// Populations from Z-basis statistics. The all-dark record counts as
/// leakage and is split evenly between `|00⟩` and `|11⟩`.
pub fn estimate_diagonals(stats: &impl RecordStats) -> Result<Diagonals> {
    if stats.setting().basis != ReadoutBasis::Z {
        return Err(Error::InvalidParameter("diagonals need Z-basis statistics".into()));
    }
    if stats.runs() == Some(0) {
        return Err(Error::InsufficientData("no Z-basis runs".into()));
    }
    let mut raw = [0.0; 4];
    let mut discarded = 0.0;
    for r in 0..RECORDS as Record {
        match logical_outcome(r) {
            Some(k) => raw[k] += stats.frequency(r),
            None if r == 0 => {}
            None => discarded += stats.frequency(r),
        }
    }
    let leakage = stats.frequency(0);
    let kept = raw.iter().sum::<f64>() + leakage;
    if kept <= 0.0 {
        return Err(Error::InsufficientData("no usable Z-basis records".into()));
    }
    let mut populations = raw;
    populations[0] += leakage / 2.0;
    populations[3] += leakage / 2.0;
    for p in &mut populations {
        *p /= kept;
    }
    Ok(Diagonals {
        populations,
        raw,
        leakage,
        discarded,
    })
}

/// `(N_same − N_diff) / N` over all runs; non-computational records add zero.
pub fn correlator(stats: &impl RecordStats) -> f64 {
    (0..RECORDS as Record)
        .filter_map(|r| logical_outcome(r).map(|k| (r, k)))
        .map(|(r, k)| {
            let same = (k >> 1) == (k & 1);
            stats.frequency(r) * if same { 1.0 } else { -1.0 }
        })
        .sum()
}

/// Fraction of runs giving a computational record.
pub fn postselected_fraction(stats: &impl RecordStats) -> f64 {
    (0..RECORDS as Record)
        .filter(|&r| logical_outcome(r).is_some())
        .map(|r| stats.frequency(r))
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coherences {
    /// `⟨01|ρ|10⟩`
    pub c: C64,
    /// `⟨00|ρ|11⟩`
    pub d: C64,
    /// Standard error of `|c|` from counting statistics; zero for exact input.
    pub c_standard_error: f64,
    pub settings: usize,
}

/// Least-squares coherences from rotated-setting correlators.
///
/// With `O = R†(Z⊗Z)R` for the setting's logical rotation `R`, the
/// correlator is `Σ_k ρ_kk O_kk + 2Re(c O₂₁) + 2Re(d O₃₀)`; the diagonal part
/// is removed with the raw Z-basis frequencies.
pub fn estimate_coherences<S: RecordStats>(
    rotated: &[S],
    diagonals: &Diagonals,
    params: &PhysicalParams,
) -> Result<Coherences> {
    let settings: Vec<&S> = rotated
        .iter()
        .filter(|s| s.setting().basis == ReadoutBasis::Rotated)
        .collect();
    let mut distinct: Vec<[f64; 2]> = settings.iter().map(|s| s.setting().phases).collect();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InsufficientData(
            "at least two rotated settings with different phases are required".into(),
        ));
    }

    let zz = CMatrix::diag_real(&[1.0, -1.0, -1.0, 1.0]);
    let mut rows: Vec<[f64; 4]> = Vec::new();
    let mut rhs = Vec::new();
    let mut variances = Vec::new();
    for s in &settings {
        let r = s
            .setting()
            .qubit_rotation(0, params)?
            .kron(&s.setting().qubit_rotation(1, params)?);
        let o = &(&r.adjoint() * &zz) * &r;
        let e = correlator(*s);
        let diag: f64 = (0..4).map(|k| diagonals.raw[k] * o[(k, k)].re).sum();
        let (o21, o30) = (o[(2, 1)], o[(3, 0)]);
        rows.push([2.0 * o21.re, -2.0 * o21.im, 2.0 * o30.re, -2.0 * o30.im]);
        rhs.push(e - diag);
        variances.push(match s.runs() {
            Some(n) if n > 0 => (postselected_fraction(*s) - e * e).max(0.0) / n as f64,
            _ => 0.0,
        });
    }

    // minimum-norm least squares through the pseudo-inverse of AᵀA
    let ata = CMatrix::from_fn(4, 4, |i, j| C64::new(rows.iter().map(|r| r[i] * r[j]).sum(), 0.0));
    let eig = hermitian_eig(&ata)?;
    let cutoff = 1e-10 * eig.values[0].max(f64::MIN_POSITIVE);
    let pinv = eig.reassemble(|l| if l > cutoff { 1.0 / l } else { 0.0 });
    // x = (AᵀA)⁺ Aᵀ b; column j of (AᵀA)⁺ Aᵀ gives the sensitivity to b_j
    let sens: Vec<[f64; 4]> = rows
        .iter()
        .map(|row| {
            let mut v = [0.0; 4];
            for (i, vi) in v.iter_mut().enumerate() {
                *vi = (0..4).map(|k| pinv[(i, k)].re * row[k]).sum();
            }
            v
        })
        .collect();
    let mut x = [0.0; 4];
    for (sj, bj) in sens.iter().zip(&rhs) {
        for i in 0..4 {
            x[i] += sj[i] * bj;
        }
    }
    let c = C64::new(x[0], x[1]);
    let d = C64::new(x[2], x[3]);
    // propagate to |c| along its own direction
    let (ux, uy) = if c.norm() > 0.0 {
        (c.re / c.norm(), c.im / c.norm())
    } else {
        (1.0, 0.0)
    };
    let var_c: f64 = sens
        .iter()
        .zip(&variances)
        .map(|(sj, v)| (ux * sj[0] + uy * sj[1]).powi(2) * v)
        .sum();
    Ok(Coherences {
        c,
        d,
        c_standard_error: var_c.sqrt(),
        settings: settings.len(),
    })
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub state: DensityMatrix,
    /// Against `ρ_d(η₁)` when a reference η₁ was supplied.
    pub fidelity: Option<f64>,
    pub trace_distance: Option<f64>,
}

/// X-state assembled from the estimates and projected onto density
/// matrices.
pub fn reconstruct(
    diagonals: &Diagonals,
    coherences: Option<&Coherences>,
    reference_eta1: Option<f64>,
) -> Result<Reconstruction> {
    let mut m = CMatrix::diag_real(&diagonals.populations);
    if let Some(co) = coherences {
        m[(1, 2)] = co.c;
        m[(2, 1)] = co.c.conj();
        m[(0, 3)] = co.d;
        m[(3, 0)] = co.d.conj();
    }
    let state = DensityMatrix::new(qubit_pair_layout(), project_to_density(&m)?)?;
    let (fidelity, trace_distance) = match reference_eta1 {
        Some(eta) => {
            let target = rho_discounted(eta)?;
            (Some(fidelity(&state, &target)?), Some(trace_distance(&state, &target)?))
        }
        None => (None, None),
    };
    Ok(Reconstruction {
        state,
        fidelity,
        trace_distance,
    })
}

/// Z setting plus rotated settings, all statistics of one kind.
#[derive(Clone, Debug)]
pub struct TomographyRun<S> {
    pub z: S,
    pub rotated: Vec<S>,
}

impl<S: RecordStats> TomographyRun<S> {
    pub fn reconstruct(
        &self,
        params: &PhysicalParams,
        reference_eta1: Option<f64>,
    ) -> Result<(Diagonals, Coherences, Reconstruction)> {
        let diag = estimate_diagonals(&self.z)?;
        let co = estimate_coherences(&self.rotated, &diag, params)?;
        let rec = reconstruct(&diag, Some(&co), reference_eta1)?;
        Ok((diag, co, rec))
    }
}

/// Exact statistics for the Z setting and `rotated`.
pub fn exact_run(
    final_state: &DensityMatrix,
    q1: &DualRailQubit,
    q2: &DualRailQubit,
    rotated: &[ReadoutSetting],
    model: &MeasurementModel,
    params: &PhysicalParams,
) -> Result<TomographyRun<OutcomeDistribution>> {
    let z = readout_distribution(final_state, q1, q2, &ReadoutSetting::z(), model, params)?;
    let rotated = rotated
        .iter()
        .map(|s| readout_distribution(final_state, q1, q2, s, model, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(TomographyRun { z, rotated })
}

impl TomographyRun<OutcomeDistribution> {
    /// Samples `runs` records per setting; setting `k` uses seed `seed + k`.
    pub fn sample(&self, runs: u64, seed: u64) -> Result<TomographyRun<CountTable>> {
        let z = sample_counts(&self.z, runs, seed)?;
        let rotated = self
            .rotated
            .iter()
            .enumerate()
            .map(|(k, d)| sample_counts(d, runs, seed.wrapping_add(k as u64 + 1)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TomographyRun { z, rotated })
    }
}
