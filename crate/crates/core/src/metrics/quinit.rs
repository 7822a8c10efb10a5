// SPDX-License-Identifier: Apache-2.0

//! Five-level ("quinit") view of a dual-rail pair and the two
//! post-processing channels that fold leakage back into qubit form.

use serde::{Deserialize, Serialize};

use crate::analytic::qubit_pair_layout;
use crate::error::{Error, Result};
use crate::logical::DualRailQubit;
use crate::statekit::{CMatrix, DensityMatrix, SlotLayout, SlotRole, C64};

/// Quinit levels per qubit, indexed by level.
pub const QUINIT_LEVELS: [(usize, usize); 5] = [(1, 0), (0, 1), (2, 0), (0, 2), (0, 0)];
pub const QUINIT_DIM: usize = 5;
/// Computational basis states `|00⟩, |01⟩, |10⟩, |11⟩` as quinit-pair indices.
pub const COMPUTATIONAL: [usize; 4] = [0, 1, QUINIT_DIM, QUINIT_DIM + 1];

/// Weight tolerated on rail configurations without a quinit level.
pub const UNMAPPED_TOL: f64 = 1e-10;

fn quinit_level(rails: (usize, usize)) -> Option<usize> {
    QUINIT_LEVELS.iter().position(|&l| l == rails)
}

pub fn quinit_pair_layout() -> SlotLayout {
    SlotLayout::builder()
        .slot("Q1", QUINIT_DIM, SlotRole::Mode)
        .slot("Q2", QUINIT_DIM, SlotRole::Mode)
        .build()
        .expect("static layout")
}

/// Two quinits `Q1 ⊗ Q2` (25 levels).
#[derive(Clone, Debug, PartialEq)]
pub struct QuinitState {
    rho: DensityMatrix,
}

impl QuinitState {
    pub fn new(rho: DensityMatrix) -> Result<Self> {
        if rho.layout().dims() != [QUINIT_DIM, QUINIT_DIM] {
            return Err(Error::DimensionMismatch {
                expected: QUINIT_DIM * QUINIT_DIM,
                found: rho.layout().dim(),
            });
        }
        Ok(Self { rho })
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn into_density(self) -> DensityMatrix {
        self.rho
    }

    pub fn matrix(&self) -> &CMatrix {
        self.rho.matrix()
    }

    /// Weight on the four computational states.
    pub fn computational_weight(&self) -> f64 {
        COMPUTATIONAL.iter().map(|&i| self.matrix()[(i, i)].re).sum()
    }

    /// Computational block renormalized to a two-qubit state.
    pub fn projected_qubits(&self) -> Result<DensityMatrix> {
        let w = self.computational_weight();
        if w <= 0.0 {
            return Err(Error::NotNormalized(w));
        }
        let m = CMatrix::from_fn(4, 4, |a, b| self.matrix()[(COMPUTATIONAL[a], COMPUTATIONAL[b])] / w);
        DensityMatrix::new(qubit_pair_layout(), m)
    }
}

/// Relabels the mode state of two dual-rail qubits as a quinit pair.
pub fn to_quinits(rho: &DensityMatrix, q1: &DualRailQubit, q2: &DualRailQubit) -> Result<QuinitState> {
    let layout = rho.layout();
    let rails = [
        layout.position(&q1.rail0)?,
        layout.position(&q1.rail1)?,
        layout.position(&q2.rail0)?,
        layout.position(&q2.rail1)?,
    ];
    let map: Vec<Option<usize>> = (0..layout.dim())
        .map(|i| {
            let occ = layout.occupations(i);
            // every slot other than the four rails has to be empty
            let others_empty = occ.iter().enumerate().all(|(k, &n)| n == 0 || rails.contains(&k));
            if !others_empty {
                return None;
            }
            let a = quinit_level((occ[rails[0]], occ[rails[1]]))?;
            let b = quinit_level((occ[rails[2]], occ[rails[3]]))?;
            Some(a * QUINIT_DIM + b)
        })
        .collect();

    let unmapped: f64 = map
        .iter()
        .enumerate()
        .filter(|(_, m)| m.is_none())
        .map(|(i, _)| rho.matrix()[(i, i)].re)
        .sum();
    if unmapped > UNMAPPED_TOL {
        return Err(Error::Unmappable(unmapped));
    }

    let n = QUINIT_DIM * QUINIT_DIM;
    let mut m = CMatrix::zeros(n, n);
    for (i, mi) in map.iter().enumerate() {
        let Some(a) = mi else { continue };
        for (j, mj) in map.iter().enumerate() {
            if let Some(b) = mj {
                m[(*a, *b)] = rho.matrix()[(i, j)];
            }
        }
    }
    QuinitState::new(DensityMatrix::new(quinit_pair_layout(), m)?)
}

/// Which non-computational levels receive the dephased population.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutsideLevels {
    /// All 21 non-computational levels.
    #[default]
    All,
    /// Only the non-computational levels with nonzero population.
    Populated,
}

/// Keeps the computational block and replaces everything else by a uniform
/// mixture carrying the same weight.
pub fn dephase_outside(q: &QuinitState, levels: OutsideLevels) -> Result<QuinitState> {
    let n = QUINIT_DIM * QUINIT_DIM;
    let src = q.matrix();
    let mut m = CMatrix::zeros(n, n);
    for &a in &COMPUTATIONAL {
        for &b in &COMPUTATIONAL {
            m[(a, b)] = src[(a, b)];
        }
    }
    let outside: Vec<usize> = (0..n)
        .filter(|i| !COMPUTATIONAL.contains(i))
        .filter(|&i| levels == OutsideLevels::All || src[(i, i)].re > UNMAPPED_TOL)
        .collect();
    let p_out = (q.density().trace() - q.computational_weight()).max(0.0);
    if !outside.is_empty() {
        let w = p_out / outside.len() as f64;
        for &i in &outside {
            m[(i, i)] = C64::new(w, 0.0);
        }
    }
    QuinitState::new(DensityMatrix::new(quinit_pair_layout(), m)?)
}

#[derive(Clone, Debug)]
pub struct Discounted {
    pub state: DensityMatrix,
    /// Leaked population moved to `|00⟩` (patterns with level 2).
    pub to_00: f64,
    /// Leaked population moved to `|11⟩` (patterns with level 3).
    pub to_11: f64,
    /// Leaked population without a recognized pattern, split evenly.
    pub unrecognized: f64,
}

/// Returns leaked population to the computational subspace as classical
/// `|00⟩`/`|11⟩` weight: level-2 leakage (lost `|0⟩_L` excitations) to `|00⟩`,
/// level-3 leakage to `|11⟩`, anything else half and half. Coherences
/// involving leaked levels are dropped.
pub fn discount(q: &QuinitState) -> Result<Discounted> {
    let src = q.matrix();
    let mut m = CMatrix::from_fn(4, 4, |a, b| src[(COMPUTATIONAL[a], COMPUTATIONAL[b])]);
    let (mut to_00, mut to_11, mut unrecognized) = (0.0, 0.0, 0.0);
    for i in 0..QUINIT_DIM * QUINIT_DIM {
        if COMPUTATIONAL.contains(&i) {
            continue;
        }
        let w = src[(i, i)].re;
        let levels = [i / QUINIT_DIM, i % QUINIT_DIM];
        let has2 = levels.contains(&2);
        let has3 = levels.contains(&3);
        match (has2, has3) {
            (true, false) => to_00 += w,
            (false, true) => to_11 += w,
            _ => unrecognized += w,
        }
    }
    m[(0, 0)] += C64::new(to_00 + unrecognized / 2.0, 0.0);
    m[(3, 3)] += C64::new(to_11 + unrecognized / 2.0, 0.0);
    Ok(Discounted {
        state: DensityMatrix::new(qubit_pair_layout(), m)?,
        to_00,
        to_11,
        unrecognized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logical::modes_layout;
    use crate::statekit::StateVector;

    fn basis(occ: &[usize]) -> DensityMatrix {
        StateVector::basis(modes_layout(), occ).unwrap().to_density()
    }

    fn pair() -> (DualRailQubit, DualRailQubit) {
        DualRailQubit::standard_pair()
    }

    fn level_of(q: &QuinitState) -> usize {
        (0..25).find(|&i| (q.matrix()[(i, i)].re - 1.0).abs() < 1e-15).unwrap()
    }

    #[test]
    fn level_map_examples() {
        let (q1, q2) = pair();
        assert_eq!(level_of(&to_quinits(&basis(&[1, 0, 0, 1]), &q1, &q2).unwrap()), 1);
        assert_eq!(
            level_of(&to_quinits(&basis(&[0, 0, 2, 0]), &q1, &q2).unwrap()),
            4 * 5 + 2
        );
        assert_eq!(level_of(&to_quinits(&basis(&[0, 0, 0, 0]), &q1, &q2).unwrap()), 24);
    }

    #[test]
    fn unmappable_weight_reported() {
        let (q1, q2) = pair();
        let err = to_quinits(&basis(&[1, 1, 1, 0]), &q1, &q2).unwrap_err();
        assert_eq!(err, Error::Unmappable(1.0));
    }

    #[test]
    fn computational_state_survives_dephasing() {
        let (q1, q2) = pair();
        let q = to_quinits(&basis(&[1, 0, 0, 1]), &q1, &q2).unwrap();
        assert_eq!(dephase_outside(&q, OutsideLevels::All).unwrap(), q);
    }

    #[test]
    fn populated_option_spreads_over_fewer_levels() {
        let (q1, q2) = pair();
        let rho = DensityMatrix::mixture(&[(0.5, &basis(&[1, 0, 0, 1])), (0.5, &basis(&[0, 0, 2, 0]))]).unwrap();
        let q = to_quinits(&rho, &q1, &q2).unwrap();
        let all = dephase_outside(&q, OutsideLevels::All).unwrap();
        assert!((all.matrix()[(22, 22)].re - 0.5 / 21.0).abs() < 1e-15);
        let pop = dephase_outside(&q, OutsideLevels::Populated).unwrap();
        assert!((pop.matrix()[(22, 22)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn discount_routes_by_pattern() {
        let (q1, q2) = pair();
        let rho = DensityMatrix::mixture(&[
            (0.25, &basis(&[0, 0, 2, 0])),
            (0.25, &basis(&[0, 2, 0, 0])),
            (0.5, &basis(&[0, 0, 0, 0])),
        ])
        .unwrap();
        let d = discount(&to_quinits(&rho, &q1, &q2).unwrap()).unwrap();
        assert!((d.to_00 - 0.25).abs() < 1e-15);
        assert!((d.to_11 - 0.25).abs() < 1e-15);
        assert!((d.unrecognized - 0.5).abs() < 1e-15);
        assert!((d.state.entry(&[0, 0], &[0, 0]).unwrap().re - 0.5).abs() < 1e-15);
        assert!((d.state.trace() - 1.0).abs() < 1e-15);
    }
}
