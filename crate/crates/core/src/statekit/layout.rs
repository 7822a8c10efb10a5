// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of Fock levels per slot unless stated otherwise (|0⟩, |1⟩, |2⟩).
pub const DEFAULT_SLOT_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotRole {
    Mode,
    Cavity,
    Flag,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub label: String,
    pub dim: usize,
    pub role: SlotRole,
}

impl Slot {
    pub fn new(label: impl Into<String>, dim: usize, role: SlotRole) -> Self {
        Self {
            label: label.into(),
            dim,
            role,
        }
    }
}

/// Ordered register of labeled, Fock-truncated slots.
///
/// Basis states are enumerated row-major: the first slot is the most
/// significant digit, so `|n₁ n₂ … n_k⟩` sits at `Σ nᵢ·strideᵢ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotLayout {
    slots: Vec<Slot>,
}

impl SlotLayout {
    pub fn new(slots: Vec<Slot>) -> Result<Self> {
        for (i, s) in slots.iter().enumerate() {
            if s.dim < 2 {
                return Err(Error::SlotTooSmall {
                    label: s.label.clone(),
                    dim: s.dim,
                });
            }
            if slots[..i].iter().any(|o| o.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        Ok(Self { slots })
    }

    pub fn builder() -> LayoutBuilder {
        LayoutBuilder::default()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.slots.iter().map(|s| s.dim).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.dim).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.slots.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.slots
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        let pos = labels.iter().map(|l| self.position(l)).collect::<Result<Vec<_>>>()?;
        for (i, p) in pos.iter().enumerate() {
            if pos[..i].contains(p) {
                return Err(Error::DuplicateLabel(labels[i].to_string()));
            }
        }
        Ok(pos)
    }

    pub fn slot(&self, label: &str) -> Result<&Slot> {
        Ok(&self.slots[self.position(label)?])
    }

    /// Label of the first slot with the given role.
    pub fn first_with_role(&self, role: SlotRole) -> Option<&str> {
        self.slots.iter().find(|s| s.role == role).map(|s| s.label.as_str())
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.slots.len()];
        for k in (0..self.slots.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.slots[k + 1].dim;
        }
        strides
    }

    /// Per-slot occupations of a basis index.
    pub fn occupations(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.slots.len()];
        for k in (0..self.slots.len()).rev() {
            occ[k] = index % self.slots[k].dim;
            index /= self.slots[k].dim;
        }
        occ
    }

    pub fn index_of(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.slots.len() {
            return Err(Error::DimensionMismatch {
                expected: self.slots.len(),
                found: occupations.len(),
            });
        }
        let mut index = 0;
        for (s, &n) in self.slots.iter().zip(occupations) {
            if n >= s.dim {
                return Err(Error::InvalidParameter(format!(
                    "occupation {n} exceeds the cutoff of slot `{}`",
                    s.label
                )));
            }
            index = index * s.dim + n;
        }
        Ok(index)
    }

    /// Layout of `self` followed by `other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut slots = self.slots.clone();
        slots.extend(other.slots.iter().cloned());
        Self::new(slots)
    }

    /// Sub-layout made of the named slots, in the order given.
    pub fn select(&self, labels: &[&str]) -> Result<Self> {
        let pos = self.positions(labels)?;
        Self::new(pos.iter().map(|&p| self.slots[p].clone()).collect())
    }

    pub(crate) fn local_index(&self, targets: &[usize]) -> LocalIndex {
        let strides = self.strides();
        let mut offsets = vec![0usize];
        for &t in targets {
            let (d, stride) = (self.slots[t].dim, strides[t]);
            offsets = offsets
                .iter()
                .flat_map(|&o| (0..d).map(move |n| o + n * stride))
                .collect();
        }
        let mut bases = vec![0usize];
        for (k, slot) in self.slots.iter().enumerate() {
            if targets.contains(&k) {
                continue;
            }
            let stride = strides[k];
            bases = bases
                .iter()
                .flat_map(|&b| (0..slot.dim).map(move |n| b + n * stride))
                .collect();
        }
        LocalIndex { offsets, bases }
    }
}

/// Index tables for acting on a subset of slots.
///
/// Global index of (local `l`, rest `r`) is `bases[r] + offsets[l]`, with the
/// local index enumerated in the order the target slots were given.
#[derive(Clone, Debug)]
pub(crate) struct LocalIndex {
    pub offsets: Vec<usize>,
    pub bases: Vec<usize>,
}

#[derive(Default, Debug, Clone)]
pub struct LayoutBuilder {
    slots: Vec<Slot>,
}

impl LayoutBuilder {
    pub fn mode(self, label: &str) -> Self {
        self.slot(label, DEFAULT_SLOT_DIM, SlotRole::Mode)
    }

    pub fn cavity(self, label: &str) -> Self {
        self.slot(label, DEFAULT_SLOT_DIM, SlotRole::Cavity)
    }

    /// Two-level readout flag.
    pub fn flag(self, label: &str) -> Self {
        self.slot(label, 2, SlotRole::Flag)
    }

    pub fn slot(mut self, label: &str, dim: usize, role: SlotRole) -> Self {
        self.slots.push(Slot::new(label, dim, role));
        self
    }

    pub fn build(self) -> Result<SlotLayout> {
        SlotLayout::new(self.slots)
    }
}
