//! Classical bookkeeping for GHZ states under fusion and single-qubit
//! X measurement.
//!
//! A GHZ state on qubit set S is tracked purely by S (a `GhzRecord`).
//! Fusing n qubits drawn from distinct states merges those states and
//! discards the n fused qubits: sizes {m_1, .., m_k} become m_1 + .. + m_k - n
//! on success. On failure every fused qubit is measured out of its own state
//! instead, shrinking each size by the number of its members that were fused.
//! Measuring a qubit in the X basis simply removes it from its state (a
//! single-qubit state vanishes).

use std::collections::BTreeSet;

use crate::{Error, Result};

/// Qubit set of one GHZ state. Qubit ids are global and must be unique
/// across a collection of records.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GhzRecord {
    qubits: BTreeSet<u32>,
}

impl GhzRecord {
    pub fn new(qubits: impl IntoIterator<Item = u32>) -> GhzRecord {
        GhzRecord { qubits: qubits.into_iter().collect() }
    }

    /// Bell pair on the two ends of a link.
    pub fn bell(a: u32, b: u32) -> GhzRecord {
        GhzRecord::new([a, b])
    }

    pub fn size(&self) -> usize {
        self.qubits.len()
    }

    pub fn contains(&self, q: u32) -> bool {
        self.qubits.contains(&q)
    }

    pub fn qubits(&self) -> impl Iterator<Item = u32> + '_ {
        self.qubits.iter().copied()
    }

    /// Removes `q` (X measurement). Returns false if the state is gone
    /// (i.e. it held only `q`).
    pub fn x_measure(&mut self, q: u32) -> Result<bool> {
        if !self.qubits.remove(&q) {
            return Err(Error::Fusion(format!("qubit {q} not in this state")));
        }
        Ok(!self.qubits.is_empty())
    }
}

/// Outcome of an n-qubit fusion on a set of GHZ records.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FusionOutcome {
    /// Merged state over all unfused member qubits.
    Success(GhzRecord),
    /// Survivors of each input state after its fused qubits were measured
    /// out; states reduced to nothing are dropped.
    Failure(Vec<GhzRecord>),
}

/// Applies an n-qubit fusion to `records`, where `fused` names exactly one
/// qubit in each of n distinct records.
///
/// Errors when a fused qubit is missing from every record or when two fused
/// qubits live in the same record (fusing a state with itself needs the
/// ledger in `protocol`, which tracks merges cycle-wide).
pub fn fuse_ghz_records(
    records: &[GhzRecord],
    fused: &[u32],
    success: bool,
) -> Result<FusionOutcome> {
    if fused.len() < 2 {
        return Err(Error::Fusion(format!("fusion needs >= 2 qubits, got {}", fused.len())));
    }
    let mut owner = vec![None; fused.len()];
    for (i, rec) in records.iter().enumerate() {
        for (j, &q) in fused.iter().enumerate() {
            if rec.contains(q) {
                match owner[j] {
                    None => owner[j] = Some(i),
                    Some(prev) => {
                        return Err(Error::Fusion(format!(
                            "qubit {q} appears in records {prev} and {i}"
                        )))
                    }
                }
            }
        }
    }
    let mut touched = Vec::new();
    for (j, o) in owner.iter().enumerate() {
        match o {
            None => {
                return Err(Error::Fusion(format!("qubit {} not found in any record", fused[j])))
            }
            Some(i) => {
                if touched.contains(i) {
                    return Err(Error::Fusion(format!(
                        "record {i} contributes two fused qubits; merge it cycle-wide instead"
                    )));
                }
                touched.push(*i);
            }
        }
    }
    if success {
        let mut merged = BTreeSet::new();
        for &i in &touched {
            merged.extend(records[i].qubits());
        }
        for q in fused {
            merged.remove(q);
        }
        Ok(FusionOutcome::Success(GhzRecord { qubits: merged }))
    } else {
        let mut survivors = Vec::new();
        for (&i, &q) in touched.iter().zip(fused) {
            let mut rec = records[i].clone();
            rec.x_measure(q)?;
            if rec.size() > 0 {
                survivors.push(rec);
            }
        }
        Ok(FusionOutcome::Failure(survivors))
    }
}
