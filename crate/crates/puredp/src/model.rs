//! The secure-intermediary execution model.
//!
//! A protocol is a triple: per-user randomizers, an intermediary
//! functionality (shuffler or aggregator), and an analyzer. An attack fixes
//! a set of corrupted users together with the message each of them injects
//! (or `None` for a dropout). [`execute`] runs one protocol instance and
//! assembles the transcript, including the adversary's view: the corrupted
//! set, the injected messages, the corrupted users' inputs, and the
//! intermediary's output.
//!
//! Intermediaries are ideal functionalities — pure functions plus a seeded
//! rng — not cryptographic implementations.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dist::Rng;
use crate::{Error, Result};

/// The multiset of messages presented to an intermediary: up to `n` rows,
/// each a `dims`-dimensional vector of residues modulo `modulus`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageBatch {
    dims: usize,
    modulus: u64,
    rows: Vec<Vec<u64>>,
}

impl MessageBatch {
    pub fn new(dims: usize, modulus: u64) -> Result<Self> {
        if dims == 0 {
            return Err(Error::parameter("batch dimension must be at least 1"));
        }
        if modulus < 2 {
            return Err(Error::parameter(format!("batch modulus {modulus} must be at least 2")));
        }
        Ok(MessageBatch { dims, modulus, rows: Vec::new() })
    }

    pub fn from_rows(dims: usize, modulus: u64, rows: Vec<Vec<u64>>) -> Result<Self> {
        let mut batch = MessageBatch::new(dims, modulus)?;
        for row in rows {
            batch.push_row(row)?;
        }
        Ok(batch)
    }

    pub fn push_row(&mut self, row: Vec<u64>) -> Result<()> {
        if row.len() != self.dims {
            return Err(Error::structural(format!(
                "row has {} entries, batch dimension is {}",
                row.len(),
                self.dims
            )));
        }
        if let Some(&bad) = row.iter().find(|&&e| e >= self.modulus) {
            return Err(Error::structural(format!(
                "row entry {bad} not below modulus {}",
                self.modulus
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row-major concatenation of all entries.
    pub fn flatten(&self) -> Vec<u64> {
        self.rows.iter().flatten().copied().collect()
    }
}

/// The aggregator functionality: the coordinatewise sum of all rows, reduced
/// modulo the batch modulus. An empty batch aggregates to the zero vector.
pub fn aggregate(batch: &MessageBatch) -> Vec<u64> {
    let mut sums = vec![0u64; batch.dims()];
    for row in batch.rows() {
        for (acc, &e) in sums.iter_mut().zip(row) {
            *acc = (*acc + e) % batch.modulus();
        }
    }
    sums
}

/// The shuffler functionality: concatenates the batch entries and applies a
/// uniformly random permutation to the resulting flat vector.
pub fn shuffle(batch: &MessageBatch, rng: &mut Rng) -> Vec<u64> {
    let mut flat = batch.flatten();
    rng.shuffle(&mut flat);
    flat
}

/// The canonical (sorted) view of the shuffler's output. The shuffler's
/// output distribution is a function of the entry multiset alone, so the
/// sorted form is a lossless stand-in used by the exact-distribution
/// oracles; sampled permutations appear only in transcripts.
pub fn canonical_shuffle(batch: &MessageBatch) -> Vec<u64> {
    let mut flat = batch.flatten();
    flat.sort_unstable();
    flat
}

/// A fixed attack: corrupted user indices mapped to the row each injects,
/// or `None` for a dropout. Dropouts contribute nothing to the batch.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Attack {
    corrupted: BTreeMap<usize, Option<Vec<u64>>>,
}

impl Attack {
    /// The empty attack: every user honest.
    pub fn none() -> Self {
        Attack::default()
    }

    pub fn new(corrupted: BTreeMap<usize, Option<Vec<u64>>>) -> Self {
        Attack { corrupted }
    }

    /// Drops the given users entirely.
    pub fn dropouts(users: impl IntoIterator<Item = usize>) -> Self {
        Attack { corrupted: users.into_iter().map(|u| (u, None)).collect() }
    }

    pub fn corrupted(&self) -> impl Iterator<Item = usize> + '_ {
        self.corrupted.keys().copied()
    }

    pub fn corrupted_count(&self) -> usize {
        self.corrupted.len()
    }

    pub fn injection(&self, user: usize) -> Option<&Option<Vec<u64>>> {
        self.corrupted.get(&user)
    }

    /// Whether the corruption stays within the minority bound `n/2` assumed
    /// by the robust-privacy experiments.
    pub fn is_minority(&self, n: usize) -> bool {
        2 * self.corrupted.len() <= n
    }
}

/// What the adversary sees: its own users and messages plus the
/// intermediary's output.
#[derive(Debug, Clone, Serialize)]
pub struct AdversaryView<X, O> {
    pub corrupted: Vec<usize>,
    pub injections: Vec<Option<Vec<u64>>>,
    pub corrupted_inputs: Vec<X>,
    pub intermediary_output: O,
}

/// One protocol execution's record.
#[derive(Debug, Clone, Serialize)]
pub struct Transcript<X, O, V> {
    pub inputs: Vec<X>,
    pub honest_messages: Vec<Vec<u64>>,
    pub intermediary_output: O,
    pub analyzer_output: V,
    pub view: AdversaryView<X, O>,
}

/// Runs one execution: corrupted users emit their fixed injections (dropouts
/// contribute nothing), honest users emit randomizer outputs, the
/// intermediary runs on the assembled batch, and the analyzer runs on the
/// intermediary's output.
///
/// Each honest user draws from its own substream of `rng`; the intermediary
/// and analyzer get dedicated substreams, so executions are replayable from
/// `(seed, stream)` alone.
#[allow(clippy::too_many_arguments)]
pub fn execute<X, O, V>(
    dims: usize,
    modulus: u64,
    inputs: &[X],
    attack: &Attack,
    mut randomizer: impl FnMut(usize, &X, &mut Rng) -> Result<Vec<u64>>,
    intermediary: impl FnOnce(&MessageBatch, &mut Rng) -> O,
    analyzer: impl FnOnce(&O, &mut Rng) -> V,
    rng: &Rng,
) -> Result<Transcript<X, O, V>>
where
    X: Clone,
    O: Clone,
{
    let n = inputs.len();
    if let Some(bad) = attack.corrupted().find(|&u| u >= n) {
        return Err(Error::structural(format!("attack corrupts user {bad} but only {n} users exist")));
    }

    let mut batch = MessageBatch::new(dims, modulus)?;
    let mut honest_messages = Vec::new();
    for (i, input) in inputs.iter().enumerate() {
        match attack.injection(i) {
            Some(Some(row)) => batch.push_row(row.clone())?,
            Some(None) => {} // dropout
            None => {
                let mut user_rng = rng.substream(i as u64);
                let row = randomizer(i, input, &mut user_rng)?;
                honest_messages.push(row.clone());
                batch.push_row(row)?;
            }
        }
    }

    let mut intermediary_rng = rng.substream(n as u64);
    let output = intermediary(&batch, &mut intermediary_rng);

    let mut analyzer_rng = rng.substream(n as u64 + 1);
    let analyzer_output = analyzer(&output, &mut analyzer_rng);

    let corrupted: Vec<usize> = attack.corrupted().collect();
    let view = AdversaryView {
        injections: corrupted.iter().map(|&u| attack.injection(u).cloned().unwrap()).collect(),
        corrupted_inputs: corrupted.iter().map(|&u| inputs[u].clone()).collect(),
        corrupted,
        intermediary_output: output.clone(),
    };

    Ok(Transcript {
        inputs: inputs.to_vec(),
        honest_messages,
        intermediary_output: output,
        analyzer_output,
        view,
    })
}
