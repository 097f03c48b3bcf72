//! One labelled train/test split per Monte-Carlo iteration.
//!
//! Positives are the concept's in-vocabulary words, shuffled and cut in half
//! (train takes the extra word when the size is odd). Negatives come from the
//! vocabulary minus the concept: one draw without replacement, the first
//! `|train_pos|` go to training and the next `|test_pos|` to testing.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::concepts::{ResolvedConcept, MIN_RESOLVED_SIZE};
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::rng::SeedPath;

/// Four pairwise-disjoint lists of store rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvaluationSplit {
    pub train_pos: Vec<usize>,
    pub train_neg: Vec<usize>,
    pub test_pos: Vec<usize>,
    pub test_neg: Vec<usize>,
    pub iteration_index: usize,
    pub seed: u64,
}

impl EvaluationSplit {
    /// Training rows followed by their labels (positives first).
    pub fn train_set(&self) -> (Vec<usize>, Vec<bool>) {
        labelled(&self.train_pos, &self.train_neg)
    }

    pub fn test_set(&self) -> (Vec<usize>, Vec<bool>) {
        labelled(&self.test_pos, &self.test_neg)
    }

    pub fn words<'a>(&self, store: &'a EmbeddingStore) -> SplitWords<'a> {
        let names = |v: &[usize]| v.iter().map(|&i| store.word(i)).collect();
        SplitWords {
            train_pos: names(&self.train_pos),
            train_neg: names(&self.train_neg),
            test_pos: names(&self.test_pos),
            test_neg: names(&self.test_neg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitWords<'a> {
    pub train_pos: Vec<&'a str>,
    pub train_neg: Vec<&'a str>,
    pub test_pos: Vec<&'a str>,
    pub test_neg: Vec<&'a str>,
}

fn labelled(pos: &[usize], neg: &[usize]) -> (Vec<usize>, Vec<bool>) {
    let rows = pos.iter().chain(neg).copied().collect();
    let labels = std::iter::repeat_n(true, pos.len())
        .chain(std::iter::repeat_n(false, neg.len()))
        .collect();
    (rows, labels)
}

/// Seed for iteration `iteration_index` of `concept` on `embedding`.
pub fn split_seed(master_seed: u64, concept: &str, embedding: &str, iteration_index: usize) -> u64 {
    SeedPath::new(master_seed)
        .label("split")
        .label(concept)
        .label(embedding)
        .index(iteration_index as u64)
        .seed()
}

pub fn make_split(
    resolved: &ResolvedConcept,
    store: &EmbeddingStore,
    iteration_index: usize,
    master_seed: u64,
) -> Result<EvaluationSplit> {
    let n = resolved.size();
    if n < MIN_RESOLVED_SIZE {
        return Err(Error::InvalidInput(format!(
            "concept {:?} has {n} words, need at least {MIN_RESOLVED_SIZE}",
            resolved.name()
        )));
    }
    if store.len() < 2 * n + 2 {
        return Err(Error::VocabularyTooSmall {
            message: format!(
                "{:?} has {} words; concept {:?} with {n} words needs at least {}",
                store.name(),
                store.len(),
                resolved.name(),
                2 * n + 2
            ),
        });
    }

    let seed = split_seed(master_seed, resolved.name(), store.name(), iteration_index);
    let mut rng = SeedPath::new(seed).rng();

    let mut positives = resolved.indices().to_vec();
    positives.shuffle(&mut rng);
    let n_train = n.div_ceil(2);
    let test_pos = positives.split_off(n_train);
    let train_pos = positives;

    let mut members = resolved.indices().to_vec();
    members.sort_unstable();
    let complement_len = store.len() - n;
    let mut negatives: Vec<usize> = sample(&mut rng, complement_len, n)
        .into_iter()
        .map(|k| nth_non_member(&members, k))
        .collect();
    let test_neg = negatives.split_off(n_train);
    let train_neg = negatives;

    Ok(EvaluationSplit {
        train_pos,
        train_neg,
        test_pos,
        test_neg,
        iteration_index,
        seed,
    })
}

/// The `k`-th (0-based) non-negative integer not in `sorted_members`.
fn nth_non_member(sorted_members: &[usize], k: usize) -> usize {
    // sorted_members[j] - j counts the non-members below sorted_members[j]
    // and is non-decreasing in j
    let (mut lo, mut hi) = (0, sorted_members.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if sorted_members[mid] - mid <= k {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    k + lo
}
