use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// A seeded random partition of sample indices into `k` folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    /// `assignment[i]` is the fold of sample `i`.
    pub assignment: Vec<usize>,
    pub seed: u64,
}

/// Shuffles `0..n` and deals the permutation round-robin, so fold sizes
/// differ by at most one.
pub fn make_folds(n_samples: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Argument(format!("need at least 2 folds, got {k}")));
    }
    if k > n_samples {
        return Err(Error::Argument(format!("{k} folds for {n_samples} samples")));
    }
    let mut order: Vec<usize> = (0..n_samples).collect();
    order.shuffle(&mut seed::stream(seed, "folds", k as u64));
    let mut assignment = vec![0; n_samples];
    for (pos, &idx) in order.iter().enumerate() {
        assignment[idx] = pos % k;
    }
    Ok(FoldAssignment { k, assignment, seed })
}

/// Random `(train, rest)` split with `round(fraction·n)` training indices,
/// each list sorted.
pub fn holdout_split(n_samples: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::Argument(format!("train fraction {train_fraction} outside [0, 1]")));
    }
    let mut order: Vec<usize> = (0..n_samples).collect();
    order.shuffle(&mut seed::stream(seed, "holdout", 0));
    let cut = (train_fraction * n_samples as f64).round() as usize;
    let (mut train, mut rest) = (order[..cut].to_vec(), order[cut..].to_vec());
    train.sort_unstable();
    rest.sort_unstable();
    Ok((train, rest))
}

impl FoldAssignment {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}
