//! Seeded k-fold partitions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FoldError {
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("{n} items cannot fill {k} folds")]
    TooFewItems { n: usize, k: usize },
}

/// Assignment of `n` items to `k` folds whose sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    seed: u64,
    fold_of: Vec<usize>,
}

impl FoldPlan {
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self, FoldError> {
        if k < 2 {
            return Err(FoldError::TooFewFolds(k));
        }
        if n < k {
            return Err(FoldError::TooFewItems { n, k });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut fold_of = vec![0; n];
        for (slot, &item) in order.iter().enumerate() {
            fold_of[item] = slot % k;
        }
        Ok(Self { k, seed, fold_of })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.fold_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold_of.is_empty()
    }

    pub fn fold_of(&self, item: usize) -> usize {
        self.fold_of[item]
    }

    /// Items held out in `fold`, ascending.
    pub fn test(&self, fold: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    /// Items used for training when `fold` is held out, ascending.
    pub fn train(&self, fold: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(FoldPlan::new(10, 1, 0), Err(FoldError::TooFewFolds(1)));
        assert_eq!(
            FoldPlan::new(3, 5, 0),
            Err(FoldError::TooFewItems { n: 3, k: 5 })
        );
    }

    proptest! {
        #[test]
        fn partitions_with_balanced_sizes(n in 2usize..300, k in 2usize..10, seed in any::<u64>()) {
            prop_assume!(n >= k);
            let plan = FoldPlan::new(n, k, seed).unwrap();
            let mut seen = vec![0u32; n];
            let sizes: Vec<usize> = (0..k).map(|f| plan.test(f).len()).collect();
            for f in 0..k {
                for i in plan.test(f) {
                    seen[i] += 1;
                }
                prop_assert_eq!(plan.test(f).len() + plan.train(f).len(), n);
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert_eq!(FoldPlan::new(n, k, seed).unwrap(), plan);
        }
    }
}
