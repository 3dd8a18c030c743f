use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subject-disjoint partition of a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<u32>,
    pub validation: Vec<u32>,
    pub test: Vec<u32>,
}

impl DatasetSplit {
    pub fn all(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.train.iter().chain(&self.validation).chain(&self.test).copied().collect();
        v.sort_unstable();
        v
    }

    pub fn contains_train(&self, s: u32) -> bool {
        self.train.binary_search(&s).is_ok()
    }

    pub fn contains_validation(&self, s: u32) -> bool {
        self.validation.binary_search(&s).is_ok()
    }

    pub fn contains_test(&self, s: u32) -> bool {
        self.test.binary_search(&s).is_ok()
    }
}

/// Shuffles the distinct subject ids with `seed` and cuts them by
/// `fractions` (train, validation, test), rounding the first two counts.
pub fn make_split(subjects: &[u32], fractions: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    if fractions.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
        return Err(Error::domain(format!("split fractions must be non-negative, got {fractions:?}")));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("split fractions must sum to 1, got {sum}")));
    }
    let mut ids = subjects.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 3 {
        return Err(Error::domain(format!("a split needs at least 3 subjects, got {}", ids.len())));
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = ids.len();
    let n_train = ((fractions[0] * n as f64).round() as usize).min(n);
    let n_val = ((fractions[1] * n as f64).round() as usize).min(n - n_train);
    let part = |r: std::ops::Range<usize>| {
        let mut v = ids[r].to_vec();
        v.sort_unstable();
        v
    };
    Ok(DatasetSplit {
        train: part(0..n_train),
        validation: part(n_train..n_train + n_val),
        test: part(n_train + n_val..n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_subjects() {
        let ids: Vec<u32> = (1..=10).collect();
        let s = make_split(&ids, [0.6, 0.2, 0.2], 3).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (6, 2, 2));
        assert_eq!(s, make_split(&ids, [0.6, 0.2, 0.2], 3).unwrap());
        assert_eq!(s.all(), ids);
    }

    #[test]
    fn errors() {
        assert!(make_split(&[1, 2, 3], [0.5, 0.2, 0.2], 0).is_err());
        assert!(make_split(&[1, 2, 2], [0.6, 0.2, 0.2], 0).is_err());
        assert!(make_split(&[1, 2, 3], [1.2, -0.2, 0.0], 0).is_err());
    }
}
