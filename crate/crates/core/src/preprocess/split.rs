//! Seeded train/test partitioning.
//!
//! Splits are driven by ChaCha8 seeded with `seed_from_u64(seed)`, consumed
//! as raw 64-bit words. Bounded draws use rejection sampling and the
//! permutation is a descending Fisher–Yates shuffle, so the sequence depends
//! only on the ChaCha8 stream and is reproducible across implementations.

use super::PreprocessError;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub test_fraction: f64,
}

/// Uniform draw in `0..bound` without modulo bias.
fn uniform_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let zone = u64::MAX - (u64::MAX - bound + 1) % bound;
    loop {
        let v = rng.next_u64();
        if v <= zone {
            return v % bound;
        }
    }
}

/// Seeded uniform permutation of `0..n`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = uniform_below(&mut rng, i as u64 + 1) as usize;
        order.swap(i, j);
    }
    order
}

/// Partitions `0..n` into sorted train and test index sets with
/// `round(n * test_fraction)` test rows.
pub fn train_test_split(n: usize, test_fraction: f64, seed: u64) -> Result<SplitIndices, PreprocessError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(PreprocessError::BadFraction(test_fraction));
    }
    if n < 2 {
        return Err(PreprocessError::DegenerateSplit(format!("cannot split {n} rows")));
    }
    let test_len = (n as f64 * test_fraction).round() as usize;
    if test_len == 0 || test_len == n {
        return Err(PreprocessError::DegenerateSplit(format!(
            "fraction {test_fraction} of {n} rows leaves an empty side"
        )));
    }
    let order = permutation(n, seed);
    let mut test = order[..test_len].to_vec();
    let mut train = order[test_len..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok(SplitIndices { train, test, seed, test_fraction })
}

/// Keeps at most `cap` of `indices`, chosen by a seeded shuffle; output sorted.
pub fn subsample(indices: &[usize], cap: usize, seed: u64) -> Vec<usize> {
    if indices.len() <= cap {
        return indices.to_vec();
    }
    let order = permutation(indices.len(), seed ^ 0x5eed_5eed_5eed_5eed);
    let mut kept: Vec<usize> = order[..cap].iter().map(|&i| indices[i]).collect();
    kept.sort_unstable();
    kept
}
