use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Independent generator for one work unit, so parallel and serial runs
/// draw identical numbers.
pub fn unit_rng(seed: u64, unit: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(unit);
    rng
}

pub fn unit_seed(seed: u64, unit: u64) -> u64 {
    unit_rng(seed, unit).next_u64()
}

/// Fold index per trial. Each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped so fold sizes stay within
/// one of each other.
pub fn stratified_folds(labels: &[usize], n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds < 2 {
        return Err(Error::Config(format!(
            "need at least 2 folds, got {n_folds}"
        )));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < n_folds {
            return Err(Error::Data(format!(
                "class {class} has {} trials, fewer than {n_folds} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for i in members {
            folds[i] = next;
            next = (next + 1) % n_folds;
        }
    }
    Ok(folds)
}

/// `(train, test)` index lists for fold `f`.
pub fn split(folds: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    (0..folds.len()).partition(|&i| folds[i] != f)
}
