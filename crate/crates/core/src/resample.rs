//! Seeded random streams and stratified fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Mixes a base seed with a path of identifiers (splitmix64 finalizer), so
/// every job gets an independent stream regardless of execution order.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut state = base;
    for &id in path {
        state = mix(state ^ mix(id.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    mix(state)
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Splits instance indices into `k` folds with class proportions preserved.
///
/// Each class is shuffled and dealt round-robin; the dealing position carries
/// over between classes so fold sizes differ by at most one. Returns the test
/// indices of every fold, each sorted ascending.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("at least 2 folds required, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::Data(format!(
            "{} instances cannot fill {k} folds",
            labels.len()
        )));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = rng(seed);
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for members in by_class.iter_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[slot].push(i);
            slot = (slot + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Indices not in `test`, ascending.
pub fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut in_test = vec![false; n];
    for &i in test {
        in_test[i] = true;
    }
    (0..n).filter(|&i| !in_test[i]).collect()
}
