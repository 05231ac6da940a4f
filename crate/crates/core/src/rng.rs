//! Seed derivation for reproducible parallel Monte Carlo.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for trial `index` of a run with master seed `master`. Depends only on
/// the pair, so the outcome of a trial never depends on scheduling.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Seed for an independent sub-stream (`stream`) of a trial.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    trial_seed(seed, stream.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(1))
}

pub fn trial_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn seeds_are_distinct() {
        let mut seen = HashSet::new();
        for m in 0..20u64 {
            for i in 0..500u64 {
                assert!(seen.insert(trial_seed(m, i)));
            }
        }
    }
}
