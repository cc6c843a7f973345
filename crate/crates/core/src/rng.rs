//! Seeded randomness shared by every sampling and training routine.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Derive an independent stream for a named purpose from a base seed.
pub fn derived(seed: u64, stream: &str) -> Rng {
    let tag = crate::fnv::fnv1a64(stream.as_bytes());
    Rng::seed_from_u64(seed ^ tag.rotate_left(17))
}

/// `k` distinct indices from `0..n`, uniformly at random, returned in ascending order.
pub fn sample_indices(rng: &mut Rng, n: usize, k: usize) -> Vec<usize> {
    let k = k.min(n);
    let mut picked = rand::seq::index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

pub fn shuffled_indices(rng: &mut Rng, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}
