//! Counter-based seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from
//! `(master seed, stream tag, index)`. Streams never share state, so trees can
//! be built in any order or on any thread and still produce identical output.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags for the distinct consumers of randomness.
pub mod tag {
    pub const SPLIT: u64 = 0x5350_4c49_5400_0001;
    pub const FOREST_TREE: u64 = 0x4946_4f52_4553_5401;
    pub const EXTRA_TREE: u64 = 0x4554_5245_4553_0001;
    pub const EXTRA_NODE: u64 = 0x4554_4e4f_4445_0001;
    pub const SYNTHETIC: u64 = 0x5359_4e54_4800_0001;
    pub const RFE: u64 = 0x5246_4500_0000_0001;
    pub const FOREST: u64 = 0x4946_0000_0000_0001;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed for `(tag, index)` under `master`.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index)
}

/// Uniform `[0, 1)` value addressed by `(tag, index)`; no generator state.
pub fn hashed_unit(master: u64, tag: u64, index: u64) -> f64 {
    (derive_seed(master, tag, index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn stream(master: u64, tag: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, tag, index))
}

/// Uniform draw strictly inside `(lo, hi)` when such a float exists.
///
/// Falls back to `hi` when `lo` and `hi` are adjacent floats; a `x < hi`
/// partition still sends at least one value each way.
pub fn uniform_open<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo < hi);
    for _ in 0..8 {
        let u: f64 = rng.random();
        let v = lo + u * (hi - lo);
        if v > lo && v < hi {
            return v;
        }
    }
    let mid = lo + (hi - lo) * 0.5;
    if mid > lo && mid < hi {
        mid
    } else {
        hi
    }
}

/// `k` distinct indices from `0..n`, drawn by a partial Fisher-Yates shuffle.
pub fn sample_indices<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

pub fn shuffle<T, R: Rng + ?Sized>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_per_index_and_tag() {
        let a = derive_seed(42, tag::FOREST_TREE, 0);
        let b = derive_seed(42, tag::FOREST_TREE, 1);
        let c = derive_seed(42, tag::EXTRA_TREE, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(42, tag::FOREST_TREE, 0));
    }

    #[test]
    fn uniform_open_stays_inside() {
        let mut rng = stream(7, 0, 0);
        for _ in 0..10_000 {
            let v = uniform_open(&mut rng, -1.0, 2.5);
            assert!(v > -1.0 && v < 2.5);
        }
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        assert_eq!(uniform_open(&mut rng, lo, hi), hi);
    }

    #[test]
    fn sample_indices_are_distinct() {
        let mut rng = stream(1, 2, 3);
        let mut s = sample_indices(&mut rng, 50, 50);
        s.sort_unstable();
        assert_eq!(s, (0..50).collect::<Vec<_>>());
        let s = sample_indices(&mut rng, 1000, 10);
        assert_eq!(s.len(), 10);
    }
}
