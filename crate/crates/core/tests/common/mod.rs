#![allow(dead_code)]

use isoguard_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

/// `n_informative` columns separate the classes by `shift`; the rest are
/// uniform noise. Columns are laid out informative first.
pub fn informative_and_noise(
    seed: u64,
    n: usize,
    n_informative: usize,
    n_noise: usize,
    shift: f64,
) -> (Matrix, Vec<u8>) {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let mut row = Vec::with_capacity(n_informative + n_noise);
        for _ in 0..n_informative {
            let z: f64 = r.sample(StandardNormal);
            row.push(z + shift * label as f64);
        }
        for _ in 0..n_noise {
            row.push(r.random_range(-2.0..2.0));
        }
        rows.push(row);
        y.push(label);
    }
    (Matrix::from_rows(&rows).unwrap(), y)
}
