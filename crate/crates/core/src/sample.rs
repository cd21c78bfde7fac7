//! Seeded random step signals for experiments and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::signal::{GridSpec, Signal};

/// Blocks of random length (1 to 8 cells) with values in `[-1, 1]`, zero on
/// the outer eighth of the window at each end, scaled to sup-norm 1.
pub fn random_steps(grid: GridSpec, seed: u64) -> Result<Signal> {
    let mut values = blocks(grid.cell_count, seed, |rng| rng.gen_range(-1.0..=1.0));
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        values.iter_mut().for_each(|v| *v /= peak);
    }
    Signal::new(values, grid)
}

/// Like [`random_steps`] but with values in `{-1, -15/16, ..., 1}` and no
/// rescaling, so that sums of a few values are exact in floating point.
pub fn random_dyadic_steps(grid: GridSpec, seed: u64) -> Result<Signal> {
    let values = blocks(grid.cell_count, seed, |rng| f64::from(rng.gen_range(-16..=16)) / 16.0);
    Signal::new(values, grid)
}

fn blocks(n: usize, seed: u64, mut draw: impl FnMut(&mut ChaCha8Rng) -> f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pad = n / 8;
    let mut values = vec![0.0; n];
    let mut j = pad;
    while j < n - pad {
        let len = rng.gen_range(1..=8).min(n - pad - j);
        let v = draw(&mut rng);
        values[j..j + len].fill(v);
        j += len;
    }
    values
}
