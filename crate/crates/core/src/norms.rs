//! Dyadic BMO and `L^p` norms of step functions.
//!
//! Mean oscillation over a dyadic interval uses the lower median as the
//! optimal constant. Functions are extended by zero outside their window, so
//! intervals that stick out of the window include those zeros.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{enumerate_dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::num::exact_sum;
use crate::signal::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub interval: DyadicInterval,
    /// The constant attaining the infimum (lower median).
    pub minimizer: f64,
    pub mean_oscillation: f64,
    /// Grid cells in the interval, including zero-extended ones.
    pub sample_count: u64,
}

/// Lower median and mean absolute deviation about it.
///
/// The deviation sum equals the top half minus the bottom half of the
/// sorted samples and is formed with one rounding, so profiles with equal
/// exact oscillation get bit-identical results.
pub fn mean_oscillation(values: &[f64]) -> (f64, f64) {
    weighted_oscillation(values, 0)
}

/// Same, with `zeros` extra zero samples appended.
fn weighted_oscillation(values: &[f64], zeros: u64) -> (f64, f64) {
    let count = values.len() as u64 + zeros;
    if count == 0 {
        return (0.0, 0.0);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let negatives = sorted.iter().filter(|&&v| v < 0.0).count() as u64;
    // Sample of rank `r` in the merged order.
    let rank = |r: u64| {
        if r < negatives {
            sorted[r as usize]
        } else if r < negatives + zeros {
            0.0
        } else {
            sorted[(r - zeros) as usize]
        }
    };
    let median = rank((count - 1) / 2);
    let half = count / 2;
    // Zeros add nothing, so only the stored samples are visited.
    let in_rank = |i: usize| if (i as u64) < negatives { i as u64 } else { i as u64 + zeros };
    let spread = exact_sum(sorted.iter().enumerate().filter_map(|(i, &v)| {
        let r = in_rank(i);
        if r < half {
            Some(-v)
        } else if r >= count - half {
            Some(v)
        } else {
            None
        }
    }));
    (median, spread / count as f64)
}

/// Mean oscillation of the zero-extended function `values` (on `grid`) over
/// `interval`. Intervals finer than the grid have zero oscillation.
pub fn oscillation_on(grid: &GridSpec, values: &[f64], interval: DyadicInterval) -> OscillationReport {
    let (Some((first, last)), Some(total)) = (interval.cell_span(grid), interval.cell_total(grid)) else {
        let j = grid.cell_of(interval.lo());
        return OscillationReport {
            interval,
            minimizer: j.map_or(0.0, |j| values[j]),
            mean_oscillation: 0.0,
            sample_count: 1,
        };
    };
    let inside = &values[first..last];
    let (minimizer, mean_oscillation) = weighted_oscillation(inside, total - inside.len() as u64);
    OscillationReport {
        interval,
        minimizer,
        mean_oscillation,
        sample_count: total,
    }
}

/// Smallest level whose single interval could span the window.
pub fn window_level(grid: &GridSpec) -> i32 {
    grid.k_min + (usize::BITS - (grid.cell_count - 1).leading_zeros()) as i32
}

/// Dyadic BMO norm `sup_I inf_a |I|^-1 int_I |g - a|` over the dyadic
/// intervals of levels `[k_lo, k_hi]` meeting the window, together with the
/// interval attaining it (first one in enumeration order on ties).
pub fn bmo_dyadic(grid: &GridSpec, values: &[f64], k_lo: i32, k_hi: i32) -> Result<(f64, OscillationReport)> {
    check_values(grid, values)?;
    let intervals = levels(grid, k_lo, k_hi)?;
    bmo_over(grid, values, &intervals)
}

/// BMO over the natural level range of the grid: cell level to window level.
pub fn bmo_dyadic_full(grid: &GridSpec, values: &[f64]) -> Result<(f64, OscillationReport)> {
    bmo_dyadic(grid, values, grid.k_min, window_level(grid))
}

/// Supremum of the mean oscillation over an explicit list of intervals.
pub fn bmo_over(grid: &GridSpec, values: &[f64], intervals: &[DyadicInterval]) -> Result<(f64, OscillationReport)> {
    check_values(grid, values)?;
    let reports: Vec<OscillationReport> = intervals
        .par_iter()
        .map(|&i| oscillation_on(grid, values, i))
        .collect();
    let best = reports
        .into_iter()
        .reduce(|best, r| if r.mean_oscillation > best.mean_oscillation { r } else { best })
        .ok_or(Error::EmptyGrid)?;
    Ok((best.mean_oscillation, best))
}

/// Dyadic intervals of levels `[k_lo, k_hi]` lying entirely inside the window.
pub fn intervals_inside(grid: &GridSpec, k_lo: i32, k_hi: i32) -> Result<Vec<DyadicInterval>> {
    let (lo, hi) = (grid.lo(), grid.hi());
    Ok(levels(grid, k_lo, k_hi)?
        .into_iter()
        .filter(|i| i.lo() >= lo && i.hi() <= hi)
        .collect())
}

/// `(2^k_min sum |g|^p)^{1/p}`, the `L^p` norm of the step function.
pub fn lp_norm(grid: &GridSpec, values: &[f64], p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    check_values(grid, values)?;
    let sum: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
    Ok((grid.cell_width() * sum).powf(1.0 / p))
}

/// Intervals meeting the window; levels below the grid are flat and skipped.
fn levels(grid: &GridSpec, k_lo: i32, k_hi: i32) -> Result<Vec<DyadicInterval>> {
    if k_lo > k_hi {
        return Err(Error::EmptyRange { lo: k_lo, hi: k_hi });
    }
    enumerate_dyadic(grid, k_lo.max(grid.k_min).min(k_hi), k_hi)
}

fn check_values(grid: &GridSpec, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if values.len() != grid.cell_count {
        return Err(Error::LengthMismatch {
            expected: grid.cell_count,
            actual: values.len(),
        });
    }
    Ok(())
}
