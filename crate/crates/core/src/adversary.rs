//! Search for selectors whose square function oscillates as much as possible.
//!
//! At each point the selector square function ranges between the pointwise
//! least value `lo = s_inf` and the supremal value `hi = s_sup`, and both
//! extremes are attained by some choice of offsets. For a dyadic interval
//! with `n` points, the largest mean oscillation over profiles
//! `g(x) in {lo(x), hi(x)}` is
//!
//! ```text
//! max over disjoint U, L with |U| = |L| = floor(n / 2) of (sum_U hi - sum_L lo) / n
//! ```
//!
//! because for fixed `g` the minimal absolute deviation is the top half minus
//! the bottom half. Writing `w = hi + lo`, the optimum puts the largest `w`
//! into `U`; for odd `n` one point is left out and every choice of it is
//! tried. This is exact in `O(n log n)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{atom_integral, DyadicInterval};
use crate::error::{Error, Result};
use crate::moving::{nearest_window_sums, window_extrema, Candidates};
use crate::norms::{intervals_inside, mean_oscillation, oscillation_on, window_level};
use crate::selector::{Selector, TabulatedSelector};
use crate::signal::{GridMode, Signal};
use crate::square::{s_inf, s_selector, s_sup, ScaleRange};

/// Per-point absolute tolerance when re-evaluating an emitted selector.
pub const REALIZATION_TOLERANCE: f64 = 1e-8;

/// Random assignments tried by the baseline.
pub const BASELINE_TRIALS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub hi: Vec<f64>,
    pub lo: Vec<f64>,
}

pub fn envelope(signal: &Signal, range: ScaleRange) -> Result<Envelope> {
    Ok(Envelope {
        hi: s_sup(signal, range)?.values,
        lo: s_inf(signal, range)?.values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `true` where the profile takes `hi`.
    pub high: Vec<bool>,
    /// Mean oscillation of the resulting profile.
    pub value: f64,
}

fn profile(hi: &[f64], lo: &[f64], high: &[bool]) -> Vec<f64> {
    high.iter()
        .enumerate()
        .map(|(i, &h)| if h { hi[i] } else { lo[i] })
        .collect()
}

fn evaluate(hi: &[f64], lo: &[f64], high: Vec<bool>) -> Assignment {
    let value = mean_oscillation(&profile(hi, lo, &high)).1;
    Assignment { high, value }
}

/// Assignment maximizing the mean oscillation of `g in {lo, hi}`.
pub fn best_oscillation(hi: &[f64], lo: &[f64]) -> Result<Assignment> {
    if hi.len() != lo.len() {
        return Err(Error::LengthMismatch {
            expected: hi.len(),
            actual: lo.len(),
        });
    }
    let n = hi.len();
    if n == 0 {
        return Err(Error::EmptyGrid);
    }
    let h = n / 2;
    let w: Vec<f64> = hi.iter().zip(lo).map(|(a, b)| a + b).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));

    let mut high = vec![false; n];
    if n.is_multiple_of(2) {
        for &i in &order[..h] {
            high[i] = true;
        }
        return Ok(evaluate(hi, lo, high));
    }
    // Leave out the point at sorted position `p`; the objective up to the
    // common `-sum lo` is `top(p) + lo[z]`.
    let top_h: f64 = order[..h].iter().map(|&i| w[i]).sum();
    let top_h1 = top_h + w[order[h]];
    let (best_pos, _) = order
        .iter()
        .enumerate()
        .map(|(p, &z)| {
            let top = if p < h { top_h1 - w[z] } else { top_h };
            (p, top + lo[z])
        })
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let skip = order[best_pos];
    high[skip] = true;
    for &i in order.iter().filter(|&&i| i != skip).take(h) {
        high[i] = true;
    }
    Ok(evaluate(hi, lo, high))
}

/// Exhaustive search over all `2^n` assignments, for small `n`.
pub fn exhaustive_oscillation(hi: &[f64], lo: &[f64]) -> Result<Assignment> {
    let n = hi.len();
    if n == 0 || n > 24 || lo.len() != n {
        return Err(Error::Construction(format!("exhaustive search needs 1..=24 points, got {n}")));
    }
    let mut best: Option<Assignment> = None;
    for mask in 0u32..(1 << n) {
        let high = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let a = evaluate(hi, lo, high);
        if best.as_ref().is_none_or(|b| a.value > b.value) {
            best = Some(a);
        }
    }
    Ok(best.expect("at least one assignment"))
}

/// Best of [`BASELINE_TRIALS`] uniformly random assignments.
pub fn random_baseline(hi: &[f64], lo: &[f64], seed: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..BASELINE_TRIALS)
        .map(|_| evaluate(hi, lo, (0..hi.len()).map(|_| rng.gen()).collect()))
        .reduce(|best, a| if a.value > best.value { a } else { best })
        .expect("at least one trial")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub witness: DyadicInterval,
    /// Oscillation planned from the envelope.
    pub planned: f64,
    /// Oscillation of the emitted selector's square function on the witness,
    /// a lower bound on its dyadic BMO norm.
    pub achieved: f64,
    pub baseline: f64,
    /// Largest `|S_I f - target|` over the witness after re-evaluation.
    pub realization_error: f64,
    pub selector: TabulatedSelector,
}

/// Maximizes [`best_oscillation`] over the dyadic intervals inside the grid
/// window (and inside `search`, when given), realizes the winner as a
/// tabulated selector and re-evaluates it.
pub fn adversarial_bmo(
    signal: &Signal,
    range: ScaleRange,
    search: Option<(f64, f64)>,
    seed: u64,
) -> Result<AdversaryReport> {
    let grid = *signal.grid();
    let env = envelope(signal, range)?;
    let mut intervals = intervals_inside(&grid, grid.k_min, window_level(&grid))?;
    if let Some((lo, hi)) = search {
        intervals.retain(|i| i.lo() >= lo && i.hi() <= hi);
    }
    let plans: Vec<(DyadicInterval, Assignment)> = intervals
        .par_iter()
        .map(|&i| {
            let (a, b) = i.cell_span(&grid).expect("levels start at the grid");
            best_oscillation(&env.hi[a..b], &env.lo[a..b]).map(|plan| (i, plan))
        })
        .collect::<Result<_>>()?;
    let (witness, plan) = plans
        .into_iter()
        .reduce(|best, p| if p.1.value > best.1.value { p } else { best })
        .ok_or(Error::EmptyGrid)?;
    let (first, last) = witness.cell_span(&grid).expect("levels start at the grid");
    let baseline = random_baseline(&env.hi[first..last], &env.lo[first..last], seed).value;

    let mut high = vec![true; grid.cell_count];
    high[first..last].copy_from_slice(&plan.high);
    let selector = realize(signal, range, &high)?;
    let realized = s_selector(signal, &Selector::Tabulated(selector.clone()), range)?.values;
    let mut realization_error = 0.0f64;
    for j in first..last {
        let target = if high[j] { env.hi[j] } else { env.lo[j] };
        let deviation = (realized[j] - target).abs();
        realization_error = realization_error.max(deviation);
        if !(deviation <= REALIZATION_TOLERANCE) {
            return Err(Error::VerificationMismatch {
                x: grid.eval_point(j),
                deviation,
            });
        }
    }
    let achieved = oscillation_on(&grid, &realized, witness).mean_oscillation;
    Ok(AdversaryReport {
        witness,
        planned: plan.value,
        achieved,
        baseline,
        realization_error,
        selector,
    })
}

/// Offsets attaining `s_sup` where `high` holds and `s_inf` elsewhere.
pub fn realize(signal: &Signal, range: ScaleRange, high: &[bool]) -> Result<TabulatedSelector> {
    let grid = *signal.grid();
    let h = grid.cell_width();
    let offsets = (range.k_lo..=range.k_hi)
        .into_par_iter()
        .map(|k| {
            if k < grid.k_min {
                return Ok(vec![0.0; grid.cell_count]);
            }
            let ex = window_extrema(signal, k)?;
            let centres: Vec<f64> = (0..signal.len()).map(|j| atom_integral(signal, k, j)).collect();
            let nearest = match grid.mode {
                GridMode::IntegerLine => Some(nearest_window_sums(signal, k, &centres)?),
                GridMode::RealLine => None,
            };
            (0..signal.len())
                .map(|j| {
                    let c = centres[j];
                    let alpha = if high[j] {
                        if ex.max_sum[j] - c >= c - ex.min_sum[j] {
                            ex.argmax[j]
                        } else {
                            ex.argmin[j]
                        }
                    } else if let Some(nearest) = &nearest {
                        nearest[j].1
                    } else if c <= ex.min_sum[j] {
                        ex.argmin[j]
                    } else if c >= ex.max_sum[j] {
                        ex.argmax[j]
                    } else {
                        crossing(&Candidates::new(signal, k, j)?, ex.argmin[j], ex.argmax[j], c)
                    };
                    Ok(alpha * h)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let table = TabulatedSelector {
        k_range: [range.k_lo, range.k_hi],
        window: grid,
        offsets,
    };
    table.validate()?;
    Ok(table)
}

/// Offset where the piecewise-linear window sum crosses `target`, given
/// candidate offsets with sums below and above it.
fn crossing(cands: &Candidates, below: f64, above: f64, target: f64) -> f64 {
    let (mut lo_idx, mut hi_idx) = (cands.bracket(below).0, cands.bracket(above).0);
    // Index bisection keeps sum(lo_idx) <= target <= sum(hi_idx).
    while lo_idx.abs_diff(hi_idx) > 1 {
        let mid = (lo_idx + hi_idx) / 2;
        if cands.sum(mid) <= target {
            lo_idx = mid;
        } else {
            hi_idx = mid;
        }
    }
    let (s_lo, s_hi) = (cands.sum(lo_idx), cands.sum(hi_idx));
    if s_lo == target {
        return cands.offset(lo_idx);
    }
    if s_hi == target {
        return cands.offset(hi_idx);
    }
    // Bisection on the offset down to adjacent floats.
    let (mut a, mut b) = (cands.offset(lo_idx), cands.offset(hi_idx));
    loop {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if cands.sum_at(mid) <= target {
            a = mid;
        } else {
            b = mid;
        }
    }
    if (cands.sum_at(a) - target).abs() <= (cands.sum_at(b) - target).abs() {
        a
    } else {
        b
    }
}
