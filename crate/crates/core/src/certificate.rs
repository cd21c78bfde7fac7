//! Numerical certificate for the BMO bound of the supremal square function.
//!
//! For a dyadic interval `I` with centre `c` and concentric triple `I*`, the
//! signal is split as `f = f 1_{I*} + f 1_{R \ I*} = f1 + f2` and the constant
//! `a_I = S f2(c)` is used. The certificate evaluates every step of the chain
//!
//! ```text
//! |I|^-1 int_I |Sf - a_I| <= |I|^-1 int_I S f1 + |I|^-1 int_I |S f2 - S f2(c)|
//! ```
//!
//! on the actual data: the local `L^2` step for `S f1`, the exact vanishing of
//! all scales `2^k < |I|` for `f2`, the translation estimate
//! `|M_{J+x} f2 - M_{J+c} f2| <= 2^{1-k} |x - c| ||f||_inf` at scales
//! `2^k >= |I|`, and the geometric series closing the bound. The centre is
//! snapped to the nearest evaluation point; the snap distance is added to
//! `|x - c|` in the translation estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{atom_integral, DyadicInterval};
use crate::error::{Error, Result};
use crate::moving::{span_cells, window_extrema, Candidates};
use crate::norms::window_level;
use crate::num::pow2;
use crate::signal::{GridMode, Signal};
use crate::square::{root_sum_squares, s_sup, s_sup_with, EvalOptions, ScaleRange};

/// Relative slack allowed for round-off in recorded inequalities.
pub const ROUNDOFF: f64 = 1e-12;

/// One recorded inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl Inequality {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        let pass = lhs <= rhs + ROUNDOFF * lhs.abs().max(rhs.abs());
        Inequality {
            name: name.to_string(),
            lhs,
            rhs,
            slack: rhs - lhs,
            pass,
        }
    }

    fn exact(name: &str, lhs: f64, rhs: f64) -> Self {
        Inequality {
            name: name.to_string(),
            lhs,
            rhs,
            slack: rhs - lhs,
            pass: lhs <= rhs,
        }
    }
}

/// Worst case of the translation estimate at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationBound {
    pub k: i32,
    /// Evaluation point with the smallest slack.
    pub x: f64,
    /// `sup_J |M_{J+x} f2 - M_{J+c} f2|`.
    pub lhs: f64,
    /// `2^{1-k} (|x - c| + snap) ||f||_inf`.
    pub rhs: f64,
    pub slack: f64,
    /// `E_k f2(x) == E_k f2(c)` held bit for bit at every point.
    pub expectations_equal: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoCertificate {
    pub interval: DyadicInterval,
    /// The concentric triple `[lo, hi)`.
    pub enlarged: [f64; 2],
    pub center: f64,
    pub snapped_center: f64,
    pub snap_distance: f64,
    pub sup_norm: f64,
    /// `a_I = S f2(c)`.
    pub constant: f64,
    /// `|I|^-1 int_I |Sf - a_I|`.
    pub mean_deviation: f64,
    /// `mean_deviation / ||f||_inf` (zero for the zero signal).
    pub ratio: f64,
    /// `(|I|^-1 int_I (S f1)^2)^{1/2} / (|I|^-1 int |f1|^2)^{1/2}`, the
    /// observed local `L^2` gain for the near part.
    pub local_l2_gain: f64,
    /// Largest `|M_{J+x} f2|`, `|E_k f2(x)|` over `x` in `I`, all offsets and
    /// scales `2^k < |I|`; must be exactly zero.
    pub small_scale_residual: f64,
    pub translation_bounds: Vec<TranslationBound>,
    /// `sum_{k >= k_I} 2^-k |I|`, evaluated as the in-range partial sum plus
    /// its closed-form remainder; must equal 2.
    pub geometric_tail: f64,
    pub inequalities: Vec<Inequality>,
    pub passed: bool,
}

/// Certifies the chain for one dyadic interval.
pub fn bmo_certificate(signal: &Signal, interval: DyadicInterval, range: ScaleRange) -> Result<BmoCertificate> {
    let full = s_sup(signal, range)?;
    certify_with(signal, &full.values, interval, range)
}

/// Certificates for every dyadic interval at or above the grid level whose
/// triple fits in the window.
pub fn certify_sweep(signal: &Signal, range: ScaleRange) -> Result<Vec<BmoCertificate>> {
    let grid = signal.grid();
    let full = s_sup(signal, range)?;
    let candidates = crate::dyadic::enumerate_dyadic(grid, grid.k_min, window_level(grid))?;
    let fitting: Vec<DyadicInterval> = candidates
        .into_iter()
        .filter(|i| {
            let (lo, hi) = triple(i);
            lo >= grid.lo() && hi <= grid.hi()
        })
        .collect();
    fitting
        .par_iter()
        .map(|&i| certify_with(signal, &full.values, i, range))
        .collect()
}

fn triple(interval: &DyadicInterval) -> (f64, f64) {
    let len = interval.len();
    (interval.lo() - len, interval.hi() + len)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// `full` holds `S f` on every window cell for `range`.
pub fn certify_with(signal: &Signal, full: &[f64], interval: DyadicInterval, range: ScaleRange) -> Result<BmoCertificate> {
    let grid = *signal.grid();
    if interval.k < grid.k_min {
        return Err(Error::IntervalBelowGrid {
            k: interval.k,
            k_min: grid.k_min,
        });
    }
    let (star_lo, star_hi) = triple(&interval);
    if star_lo < grid.lo() || star_hi > grid.hi() {
        return Err(Error::EnlargedOutsideWindow { lo: star_lo, hi: star_hi });
    }
    let (first, last) = interval.cell_span(&grid).expect("interval at or above the grid");
    let cells = first..last;
    let center = interval.center();
    let c_cell = cells
        .clone()
        .min_by(|&a, &b| {
            let (da, db) = ((grid.eval_point(a) - center).abs(), (grid.eval_point(b) - center).abs());
            da.total_cmp(&db).then(b.cmp(&a))
        })
        .expect("interval holds at least one cell");
    let snapped = grid.eval_point(c_cell);
    let snap = (snapped - center).abs();

    let span = 1i64 << (interval.k - grid.k_min);
    let star_first = (interval.m - 1) * span;
    let star_last = (interval.m + 2) * span;
    let near = signal.masked(|g| g >= star_first && g < star_last);
    let far = signal.masked(|g| g < star_first || g >= star_last);
    let sup_norm = signal.sup_norm();

    let local = EvalOptions::cells(cells.clone());
    let s_near = s_sup_with(&near, range, &local)?.values;
    let s_far = s_sup_with(&far, range, &local)?.values;
    let s_full = &full[cells.clone()];
    let constant = s_far[c_cell - first];

    let mean_deviation = mean(s_full.iter().map(|v| (v - constant).abs()));
    let mean_gap = mean(s_full.iter().zip(&s_far).map(|(a, b)| (a - b).abs()));
    let mean_far_dev = mean(s_far.iter().map(|v| (v - constant).abs()));
    let mean_near = mean(s_near.iter().copied());
    let rms_near = mean(s_near.iter().map(|v| v * v)).sqrt();
    let sublinear_excess = s_full
        .iter()
        .zip(&s_far)
        .zip(&s_near)
        .map(|((a, b), c)| (a - b).abs() - c)
        .fold(f64::NEG_INFINITY, f64::max);
    let sublinear_scale = s_full.iter().chain(&s_near).fold(0.0f64, |m, v| m.max(v.abs()));
    let near_energy = (near.values().iter().map(|v| v * v).sum::<f64>() * grid.cell_width() / interval.len()).sqrt();
    let local_l2_gain = if near_energy > 0.0 { rms_near / near_energy } else { 0.0 };

    // Scales split at the interval level.
    let scales = range.active_scales(&grid);
    let mut small_scale_residual = 0.0f64;
    let mut containment_radius = 0.0f64;
    let mut translation_bounds = Vec::new();
    // Per point: sup_J |D_k| at every scale, coarse to fine.
    let mut differences = vec![Vec::with_capacity(scales.len()); cells.len()];
    for &k in &scales {
        let scale = pow2(-k);
        if k < interval.k {
            let ex = window_extrema(&far, k)?;
            for j in cells.clone() {
                let m = ex.max_sum[j]
                    .abs()
                    .max(ex.min_sum[j].abs())
                    .max(atom_integral(&far, k, j).abs());
                small_scale_residual = small_scale_residual.max(m * scale);
                differences[j - first].push(0.0);
            }
            containment_radius = containment_radius.max(interval.len() / 2.0 + pow2(k));
        } else {
            let centre_atom = atom_integral(&far, k, c_cell);
            let mut equal = true;
            let mut worst: Option<(f64, f64, f64)> = None;
            for j in cells.clone() {
                equal &= atom_integral(&far, k, j) == centre_atom;
                let lhs = sup_translation_difference(&far, k, j, c_cell)? * scale;
                let x = grid.eval_point(j);
                let rhs = 2.0 * scale * ((x - center).abs() + snap) * sup_norm;
                differences[j - first].push(lhs);
                if worst.is_none_or(|(_, l, r)| rhs - lhs < r - l) {
                    worst = Some((x, lhs, rhs));
                }
            }
            let (x, lhs, rhs) = worst.expect("interval holds at least one cell");
            let check = Inequality::new("translation", lhs, rhs);
            translation_bounds.push(TranslationBound {
                k,
                x,
                lhs,
                rhs,
                slack: rhs - lhs,
                expectations_equal: equal,
                pass: check.pass && equal,
            });
        }
    }

    let l2_diff: Vec<f64> = differences.iter().map(|d| root_sum_squares(d)).collect();
    let l1_diff: Vec<f64> = differences.iter().map(|d| d.iter().sum()).collect();
    let reverse_excess = s_far
        .iter()
        .zip(&l2_diff)
        .map(|(v, d)| (v - constant).abs() - d)
        .fold(f64::NEG_INFINITY, f64::max);
    let l2_over_l1 = l2_diff
        .iter()
        .zip(&l1_diff)
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_l1 = l1_diff.iter().copied().fold(0.0, f64::max);
    let mean_l2 = mean(l2_diff.iter().copied());

    let k_hi = range.k_hi.max(interval.k);
    let partial: f64 = (interval.k..=range.k_hi).map(|k| pow2(interval.k - k)).sum();
    let geometric_tail = partial + pow2(interval.k - k_hi);

    let inequalities = vec![
        Inequality::new("triangle", mean_deviation, mean_gap + mean_far_dev),
        Inequality::new("sublinearity", sublinear_excess, ROUNDOFF * sublinear_scale),
        Inequality::new("cauchy-schwarz", mean_near, rms_near),
        Inequality::new("near-energy", near_energy, 3f64.sqrt() * sup_norm),
        Inequality::exact("containment", containment_radius, 1.5 * interval.len()),
        Inequality::exact("small-scale-residual", small_scale_residual, 0.0),
        Inequality::new("reverse-triangle", reverse_excess, ROUNDOFF * s_far.iter().fold(0.0f64, |m, v| m.max(*v))),
        Inequality::new("l2-below-l1", l2_over_l1, 0.0),
        Inequality::new("difference-series", max_l1, (2.0 + 4.0 * snap / interval.len()) * sup_norm),
        Inequality::new("decomposition", mean_deviation, mean_near + mean_l2),
        Inequality::exact("geometric-tail", (geometric_tail - 2.0).abs(), 0.0),
    ];
    let passed = inequalities.iter().all(|i| i.pass) && translation_bounds.iter().all(|t| t.pass);

    Ok(BmoCertificate {
        interval,
        enlarged: [star_lo, star_hi],
        center,
        snapped_center: snapped,
        snap_distance: snap,
        sup_norm,
        constant,
        mean_deviation,
        ratio: if sup_norm > 0.0 { mean_deviation / sup_norm } else { 0.0 },
        local_l2_gain,
        small_scale_residual,
        translation_bounds,
        geometric_tail,
        inequalities,
        passed,
    })
}

/// `sup_a |W_x(a) - W_c(a)|` over all admissible offsets, where `W_y(a)` is
/// the window sum over `[y - a, y - a + 2^k)` and `x`, `c` are the evaluation
/// points of cells `cell_x`, `cell_c`.
///
/// Both points share the candidate offsets, so the supremum is attained at
/// a candidate. The aligned part `A(s + d) - A(s)` only changes where one of
/// its four prefix lookups crosses the window, so it is evaluated there and
/// once on each stretch in between.
pub fn sup_translation_difference(signal: &Signal, k: i32, cell_x: usize, cell_c: usize) -> Result<f64> {
    let span = span_cells(signal, k)?;
    let n = signal.len() as i64;
    let d = cell_x as i64 - cell_c as i64;
    let jc = cell_c as i64;
    let real = signal.grid().mode == GridMode::RealLine;
    let (lo, hi) = if real { (jc - span + 1, jc) } else { (jc - span, jc) };
    let diff = |s: i64| (signal.aligned_sum(s + d, span) - signal.aligned_sum(s, span)).abs();

    let mut critical: Vec<(i64, i64)> = [0, d, span, d + span]
        .iter()
        .map(|&u| ((-u).max(lo), (n - u).min(hi)))
        .filter(|(a, b)| a <= b)
        .collect();
    critical.sort_unstable();
    let mut best = 0.0f64;
    let mut cursor = lo;
    for (a, b) in critical {
        if b < cursor {
            continue;
        }
        if cursor < a {
            best = best.max(diff(cursor));
        }
        for s in a.max(cursor)..=b {
            best = best.max(diff(s));
        }
        cursor = b + 1;
    }
    if cursor <= hi {
        best = best.max(diff(cursor));
    }
    if real {
        let cx = Candidates::new(signal, k, cell_x)?;
        let cc = Candidates::new(signal, k, cell_c)?;
        for idx in [0, span as usize + 1] {
            best = best.max((cx.sum(idx) - cc.sum(idx)).abs());
        }
    }
    Ok(best)
}
