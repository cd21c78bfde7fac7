//! The square functions
//!
//! ```text
//! S_I f(x) = ( sum_k |M_{I_k(x)} f - E_k f(x)|^2 )^{1/2}
//! S f(x)   = ( sum_k sup_{a in [0, 2^k]} |M_{[x-a, x-a+2^k)} f - E_k f(x)|^2 )^{1/2}
//! ```
//!
//! and the pointwise-least companion `s_inf`, truncated to a finite scale
//! range. Evaluation points are cell midpoints (integers on the integer line).
//! With midpoints every scale below the grid level contributes exactly zero,
//! so only the coarse end of the sum is truncated; [`tail_bound`] bounds it.
//!
//! Per point, squared terms are accumulated coarse to fine with pairwise
//! summation, so results do not depend on the thread count.

use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::atom_integral;
use crate::error::{Error, Result};
use crate::moving::{nearest_window_sums, span_cells, window_extrema, Candidates};
use crate::num::{pairwise_sum, pow2};
use crate::selector::Selector;
use crate::signal::{GridMode, GridSpec, Signal};

/// Inclusive range of scales `[k_lo, k_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub k_lo: i32,
    pub k_hi: i32,
}

impl ScaleRange {
    pub fn new(k_lo: i32, k_hi: i32) -> Result<Self> {
        if k_lo > k_hi {
            return Err(Error::EmptyRange { lo: k_lo, hi: k_hi });
        }
        Ok(ScaleRange { k_lo, k_hi })
    }

    /// Range whose lower end must not be below the grid level.
    pub fn for_grid(k_lo: i32, k_hi: i32, grid: &GridSpec) -> Result<Self> {
        if k_lo < grid.k_min {
            return Err(Error::BelowGrid { k: k_lo, k_min: grid.k_min });
        }
        Self::new(k_lo, k_hi)
    }

    /// Scales that actually contribute on `grid`, coarse to fine. Scales
    /// below the grid level vanish identically and are skipped.
    pub fn active_scales(&self, grid: &GridSpec) -> Vec<i32> {
        (self.k_lo.max(grid.k_min)..=self.k_hi).rev().collect()
    }

    pub fn len(&self) -> usize {
        (self.k_hi - self.k_lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Terms `|M - E_k f|` at one scale, one per evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTerms {
    pub k: i32,
    pub terms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareFunctionResult {
    pub eval_points: Vec<f64>,
    pub values: Vec<f64>,
    pub scale_range: ScaleRange,
    /// Uniform bound on the contribution of scales above `k_hi`.
    pub tail_bound: f64,
    /// Ascending in `k`; present when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_scale_terms: Option<Vec<ScaleTerms>>,
}

impl SquareFunctionResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value,tail_bound\n");
        for (x, v) in self.eval_points.iter().zip(&self.values) {
            let _ = writeln!(out, "{x},{v},{}", self.tail_bound);
        }
        out
    }
}

/// Which points to evaluate and whether to keep the per-scale terms.
#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub keep_terms: bool,
    /// Window cells to evaluate; all cells when `None`.
    pub cells: Option<Range<usize>>,
}

impl EvalOptions {
    pub fn cells(cells: Range<usize>) -> Self {
        EvalOptions {
            keep_terms: false,
            cells: Some(cells),
        }
    }

    pub fn with_terms(mut self) -> Self {
        self.keep_terms = true;
        self
    }

    fn range(&self, n: usize) -> Range<usize> {
        match &self.cells {
            Some(r) => r.start.min(n)..r.end.min(n),
            None => 0..n,
        }
    }
}

/// `sqrt(sum of squared L1-tail terms)`: every term obeys
/// `|M - E_k f| <= 2 * 2^-k * ||f||_1`, so the scales above `k_hi` add at most
/// `(2 ||f||_1)^2 4^-k_hi / 3` to the square.
pub fn tail_bound(signal: &Signal, k_hi: i32) -> f64 {
    2.0 * signal.l1_norm() * pow2(-k_hi) / 3f64.sqrt()
}

/// `S_I f` for the selector `selector`.
pub fn s_selector(signal: &Signal, selector: &Selector, range: ScaleRange) -> Result<SquareFunctionResult> {
    s_selector_with(signal, selector, range, &EvalOptions::default())
}

pub fn s_selector_with(
    signal: &Signal,
    selector: &Selector,
    range: ScaleRange,
    opts: &EvalOptions,
) -> Result<SquareFunctionResult> {
    let grid = *signal.grid();
    let scales = range.active_scales(&grid);
    for &k in &scales {
        span_cells(signal, k)?;
    }
    let cells = opts.range(signal.len());
    let per_point: Vec<(f64, Vec<f64>)> = cells
        .clone()
        .into_par_iter()
        .map(|j| {
            let x = grid.eval_point(j);
            let mut terms = Vec::with_capacity(scales.len());
            for &k in &scales {
                let alpha = selector.offset(&grid, k, x)? / grid.cell_width();
                let sum = Candidates::new(signal, k, j)?.sum_at(alpha);
                let centre = atom_integral(signal, k, j);
                terms.push((sum - centre).abs() * pow2(-k));
            }
            Ok((root_sum_squares(&terms), terms))
        })
        .collect::<Result<_>>()?;

    let values = per_point.iter().map(|(v, _)| *v).collect();
    let per_scale_terms = opts.keep_terms.then(|| {
        scales
            .iter()
            .enumerate()
            .rev()
            .map(|(s, &k)| ScaleTerms {
                k,
                terms: per_point.iter().map(|(_, t)| t[s]).collect(),
            })
            .collect()
    });
    Ok(finish(signal, range, cells, values, per_scale_terms))
}

/// The supremal square function `S f`.
pub fn s_sup(signal: &Signal, range: ScaleRange) -> Result<SquareFunctionResult> {
    s_sup_with(signal, range, &EvalOptions::default())
}

pub fn s_sup_with(signal: &Signal, range: ScaleRange, opts: &EvalOptions) -> Result<SquareFunctionResult> {
    scalewise(signal, range, opts, sup_terms)
}

/// The pointwise-least square function over all selectors.
///
/// On the real line the offset-parameterised average is continuous, so the
/// least term at each scale is the distance from `E_k f(x)` to the attainable
/// range of moving averages. On the integer line the nearest attainable
/// average is searched exactly.
pub fn s_inf(signal: &Signal, range: ScaleRange) -> Result<SquareFunctionResult> {
    s_inf_with(signal, range, &EvalOptions::default())
}

pub fn s_inf_with(signal: &Signal, range: ScaleRange, opts: &EvalOptions) -> Result<SquareFunctionResult> {
    scalewise(signal, range, opts, inf_terms)
}

/// `2^k E_k f` on every window cell.
pub(crate) fn centres(signal: &Signal, k: i32) -> Vec<f64> {
    (0..signal.len()).map(|j| atom_integral(signal, k, j)).collect()
}

/// Per-cell `sup_a |M - E_k f|` at scale `k`.
pub fn sup_terms(signal: &Signal, k: i32) -> Result<Vec<f64>> {
    let ex = window_extrema(signal, k)?;
    let scale = pow2(-k);
    Ok(centres(signal, k)
        .into_iter()
        .zip(ex.max_sum.iter().zip(&ex.min_sum))
        .map(|(c, (&hi, &lo))| (hi - c).max(c - lo) * scale)
        .collect())
}

/// Per-cell `inf_a |M - E_k f|` at scale `k`.
pub fn inf_terms(signal: &Signal, k: i32) -> Result<Vec<f64>> {
    let scale = pow2(-k);
    let centres = centres(signal, k);
    match signal.grid().mode {
        GridMode::RealLine => {
            let ex = window_extrema(signal, k)?;
            Ok(centres
                .into_iter()
                .zip(ex.max_sum.iter().zip(&ex.min_sum))
                .map(|(c, (&hi, &lo))| {
                    if c < lo {
                        (lo - c) * scale
                    } else if c > hi {
                        (c - hi) * scale
                    } else {
                        0.0
                    }
                })
                .collect())
        }
        GridMode::IntegerLine => {
            let nearest = nearest_window_sums(signal, k, &centres)?;
            Ok(centres
                .iter()
                .zip(&nearest)
                .map(|(c, &(w, _))| (w - c).abs() * scale)
                .collect())
        }
    }
}

fn scalewise(
    signal: &Signal,
    range: ScaleRange,
    opts: &EvalOptions,
    terms_at: fn(&Signal, i32) -> Result<Vec<f64>>,
) -> Result<SquareFunctionResult> {
    let scales = range.active_scales(signal.grid());
    let cells = opts.range(signal.len());
    let per_scale: Vec<Vec<f64>> = scales
        .par_iter()
        .map(|&k| terms_at(signal, k).map(|t| t[cells.clone()].to_vec()))
        .collect::<Result<_>>()?;
    let values = (0..cells.len())
        .into_par_iter()
        .map(|i| {
            let column: Vec<f64> = per_scale.iter().map(|t| t[i]).collect();
            root_sum_squares(&column)
        })
        .collect();
    let per_scale_terms = opts.keep_terms.then(|| {
        scales
            .iter()
            .zip(per_scale)
            .rev()
            .map(|(&k, terms)| ScaleTerms { k, terms })
            .collect()
    });
    Ok(finish(signal, range, cells, values, per_scale_terms))
}

/// `sqrt(sum t^2)` in the fixed order of `terms`.
pub fn root_sum_squares(terms: &[f64]) -> f64 {
    let squares: Vec<f64> = terms.iter().map(|t| t * t).collect();
    pairwise_sum(&squares).sqrt()
}

fn finish(
    signal: &Signal,
    range: ScaleRange,
    cells: Range<usize>,
    values: Vec<f64>,
    per_scale_terms: Option<Vec<ScaleTerms>>,
) -> SquareFunctionResult {
    let grid = signal.grid();
    SquareFunctionResult {
        eval_points: cells.map(|j| grid.eval_point(j)).collect(),
        values,
        scale_range: range,
        tail_bound: tail_bound(signal, range.k_hi),
        per_scale_terms,
    }
}
