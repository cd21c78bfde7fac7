//! Moving averages over length-`2^k` intervals and their extrema over all
//! admissible positions.
//!
//! For an evaluation point `x` and scale `k`, an admissible interval is
//! `[x - a, x - a + 2^k)` with offset `a` in `[0, 2^k]`. Offsets are handled
//! internally in cell units (`alpha = a / 2^k_min`). The window sum is a
//! continuous piecewise-linear function of `alpha` on the real line, with
//! breakpoints where an endpoint crosses a cell boundary; on the integer line
//! only integer offsets exist. Either way the sum is determined by a finite,
//! ordered list of candidate offsets, and every other offset interpolates
//! between two neighbours.
//!
//! Candidate lists, for span `B = 2^(k - k_min)` cells and window cell `j`:
//!
//! * real line: `alpha = 0`, then `alpha = i - 1/2` for `i = 1..=B`
//!   (interval starting at cell `j - i + 1`), then `alpha = B`;
//! * integer line: `alpha = i` for `i = 0..=B` (interval starting at `j - i`).

use std::collections::{BTreeSet, VecDeque};

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::num::pow2;
use crate::signal::{GridMode, Signal};

/// Largest supported `k - k_min`.
pub const MAX_SPAN_LEVELS: i32 = 50;

/// Number of cells spanned by a length-`2^k` interval.
pub fn span_cells(signal: &Signal, k: i32) -> Result<i64> {
    let k_min = signal.grid().k_min;
    if k < k_min {
        return Err(Error::BelowGrid { k, k_min });
    }
    if k - k_min > MAX_SPAN_LEVELS {
        return Err(Error::SpanTooLarge {
            span: k - k_min,
            max: MAX_SPAN_LEVELS,
        });
    }
    Ok(1i64 << (k - k_min))
}

/// `M_I f = |I|^{-1} \int_I f` for an interval of dyadic length.
pub fn moving_average(signal: &Signal, lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) {
        return Err(Error::NotDyadicLength { lo, hi });
    }
    let len = hi - lo;
    if !len.is_normal() || len.to_bits() & ((1u64 << 52) - 1) != 0 {
        return Err(Error::NotDyadicLength { lo, hi });
    }
    Ok(signal.integral(lo, hi)? / len)
}

/// The ordered candidate offsets for one evaluation cell at one scale.
#[derive(Debug, Clone, Copy)]
pub struct Candidates<'a> {
    signal: &'a Signal,
    span: i64,
    cell: usize,
}

impl<'a> Candidates<'a> {
    pub fn new(signal: &'a Signal, k: i32, cell: usize) -> Result<Self> {
        Ok(Candidates {
            signal,
            span: span_cells(signal, k)?,
            cell,
        })
    }

    fn real(&self) -> bool {
        self.signal.grid().mode == GridMode::RealLine
    }

    pub fn span(&self) -> i64 {
        self.span
    }

    pub fn len(&self) -> usize {
        self.span as usize + if self.real() { 2 } else { 1 }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Offset (cell units) of candidate `idx`.
    pub fn offset(&self, idx: usize) -> f64 {
        if !self.real() {
            return idx as f64;
        }
        match idx {
            0 => 0.0,
            i if i as i64 == self.span + 1 => self.span as f64,
            i => i as f64 - 0.5,
        }
    }

    /// Window sum at candidate `idx`.
    pub fn sum(&self, idx: usize) -> f64 {
        let j = self.cell as i64;
        if !self.real() {
            return self.signal.aligned_sum(j - idx as i64, self.span);
        }
        let p = self.cell as f64 + 0.5;
        let b = self.span as f64;
        match idx {
            0 => self.signal.cumulative(p + b) - self.signal.cumulative(p),
            i if i as i64 == self.span + 1 => {
                self.signal.cumulative(p) - self.signal.cumulative(p - b)
            }
            i => self.signal.aligned_sum(j - i as i64 + 1, self.span),
        }
    }

    /// Candidate index at or below `alpha` and the interpolation weight toward
    /// the next candidate.
    pub fn bracket(&self, alpha: f64) -> (usize, f64) {
        let b = self.span as f64;
        if alpha <= 0.0 {
            return (0, 0.0);
        }
        if alpha >= b {
            return (self.len() - 1, 0.0);
        }
        if !self.real() {
            let i = alpha.floor();
            return (i as usize, alpha - i);
        }
        if alpha < 0.5 {
            (0, alpha / 0.5)
        } else if alpha >= b - 0.5 {
            (self.span as usize, (alpha - (b - 0.5)) / 0.5)
        } else {
            let i = (alpha + 0.5).floor();
            (i as usize, alpha - (i - 0.5))
        }
    }

    /// Window sum at an arbitrary offset in `[0, B]` (clamped).
    ///
    /// Between candidates the exact sum is linear, so it is interpolated and
    /// clamped to the two neighbouring candidate values; the result therefore
    /// never leaves the candidate range, even after rounding.
    pub fn sum_at(&self, alpha: f64) -> f64 {
        let (idx, weight) = self.bracket(alpha);
        let w0 = self.sum(idx);
        if weight == 0.0 {
            return w0;
        }
        let w1 = self.sum(idx + 1);
        let lerp = w0 + weight * (w1 - w0);
        lerp.clamp(w0.min(w1), w0.max(w1))
    }
}

/// Window sum of `signal` over `[x_j - a, x_j - a + 2^k)` for evaluation
/// cell `j` and offset `alpha = a / 2^k_min`.
///
/// Scales below the grid keep the interval inside one real-line cell.
pub fn window_sum(signal: &Signal, k: i32, cell: usize, alpha: f64) -> Result<f64> {
    let grid = signal.grid();
    if k < grid.k_min && grid.mode == GridMode::RealLine {
        return Ok(signal.values()[cell] * pow2(k));
    }
    Ok(Candidates::new(signal, k, cell)?.sum_at(alpha))
}

/// Per-cell extremes of the window sum over all admissible offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowExtrema {
    pub k: i32,
    pub max_sum: Vec<f64>,
    pub min_sum: Vec<f64>,
    /// Offset (cell units) attaining `max_sum`.
    pub argmax: Vec<f64>,
    /// Offset (cell units) attaining `min_sum`.
    pub argmin: Vec<f64>,
}

impl WindowExtrema {
    fn with_capacity(k: i32, n: usize) -> Self {
        WindowExtrema {
            k,
            max_sum: Vec::with_capacity(n),
            min_sum: Vec::with_capacity(n),
            argmax: Vec::with_capacity(n),
            argmin: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, max: (f64, f64), min: (f64, f64)) {
        self.max_sum.push(max.0);
        self.argmax.push(max.1);
        self.min_sum.push(min.0);
        self.argmin.push(min.1);
    }
}

/// Start cells of the aligned candidate intervals, in increasing order.
///
/// When the span exceeds the window, every start in `(n - B, 0)` yields the
/// full-window total and the range is collapsed to its two ends; the sliding
/// window always contains that whole plateau, so extremes are unaffected.
fn aligned_starts(span: i64, n: i64, first: i64) -> impl Iterator<Item = i64> {
    let head_end = (n - span).min(n - 1);
    let tail_start = (n - span + 1).max(0);
    (first..=head_end).chain(tail_start..n)
}

/// Monotone queue holding `(start, sum)` pairs; the front is the extremum.
struct MonotoneQueue {
    items: VecDeque<(i64, f64)>,
    keep_larger: bool,
}

impl MonotoneQueue {
    fn new(keep_larger: bool) -> Self {
        MonotoneQueue {
            items: VecDeque::new(),
            keep_larger,
        }
    }

    fn push(&mut self, start: i64, sum: f64) {
        while let Some(&(_, back)) = self.items.back() {
            let dominated = if self.keep_larger { back <= sum } else { back >= sum };
            if !dominated {
                break;
            }
            self.items.pop_back();
        }
        self.items.push_back((start, sum));
    }

    fn evict_before(&mut self, lo: i64) {
        while matches!(self.items.front(), Some(&(s, _)) if s < lo) {
            self.items.pop_front();
        }
    }

    fn front(&self) -> (i64, f64) {
        *self.items.front().expect("window is never empty")
    }
}

/// Extremes of the window sum for every cell at scale `k`, in `O(cell_count)`.
///
/// Aligned candidates slide through two monotone queues; the real-line edge
/// offsets `0` and `B` are compared separately.
pub fn window_extrema(signal: &Signal, k: i32) -> Result<WindowExtrema> {
    let span = span_cells(signal, k)?;
    let n = signal.len() as i64;
    let real = signal.grid().mode == GridMode::RealLine;
    let (lag, shift) = if real { (span - 1, 0.5) } else { (span, 0.0) };

    let mut out = WindowExtrema::with_capacity(k, signal.len());
    let mut hi = MonotoneQueue::new(true);
    let mut lo = MonotoneQueue::new(false);
    let mut starts = aligned_starts(span, n, -lag).peekable();
    for j in 0..n {
        while let Some(s) = starts.next_if(|&s| s <= j) {
            let w = signal.aligned_sum(s, span);
            hi.push(s, w);
            lo.push(s, w);
        }
        hi.evict_before(j - lag);
        lo.evict_before(j - lag);
        let (s_max, w_max) = hi.front();
        let (s_min, w_min) = lo.front();
        let mut max = (w_max, (j - s_max) as f64 + shift);
        let mut min = (w_min, (j - s_min) as f64 + shift);
        if real {
            let c = Candidates {
                signal,
                span,
                cell: j as usize,
            };
            for idx in [0, span as usize + 1] {
                let w = c.sum(idx);
                if w > max.0 {
                    max = (w, c.offset(idx));
                }
                if w < min.0 {
                    min = (w, c.offset(idx));
                }
            }
        }
        out.push(max, min);
    }
    Ok(out)
}

/// Reference implementation scanning every candidate offset, `O(n B)`.
pub fn window_extrema_naive(signal: &Signal, k: i32) -> Result<WindowExtrema> {
    let mut out = WindowExtrema::with_capacity(k, signal.len());
    for j in 0..signal.len() {
        let c = Candidates::new(signal, k, j)?;
        let mut max = (f64::NEG_INFINITY, 0.0);
        let mut min = (f64::INFINITY, 0.0);
        for idx in 0..c.len() {
            let w = c.sum(idx);
            if w > max.0 {
                max = (w, c.offset(idx));
            }
            if w < min.0 {
                min = (w, c.offset(idx));
            }
        }
        out.push(max, min);
    }
    Ok(out)
}

/// For each cell, the candidate window sum nearest to `targets[j]` and its
/// offset. Ties go to the smaller sum.
///
/// This is the exact minimizer of `|W - target|` on the integer line, where
/// offsets are discrete. Runs in `O(n log n)` per scale.
pub fn nearest_window_sums(signal: &Signal, k: i32, targets: &[f64]) -> Result<Vec<(f64, f64)>> {
    let span = span_cells(signal, k)?;
    let n = signal.len() as i64;
    let real = signal.grid().mode == GridMode::RealLine;
    let (lag, shift) = if real { (span - 1, 0.5) } else { (span, 0.0) };

    let mut window: BTreeSet<(OrderedFloat<f64>, i64)> = BTreeSet::new();
    let mut pending: VecDeque<(i64, f64)> = VecDeque::new();
    let mut starts = aligned_starts(span, n, -lag).peekable();
    let mut out = Vec::with_capacity(signal.len());
    for j in 0..n {
        while let Some(s) = starts.next_if(|&s| s <= j) {
            let w = signal.aligned_sum(s, span);
            window.insert((OrderedFloat(w), s));
            pending.push_back((s, w));
        }
        while matches!(pending.front(), Some(&(s, _)) if s < j - lag) {
            let (s, w) = pending.pop_front().expect("checked non-empty");
            window.remove(&(OrderedFloat(w), s));
        }
        let target = targets[j as usize];
        let below = window.range(..=(OrderedFloat(target), i64::MAX)).next_back();
        let above = window.range((OrderedFloat(target), i64::MIN)..).next();
        let (w, s) = match (below, above) {
            (Some(b), Some(a)) => {
                if a.0 .0 - target < target - b.0 .0 {
                    a
                } else {
                    b
                }
            }
            (Some(b), None) => b,
            (None, Some(a)) => a,
            (None, None) => unreachable!("window is never empty"),
        };
        let mut best = (w.0, (j - s) as f64 + shift);
        if real {
            let c = Candidates {
                signal,
                span,
                cell: j as usize,
            };
            for idx in [0, span as usize + 1] {
                let w = c.sum(idx);
                let (d, d_best) = ((w - target).abs(), (best.0 - target).abs());
                if d < d_best || (d == d_best && w < best.0) {
                    best = (w, c.offset(idx));
                }
            }
        }
        out.push(best);
    }
    Ok(out)
}
