//! The divergence and BMO-escape constructions.
//!
//! * [`halfline_example`]: `f = 1_[0, 2^W)` with left-sided intervals. At any
//!   `x` in `(0, 1)` every scale `1 <= k <= W` contributes a term of at least
//!   `1/2`, so the square function truncated to `[1, K]` grows like `sqrt(K)`.
//! * [`pn_table`] and [`bmo_escape_example`]: `f = 1_[1/2, 1)` with a
//!   selector that is right-sided on a set `P` and left-sided on `N`, both
//!   occupying half of every `I_l = [1/2, 1/2 + 2^-l)`. The square function
//!   stays below 1 on `P` and above `sqrt(l - 2) / 2` on `N`.
//! * [`integer_example`]: the half-line example on the integers.

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicInterval;
use crate::error::{Error, Result};
use crate::norms::oscillation_on;
use crate::num::pow2;
use crate::selector::{CellTable, Selector};
use crate::signal::{GridSpec, Signal};
use crate::square::{s_selector_with, EvalOptions, ScaleRange};

/// Largest `W` accepted by the half-line constructions (`2^(W+1)` cells).
pub const MAX_HALFLINE_W: u32 = 26;

#[derive(Debug, Clone)]
pub struct HalflineExample {
    pub w: u32,
    pub signal: Signal,
    pub selector: Selector,
}

impl HalflineExample {
    /// Lower bound `sqrt(K) / 2` for the value over scales `[first, first + K)`.
    pub fn predicted(&self, k: u32) -> f64 {
        0.5 * f64::from(k).sqrt()
    }

    /// Lowest scale of the growth: 1 on the line, 0 on the integers.
    pub fn first_scale(&self) -> i32 {
        self.signal.grid().k_min.max(0) + i32::from(self.signal.grid().mode == crate::GridMode::RealLine)
    }

    /// Square function at `x` truncated to the `count` scales starting at
    /// [`first_scale`](Self::first_scale); zero for `count = 0`.
    pub fn truncated_value(&self, x: f64, count: u32) -> Result<f64> {
        if count == 0 {
            return Ok(0.0);
        }
        let grid = self.signal.grid();
        let j = grid.cell_of(x).ok_or(Error::Uncovered { k: 0, x })?;
        let k_lo = self.first_scale();
        let range = ScaleRange::new(k_lo, k_lo + count as i32 - 1)?;
        let opts = EvalOptions::cells(j..j + 1);
        Ok(s_selector_with(&self.signal, &self.selector, range, &opts)?.values[0])
    }
}

fn halfline(w: u32, grid: GridSpec) -> Result<HalflineExample> {
    let signal = Signal::indicator(grid, 0.0, pow2(w as i32))?;
    Ok(HalflineExample {
        w,
        signal,
        selector: Selector::Left,
    })
}

fn check_w(w: u32) -> Result<()> {
    if w == 0 || w > MAX_HALFLINE_W {
        return Err(Error::Construction(format!("W = {w} outside 1..={MAX_HALFLINE_W}")));
    }
    Ok(())
}

/// `1_[0, 2^W)` on the unit grid over `[-2^W, 2^W)`, left selector.
pub fn halfline_example(w: u32) -> Result<HalflineExample> {
    check_w(w)?;
    let half = 1i64 << w;
    halfline(w, GridSpec::real(0, -half, 2 * half as usize)?)
}

/// The same on the integers; scales start at 0.
pub fn integer_example(w: u32) -> Result<HalflineExample> {
    check_w(w)?;
    let half = 1i64 << w;
    halfline(w, GridSpec::integer(-half, 2 * half as usize)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    P,
    N,
    Unassigned,
}

/// Cell-wise `P`/`N` assignment on `[0, 2)` at cells of width `2^-R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnTable {
    pub resolution: u32,
    pub ell_max: u32,
    pub grid: GridSpec,
    pub cells: Vec<Side>,
}

/// `I_l = [1/2, 1/2 + 2^-l)`.
pub fn ring_interval(ell: u32) -> DyadicInterval {
    DyadicInterval::new(-(ell as i32), 1i64 << (ell - 1))
}

/// Rings `[1/2 + 2^-(l+1), 1/2 + 2^-l)` for `3 <= l <= ell_max` are split in
/// halves, the left half going to `P` and the right half to `N`. The leftover
/// `[1/2, 1/2 + 2^-(ell_max+1))` is split the same way, which makes
/// `|P & I_l| = |N & I_l| = 2^-(l+1)` exact for every `l <= ell_max`.
pub fn pn_table(ell_max: u32, resolution: u32) -> Result<PnTable> {
    if ell_max < 3 {
        return Err(Error::Construction(format!("ell_max = {ell_max} must be at least 3")));
    }
    if resolution < ell_max + 4 || resolution > 40 {
        return Err(Error::Construction(format!(
            "resolution {resolution} must lie in {}..=40 for ell_max = {ell_max}",
            ell_max + 4
        )));
    }
    let r = resolution as i32;
    let grid = GridSpec::real(-r, 0, 2usize << resolution)?;
    let mut cells = vec![Side::Unassigned; grid.cell_count];
    // Cell index of 1/2 + 2^-l.
    let at = |l: u32| (1usize << (resolution - 1)) + (1usize << (resolution - l));
    let mut split = |lo: usize, hi: usize| {
        let mid = (lo + hi) / 2;
        cells[lo..mid].fill(Side::P);
        cells[mid..hi].fill(Side::N);
    };
    for ell in 3..=ell_max {
        split(at(ell + 1), at(ell));
    }
    split(1 << (resolution - 1), at(ell_max + 1));
    Ok(PnTable {
        resolution,
        ell_max,
        grid,
        cells,
    })
}

impl PnTable {
    /// Right-sided on `P`, left-sided everywhere else.
    pub fn selector(&self) -> Selector {
        let flags = self.cells.iter().map(|&s| s == Side::P).collect();
        Selector::membership(CellTable {
            grid: self.grid,
            values: flags,
        })
    }

    /// Cells of `side` inside `I_l`.
    pub fn cells_in(&self, ell: u32, side: Side) -> Vec<usize> {
        let Some((first, last)) = ring_interval(ell).cell_span(&self.grid) else {
            return Vec::new();
        };
        (first..last).filter(|&j| self.cells[j] == side).collect()
    }

    /// `|side & I_l|` by cell counting.
    pub fn measure(&self, ell: u32, side: Side) -> f64 {
        self.cells_in(ell, side).len() as f64 * self.grid.cell_width()
    }
}

/// Bounds predicted for one `I_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapePrediction {
    pub ell: u32,
    /// Upper bound on `P & I_l`.
    pub p_upper: f64,
    /// Lower bound on `N & I_l`.
    pub n_lower: f64,
    /// Lower bound on the mean oscillation over `I_l`, for large `l`.
    pub oscillation_lower: f64,
}

/// What was observed on one `I_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeObservation {
    pub ell: u32,
    pub p_max: f64,
    pub n_min: f64,
    pub oscillation: f64,
    pub prediction: EscapePrediction,
}

impl EscapeObservation {
    pub fn p_holds(&self) -> bool {
        self.p_max <= self.prediction.p_upper
    }

    pub fn n_holds(&self) -> bool {
        self.n_min >= self.prediction.n_lower
    }

    pub fn oscillation_holds(&self) -> bool {
        self.oscillation >= self.prediction.oscillation_lower
    }
}

#[derive(Debug, Clone)]
pub struct EscapeExample {
    pub signal: Signal,
    pub table: PnTable,
    pub selector: Selector,
    pub range: ScaleRange,
}

/// Coarsest scale used by [`bmo_escape_example`]; terms above it are below
/// `2^-8` on `[1/2, 5/8)`.
pub const ESCAPE_TOP_SCALE: i32 = 8;

/// `1_[1/2, 1)` on `[0, 2)` with the membership selector of [`pn_table`],
/// over scales `[-R, 8]`.
pub fn bmo_escape_example(ell_max: u32, resolution: u32) -> Result<EscapeExample> {
    let table = pn_table(ell_max, resolution)?;
    let signal = Signal::indicator(table.grid, 0.5, 1.0)?;
    let selector = table.selector();
    let range = ScaleRange::new(-(resolution as i32), ESCAPE_TOP_SCALE)?;
    Ok(EscapeExample {
        signal,
        table,
        selector,
        range,
    })
}

impl EscapeExample {
    pub fn prediction(&self, ell: u32) -> EscapePrediction {
        EscapePrediction {
            ell,
            p_upper: 1.0,
            n_lower: 0.5 * (f64::from(ell) - 2.0).max(0.0).sqrt(),
            oscillation_lower: f64::from(ell).sqrt() / 16.0,
        }
    }

    /// Selector square function on every cell of `I_3`.
    pub fn values_near(&self) -> Result<(usize, Vec<f64>)> {
        let (first, last) = ring_interval(3)
            .cell_span(&self.table.grid)
            .expect("rings are resolved by the grid");
        let opts = EvalOptions::cells(first..last);
        Ok((first, s_selector_with(&self.signal, &self.selector, self.range, &opts)?.values))
    }

    /// Observations for `3 <= l <= ell_max`.
    pub fn observe(&self) -> Result<Vec<EscapeObservation>> {
        let (first, near) = self.values_near()?;
        let grid = self.table.grid;
        let mut full = vec![0.0; grid.cell_count];
        full[first..first + near.len()].copy_from_slice(&near);
        Ok((3..=self.table.ell_max)
            .map(|ell| {
                let pick = |side| self.table.cells_in(ell, side).into_iter().map(|j| full[j]);
                EscapeObservation {
                    ell,
                    p_max: pick(Side::P).fold(f64::NEG_INFINITY, f64::max),
                    n_min: pick(Side::N).fold(f64::INFINITY, f64::min),
                    oscillation: oscillation_on(&grid, &full, ring_interval(ell)).mean_oscillation,
                    prediction: self.prediction(ell),
                }
            })
            .collect())
    }
}
