//! Piecewise-constant signals on a dyadic grid.
//!
//! A signal stores one value per grid cell and is zero outside its window.
//! Intervals are half-open, `[a, b)`, throughout the crate. For step functions
//! the choice of endpoint convention only changes sets of measure zero, so
//! averages agree with the closed/open variants.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{at_path, Error, Result};
use crate::num::pow2;

/// Whether the grid models the real line or the integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GridMode {
    #[default]
    RealLine,
    IntegerLine,
}

/// Geometry of a dyadic grid window.
///
/// Global cell `g` covers `[g * 2^k_min, (g + 1) * 2^k_min)`; the window holds
/// cells `origin_index .. origin_index + cell_count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub k_min: i32,
    pub origin_index: i64,
    pub cell_count: usize,
    #[serde(default)]
    pub mode: GridMode,
}

impl GridSpec {
    pub fn new(k_min: i32, origin_index: i64, cell_count: usize, mode: GridMode) -> Result<Self> {
        let grid = GridSpec {
            k_min,
            origin_index,
            cell_count,
            mode,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn real(k_min: i32, origin_index: i64, cell_count: usize) -> Result<Self> {
        Self::new(k_min, origin_index, cell_count, GridMode::RealLine)
    }

    pub fn integer(origin_index: i64, cell_count: usize) -> Result<Self> {
        Self::new(0, origin_index, cell_count, GridMode::IntegerLine)
    }

    /// Grid of level `k_min` exactly covering `[lo, hi)`; both ends must be
    /// multiples of `2^k_min`.
    pub fn covering(k_min: i32, lo: f64, hi: f64) -> Result<Self> {
        let h = pow2(k_min);
        let (a, b) = (lo / h, hi / h);
        if a.fract() != 0.0 || b.fract() != 0.0 || b <= a {
            return Err(Error::Parse(format!(
                "[{lo}, {hi}) is not a non-empty union of level-{k_min} cells"
            )));
        }
        Self::real(k_min, a as i64, (b - a) as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell_count == 0 {
            return Err(Error::EmptyGrid);
        }
        if self.mode == GridMode::IntegerLine && self.k_min != 0 {
            return Err(Error::IntegerGridLevel(self.k_min));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cell_count
    }

    pub fn is_empty(&self) -> bool {
        self.cell_count == 0
    }

    /// Side length of one cell, `2^k_min`.
    pub fn cell_width(&self) -> f64 {
        pow2(self.k_min)
    }

    pub fn lo(&self) -> f64 {
        self.origin_index as f64 * self.cell_width()
    }

    pub fn hi(&self) -> f64 {
        (self.origin_index + self.cell_count as i64) as f64 * self.cell_width()
    }

    /// Position of `x` in window-relative cell units (cell `j` is `[j, j+1)`).
    pub fn coordinate(&self, x: f64) -> f64 {
        x / self.cell_width() - self.origin_index as f64
    }

    /// Offset of the evaluation point inside its cell, in cell units:
    /// midpoints on the real line, left ends (the integers) on the integer line.
    pub fn eval_shift(&self) -> f64 {
        match self.mode {
            GridMode::RealLine => 0.5,
            GridMode::IntegerLine => 0.0,
        }
    }

    /// Evaluation point of window cell `j`.
    pub fn eval_point(&self, j: usize) -> f64 {
        ((self.origin_index + j as i64) as f64 + self.eval_shift()) * self.cell_width()
    }

    pub fn eval_points(&self) -> Vec<f64> {
        (0..self.cell_count).map(|j| self.eval_point(j)).collect()
    }

    /// Window cell containing `x`, if any.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let t = self.coordinate(x).floor();
        if t >= 0.0 && t < self.cell_count as f64 {
            Some(t as usize)
        } else {
            None
        }
    }

    pub fn global_index(&self, j: usize) -> i64 {
        self.origin_index + j as i64
    }
}

/// Cumulative integrals, `partials[j] = sum_{i<j} values[i] * 2^k_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixSums(Vec<f64>);

impl PrefixSums {
    fn build(values: &[f64], width: f64) -> Self {
        let mut partials = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        partials.push(acc);
        for v in values {
            acc += v * width;
            partials.push(acc);
        }
        PrefixSums(partials)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Partial sum at a cell boundary, clamped to the window.
    #[inline]
    pub fn at(&self, boundary: i64) -> f64 {
        let n = self.0.len() as i64 - 1;
        self.0[boundary.clamp(0, n) as usize]
    }

    pub fn total(&self) -> f64 {
        *self.0.last().expect("prefix sums are never empty")
    }
}

/// A piecewise-constant function on a dyadic grid, zero outside the window.
///
/// Immutable after construction; prefix sums are computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: GridSpec,
    values: Vec<f64>,
    prefix: PrefixSums,
}

impl Signal {
    pub fn new(values: Vec<f64>, grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.cell_count {
            return Err(Error::LengthMismatch {
                expected: grid.cell_count,
                actual: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        let prefix = PrefixSums::build(&values, grid.cell_width());
        Ok(Signal {
            grid,
            values,
            prefix,
        })
    }

    pub fn constant(c: f64, grid: GridSpec) -> Result<Self> {
        Self::new(vec![c; grid.cell_count], grid)
    }

    /// Indicator of `[lo, hi)` sampled on `grid`; cells are assigned by their
    /// left endpoint, which is exact when `lo` and `hi` are grid-aligned.
    pub fn indicator(grid: GridSpec, lo: f64, hi: f64) -> Result<Self> {
        let h = grid.cell_width();
        let values = (0..grid.cell_count)
            .map(|j| {
                let left = grid.global_index(j) as f64 * h;
                if left >= lo && left < hi {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(values, grid)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn prefix(&self) -> &PrefixSums {
        &self.prefix
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.cell_width() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Value of the function at `x` (zero outside the window).
    pub fn value_at(&self, x: f64) -> f64 {
        self.grid.cell_of(x).map_or(0.0, |j| self.values[j])
    }

    /// Integral from the window start to window coordinate `t`.
    ///
    /// Exact (a stored partial sum) when `t` is an integer.
    #[inline]
    pub fn cumulative(&self, t: f64) -> f64 {
        let n = self.values.len();
        if t <= 0.0 {
            return 0.0;
        }
        if t >= n as f64 {
            return self.prefix.total();
        }
        let i = t.floor();
        let frac = t - i;
        let i = i as usize;
        if frac == 0.0 {
            self.prefix.0[i]
        } else {
            self.prefix.0[i] + frac * self.values[i] * self.grid.cell_width()
        }
    }

    /// Integral over the window cells `[start, start + len)`, global indices
    /// relative to the window origin; cells outside the window contribute 0.
    #[inline]
    pub fn aligned_sum(&self, start: i64, len: i64) -> f64 {
        self.prefix.at(start + len) - self.prefix.at(start)
    }

    /// Exact integral of the signal over `[a, b)`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(Error::ReversedInterval { lo: a, hi: b });
        }
        Ok(self.cumulative(self.grid.coordinate(b)) - self.cumulative(self.grid.coordinate(a)))
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.grid)
    }

    /// Keeps the cells whose global index satisfies `keep`, zeroing the rest.
    pub fn masked(&self, keep: impl Fn(i64) -> bool) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(j, &v)| if keep(self.grid.global_index(j)) { v } else { 0.0 })
            .collect();
        Self::new(values, self.grid).expect("masking preserves validity")
    }

    /// The same function on a grid `levels` times finer.
    pub fn refined(&self, levels: u32) -> Result<Self> {
        if self.grid.mode == GridMode::IntegerLine {
            return Err(Error::IntegerGridLevel(self.grid.k_min - levels as i32));
        }
        let factor = 1usize << levels;
        let grid = GridSpec::real(
            self.grid.k_min - levels as i32,
            self.grid.origin_index << levels,
            self.grid.cell_count * factor,
        )?;
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, factor))
            .collect();
        Self::new(values, grid)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&SignalFile {
            grid: self.grid,
            values: self.values.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SignalFile = serde_json::from_str(text)?;
        Self::new(file.values, file.grid)
    }

    /// CSV form: a `k_min,origin_index` header line, one line with those two
    /// numbers, then one value per line. Integer-line grids add a `mode` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.grid.mode {
            GridMode::RealLine => {
                out.push_str("k_min,origin_index\n");
                let _ = writeln!(out, "{},{}", self.grid.k_min, self.grid.origin_index);
            }
            GridMode::IntegerLine => {
                out.push_str("k_min,origin_index,mode\n");
                let _ = writeln!(out, "{},{},integer-line", self.grid.k_min, self.grid.origin_index);
            }
        }
        for v in &self.values {
            let _ = writeln!(out, "{v}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty signal file".into()))?;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        if columns.len() < 2 || columns[0] != "k_min" || columns[1] != "origin_index" {
            return Err(Error::Parse(format!("unexpected signal header `{header}`")));
        }
        let meta = lines
            .next()
            .ok_or_else(|| Error::Parse("missing grid line".into()))?;
        let fields: Vec<&str> = meta.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(Error::Parse(format!("grid line `{meta}` does not match header")));
        }
        let k_min: i32 = parse_field(fields[0])?;
        let origin_index: i64 = parse_field(fields[1])?;
        let mode = match fields.get(2) {
            None | Some(&"real-line") => GridMode::RealLine,
            Some(&"integer-line") => GridMode::IntegerLine,
            Some(other) => return Err(Error::Parse(format!("unknown grid mode `{other}`"))),
        };
        let values = lines.map(parse_field::<f64>).collect::<Result<Vec<_>>>()?;
        let grid = GridSpec::new(k_min, origin_index, values.len(), mode)?;
        Self::new(values, grid)
    }

    /// Reads a signal, choosing the format from the file extension.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(at_path(path))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::from_csv(&text),
            _ => Self::from_json(&text),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => self.to_csv(),
            _ => self.to_json()?,
        };
        std::fs::write(path, text).map_err(at_path(path))?;
        Ok(())
    }
}

fn parse_field<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("cannot parse `{s}`")))
}

#[derive(Serialize, Deserialize)]
struct SignalFile {
    grid: GridSpec,
    values: Vec<f64>,
}
