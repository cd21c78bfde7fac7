//! Interval selectors: rules choosing, for each scale `k` and point `x`, one
//! interval `[x - a, x - a + 2^k)` of length `2^k` containing `x`.
//!
//! A selector is represented by its offset `a` in `[0, 2^k]`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{at_path, Error, Result};
use crate::num::pow2;
use crate::signal::{GridMode, GridSpec};

/// Values attached to the cells of a grid window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTable<T> {
    pub grid: GridSpec,
    pub values: Vec<T>,
}

impl<T: Clone> CellTable<T> {
    pub fn new(grid: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.cell_count {
            return Err(Error::LengthMismatch {
                expected: grid.cell_count,
                actual: values.len(),
            });
        }
        Ok(CellTable { grid, values })
    }

    pub fn filled(grid: GridSpec, value: T) -> Self {
        CellTable {
            values: vec![value; grid.cell_count],
            grid,
        }
    }

    pub fn get(&self, x: f64) -> Option<&T> {
        self.grid.cell_of(x).map(|j| &self.values[j])
    }
}

/// Offsets tabulated per scale and per window cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedSelector {
    /// Inclusive scale range `[k_lo, k_hi]`.
    pub k_range: [i32; 2],
    pub window: GridSpec,
    /// `offsets[k - k_lo][cell]`, in length units.
    pub offsets: Vec<Vec<f64>>,
}

impl TabulatedSelector {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.k_range;
        if lo > hi {
            return Err(Error::EmptyRange { lo, hi });
        }
        self.window.validate()?;
        if self.offsets.len() != (hi - lo + 1) as usize {
            return Err(Error::LengthMismatch {
                expected: (hi - lo + 1) as usize,
                actual: self.offsets.len(),
            });
        }
        for (row, k) in self.offsets.iter().zip(lo..=hi) {
            if row.len() != self.window.cell_count {
                return Err(Error::LengthMismatch {
                    expected: self.window.cell_count,
                    actual: row.len(),
                });
            }
            for &a in row {
                check_offset(&self.window, k, a)?;
            }
        }
        Ok(())
    }

    fn lookup(&self, k: i32, x: f64) -> Option<f64> {
        let [lo, hi] = self.k_range;
        if k < lo || k > hi {
            return None;
        }
        let j = self.window.cell_of(x)?;
        Some(self.offsets[(k - lo) as usize][j])
    }
}

/// An interval selector.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    /// `a = 2^k`: the interval `[x - 2^k, x)`.
    Left,
    /// `a = 0`: the interval `[x, x + 2^k)`.
    Right,
    /// `a = 2^(k-1)`, rounded down to an integer on the integer line.
    Centered,
    /// Uniform draw among the grid-aligned offsets, seeded per `(seed, k, cell)`.
    SeededRandom { seed: u64 },
    /// Right-sided where the table is `true`, left-sided elsewhere (including
    /// points the table does not cover).
    Membership(CellTable<bool>),
    Tabulated(TabulatedSelector),
}

impl Selector {
    pub fn membership(table: CellTable<bool>) -> Self {
        Selector::Membership(table)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Selector::Left => "left",
            Selector::Right => "right",
            Selector::Centered => "centered",
            Selector::SeededRandom { .. } => "seeded-random",
            Selector::Membership(_) => "membership",
            Selector::Tabulated(_) => "tabulated",
        }
    }

    /// Offset `a` (length units) chosen at scale `k` and point `x`, for a
    /// signal living on `grid`.
    pub fn offset(&self, grid: &GridSpec, k: i32, x: f64) -> Result<f64> {
        let len = pow2(k);
        let a = match self {
            Selector::Left => len,
            Selector::Right => 0.0,
            Selector::Centered => match grid.mode {
                GridMode::RealLine => len / 2.0,
                GridMode::IntegerLine => (len / 2.0).floor(),
            },
            Selector::SeededRandom { seed } => random_offset(grid, *seed, k, x),
            Selector::Membership(table) => {
                if table.get(x).copied().unwrap_or(false) {
                    0.0
                } else {
                    len
                }
            }
            Selector::Tabulated(table) => table.lookup(k, x).ok_or(Error::Uncovered { k, x })?,
        };
        check_offset(grid, k, a)?;
        Ok(a)
    }

    /// The selected interval `[x - a, x - a + 2^k)`.
    pub fn select(&self, grid: &GridSpec, k: i32, x: f64) -> Result<(f64, f64)> {
        let a = self.offset(grid, k, x)?;
        Ok((x - a, x - a + pow2(k)))
    }

    /// Tabulates this selector at the evaluation points of `grid`.
    pub fn tabulate(&self, grid: &GridSpec, k_lo: i32, k_hi: i32) -> Result<TabulatedSelector> {
        if k_lo > k_hi {
            return Err(Error::EmptyRange { lo: k_lo, hi: k_hi });
        }
        let offsets = (k_lo..=k_hi)
            .map(|k| {
                (0..grid.cell_count)
                    .map(|j| self.offset(grid, k, grid.eval_point(j)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TabulatedSelector {
            k_range: [k_lo, k_hi],
            window: *grid,
            offsets,
        })
    }

    /// Parses `left`, `right`, `centered`, `random:<seed>` or `file:<path>`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        match spec {
            "left" => Ok(Selector::Left),
            "right" => Ok(Selector::Right),
            "centered" => Ok(Selector::Centered),
            _ => {
                if let Some(seed) = spec.strip_prefix("random:") {
                    let seed = seed
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad seed in `{spec}`")))?;
                    Ok(Selector::SeededRandom { seed })
                } else if let Some(path) = spec.strip_prefix("file:") {
                    Self::read(Path::new(path))
                } else {
                    Err(Error::Parse(format!("unknown selector `{spec}`")))
                }
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = match self {
            Selector::Left => SelectorFile::Builtin {
                builtin: "left".into(),
                seed: None,
            },
            Selector::Right => SelectorFile::Builtin {
                builtin: "right".into(),
                seed: None,
            },
            Selector::Centered => SelectorFile::Builtin {
                builtin: "centered".into(),
                seed: None,
            },
            Selector::SeededRandom { seed } => SelectorFile::Builtin {
                builtin: "random".into(),
                seed: Some(*seed),
            },
            Selector::Membership(table) => SelectorFile::Membership {
                membership: table.clone(),
            },
            Selector::Tabulated(table) => SelectorFile::Tabulated(table.clone()),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str(text)? {
            SelectorFile::Builtin { builtin, seed } => match (builtin.as_str(), seed) {
                ("left", None) => Ok(Selector::Left),
                ("right", None) => Ok(Selector::Right),
                ("centered", None) => Ok(Selector::Centered),
                ("random", Some(seed)) => Ok(Selector::SeededRandom { seed }),
                _ => Err(Error::Parse(format!("unknown builtin selector `{builtin}`"))),
            },
            SelectorFile::Membership { membership } => {
                CellTable::new(membership.grid, membership.values).map(Selector::Membership)
            }
            SelectorFile::Tabulated(table) => {
                table.validate()?;
                Ok(Selector::Tabulated(table))
            }
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(at_path(path))?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(at_path(path))?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SelectorFile {
    Builtin {
        builtin: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Membership {
        membership: CellTable<bool>,
    },
    Tabulated(TabulatedSelector),
}

fn check_offset(grid: &GridSpec, k: i32, a: f64) -> Result<()> {
    let len = pow2(k);
    if !(0.0..=len).contains(&a) {
        return Err(Error::OffsetOutOfRange { k, offset: a, len });
    }
    if grid.mode == GridMode::IntegerLine && a.fract() != 0.0 {
        return Err(Error::FractionalOffset { k, offset: a });
    }
    Ok(())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform choice among the offsets whose interval endpoints fall on grid
/// lines, plus the two extreme offsets `0` and `2^k`.
fn random_offset(grid: &GridSpec, seed: u64, k: i32, x: f64) -> f64 {
    let h = grid.cell_width();
    let p = x / h;
    let cell = p.floor();
    let key = splitmix64(splitmix64(seed ^ splitmix64(k as i64 as u64)) ^ (cell as i64 as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let span = pow2(k) / h;
    match grid.mode {
        GridMode::IntegerLine => {
            let top = span.floor() as u64;
            rng.gen_range(0..=top) as f64
        }
        GridMode::RealLine => {
            let frac = p - cell;
            let first = if frac > 0.0 { frac } else { 1.0 };
            let interior = if span > first {
                (span - first).ceil() as u64
            } else {
                0
            };
            let idx = rng.gen_range(0..interior + 2);
            let alpha = if idx == 0 {
                0.0
            } else if idx == interior + 1 {
                span
            } else {
                first + (idx - 1) as f64
            };
            alpha * h
        }
    }
}
