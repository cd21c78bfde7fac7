//! Dyadic intervals, the conditional expectations `E_k`, and enumeration of
//! dyadic intervals meeting a window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{floor_shift, pow2};
use crate::signal::{GridSpec, Signal};

/// `[m 2^k, (m+1) 2^k)`, an atom of the level-`k` dyadic sigma-algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub k: i32,
    pub m: i64,
}

impl DyadicInterval {
    pub fn new(k: i32, m: i64) -> Self {
        DyadicInterval { k, m }
    }

    /// The level-`k` interval containing `x`.
    pub fn containing(k: i32, x: f64) -> Self {
        DyadicInterval {
            k,
            m: (x / pow2(k)).floor() as i64,
        }
    }

    pub fn len(&self) -> f64 {
        pow2(self.k)
    }

    pub fn lo(&self) -> f64 {
        self.m as f64 * pow2(self.k)
    }

    pub fn hi(&self) -> f64 {
        (self.m + 1) as f64 * pow2(self.k)
    }

    pub fn center(&self) -> f64 {
        (self.m as f64 + 0.5) * pow2(self.k)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo() && x < self.hi()
    }

    pub fn children(&self) -> [DyadicInterval; 2] {
        [
            DyadicInterval::new(self.k - 1, 2 * self.m),
            DyadicInterval::new(self.k - 1, 2 * self.m + 1),
        ]
    }

    pub fn parent(&self) -> DyadicInterval {
        DyadicInterval::new(self.k + 1, self.m.div_euclid(2))
    }

    /// Range of window cells (relative indices) covered by this interval,
    /// clipped to the window, for intervals at or above the grid level.
    pub fn cell_span(&self, grid: &GridSpec) -> Option<(usize, usize)> {
        if self.k < grid.k_min {
            return None;
        }
        let shift = (self.k - grid.k_min) as u32;
        if shift > 62 {
            return Some((0, grid.cell_count));
        }
        let first = (self.m << shift) - grid.origin_index;
        let last = ((self.m + 1) << shift) - grid.origin_index;
        let n = grid.cell_count as i64;
        Some((first.clamp(0, n) as usize, last.clamp(0, n) as usize))
    }

    /// Number of grid cells in the full interval (inside or outside the window).
    pub fn cell_total(&self, grid: &GridSpec) -> Option<u64> {
        (self.k >= grid.k_min && self.k - grid.k_min < 63).then(|| 1u64 << (self.k - grid.k_min))
    }
}

impl std::fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {})", self.lo(), self.hi())
    }
}

/// The level-`k` dyadic cell containing `x`.
pub fn cell(k: i32, x: f64) -> DyadicInterval {
    DyadicInterval::containing(k, x)
}

/// `E_k f(x)`: the average of `f` over the level-`k` cell containing `x`.
///
/// Below the grid level the signal is already measurable, so the cell value
/// is returned. Cells reaching past the window average in the zero extension.
pub fn expectation(signal: &Signal, k: i32, x: f64) -> f64 {
    if k < signal.grid().k_min {
        return signal.value_at(x);
    }
    let atom = cell(k, x);
    let integral = signal
        .integral(atom.lo(), atom.hi())
        .expect("dyadic cells are ordered");
    integral * pow2(-k)
}

/// Integral of `f` over the level-`k` atom containing window cell `cell`
/// (`k >= k_min`), i.e. `2^k E_k f` there.
pub fn atom_integral(signal: &Signal, k: i32, cell: usize) -> f64 {
    let grid = signal.grid();
    let shift = (k - grid.k_min) as u32;
    let atom = floor_shift(grid.global_index(cell), shift);
    let (first, last) = DyadicInterval::new(k, atom)
        .cell_span(grid)
        .expect("level at or above the grid");
    signal.prefix().at(last as i64) - signal.prefix().at(first as i64)
}

/// `E_k f` evaluated on every window cell, in `O(cell_count)`.
pub fn expectation_profile(signal: &Signal, k: i32) -> Vec<f64> {
    let grid = signal.grid();
    if k <= grid.k_min {
        return signal.values().to_vec();
    }
    let shift = (k - grid.k_min) as u32;
    let scale = pow2(-k);
    let mut out = Vec::with_capacity(grid.cell_count);
    let mut j = 0usize;
    while j < grid.cell_count {
        let atom = floor_shift(grid.global_index(j), shift);
        let (first, last) = DyadicInterval::new(k, atom)
            .cell_span(grid)
            .expect("level at or above the grid");
        let mean = (signal.prefix().at(last as i64) - signal.prefix().at(first as i64)) * scale;
        out.extend(std::iter::repeat_n(mean, last - j));
        j = last;
    }
    out
}

/// Every dyadic interval with level in `[k_lo, k_hi]` that meets the window,
/// ordered by level and then position.
pub fn enumerate_dyadic(window: &GridSpec, k_lo: i32, k_hi: i32) -> Result<Vec<DyadicInterval>> {
    if k_lo > k_hi {
        return Err(Error::EmptyRange { lo: k_lo, hi: k_hi });
    }
    let first_cell = window.origin_index;
    let last_cell = window.origin_index + window.cell_count as i64 - 1;
    let mut out = Vec::new();
    for k in k_lo..=k_hi {
        let (m_lo, m_hi) = if k >= window.k_min {
            let shift = (k - window.k_min) as u32;
            (floor_shift(first_cell, shift), floor_shift(last_cell, shift))
        } else {
            let split = (window.k_min - k) as u32;
            (first_cell << split, ((last_cell + 1) << split) - 1)
        };
        out.extend((m_lo..=m_hi).map(|m| DyadicInterval::new(k, m)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chi_half_one(k_min: i32) -> Signal {
        let grid = GridSpec::covering(k_min, 0.0, 2.0).unwrap();
        Signal::indicator(grid, 0.5, 1.0).unwrap()
    }

    #[test]
    fn cells_floor_toward_minus_infinity() {
        assert_eq!(cell(0, 0.6), DyadicInterval::new(0, 0));
        let c = cell(-1, 0.6);
        assert_eq!((c.lo(), c.hi()), (0.5, 1.0));
        let c = cell(3, -0.5);
        assert_eq!((c.lo(), c.hi()), (-8.0, 0.0));
    }

    #[test]
    fn family_relations() {
        let i = DyadicInterval::new(-2, 3);
        let [a, b] = i.children();
        assert_eq!((a.lo(), a.hi(), b.lo(), b.hi()), (0.75, 0.875, 0.875, 1.0));
        assert_eq!(a.parent(), i);
        assert_eq!(DyadicInterval::new(0, -3).parent(), DyadicInterval::new(1, -2));
        assert_eq!(i.center(), 0.875);
    }

    #[test]
    fn expectation_of_half_indicator() {
        let f = chi_half_one(-4);
        assert_eq!(expectation(&f, 0, 0.25), 0.5);
        assert_eq!(expectation(&f, 1, 0.6), 0.25);
        assert_eq!(expectation(&f, -2, 0.6), 1.0);
        for k in -1..6 {
            assert_eq!(expectation(&f, k, 0.55), pow2(-k - 1), "k = {k}");
        }
        // Below the grid level: the cell value.
        assert_eq!(expectation(&f, -9, 0.55), 1.0);
        assert_eq!(expectation(&f, -9, 0.45), 0.0);
    }

    #[test]
    fn constant_expectation() {
        let g = GridSpec::real(-3, 0, 64).unwrap();
        let f = Signal::constant(2.5, g).unwrap();
        for k in -3..=3 {
            assert_eq!(expectation(&f, k, 1.3), 2.5);
        }
    }

    #[test]
    fn profile_limits() {
        let g = GridSpec::real(-2, -3, 10).unwrap();
        let f = Signal::new((0..10).map(|i| i as f64 - 4.0).collect(), g).unwrap();
        assert_eq!(expectation_profile(&f, -2), f.values());
        let total = f.integral(-10.0, 10.0).unwrap();
        let p = expectation_profile(&f, 4);
        // [-3/4, 7/4) straddles 0, so level 4 splits it into [-16,0) and [0,16).
        let neg = f.integral(-1.0, 0.0).unwrap() / 16.0;
        let pos = f.integral(0.0, 2.0).unwrap() / 16.0;
        assert_eq!(&p[..3], &[neg; 3]);
        assert_eq!(&p[3..], &[pos; 7]);
        assert_eq!(neg * 16.0 + pos * 16.0, total);
    }

    #[test]
    fn profile_matches_pointwise_expectation() {
        let g = GridSpec::real(-3, -7, 40).unwrap();
        let f = Signal::new((0..40).map(|i| ((i * 7) % 11) as f64 / 8.0).collect(), g).unwrap();
        for k in -5..5 {
            let p = expectation_profile(&f, k);
            for (j, &v) in p.iter().enumerate() {
                assert_eq!(v, expectation(&f, k, g.eval_point(j)), "k = {k}, j = {j}");
            }
        }
    }

    #[test]
    fn enumerate_examples() {
        let w = GridSpec::covering(-2, 0.0, 1.0).unwrap();
        let got = enumerate_dyadic(&w, -2, -1).unwrap();
        assert_eq!(got.iter().filter(|i| i.k == -2).count(), 4);
        assert_eq!(got.iter().filter(|i| i.k == -1).count(), 2);
        assert_eq!(enumerate_dyadic(&w, 0, 0).unwrap(), vec![DyadicInterval::new(0, 0)]);
        assert!(matches!(enumerate_dyadic(&w, 1, 0), Err(Error::EmptyRange { .. })));
    }

    #[test]
    fn enumerate_matches_brute_force() {
        for (k_min, lo, hi) in [(-1, -1.0, 1.0), (-3, -0.625, 1.375), (0, -5.0, 3.0)] {
            let w = GridSpec::covering(k_min, lo, hi).unwrap();
            for k_lo in -5..3 {
                for k_hi in k_lo..4 {
                    let got = enumerate_dyadic(&w, k_lo, k_hi).unwrap();
                    let mut want = Vec::new();
                    for k in k_lo..=k_hi {
                        for m in -200i64..200 {
                            let i = DyadicInterval::new(k, m);
                            if i.lo() < hi && i.hi() > lo {
                                want.push(i);
                            }
                        }
                    }
                    assert_eq!(got, want, "window [{lo},{hi}) levels [{k_lo},{k_hi}]");
                }
            }
        }
        // [-1, 1) at levels -1..=1: four halves, two units, and [-2,0), [0,2).
        let w = GridSpec::covering(-1, -1.0, 1.0).unwrap();
        assert_eq!(enumerate_dyadic(&w, -1, 1).unwrap().len(), 8);
    }
}
