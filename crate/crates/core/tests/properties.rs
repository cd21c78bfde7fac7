use ergsq_core::norms::{bmo_over, intervals_inside, lp_norm, window_level};
use ergsq_core::sample::{random_dyadic_steps, random_steps};
use ergsq_core::square::{s_inf, s_selector, s_sup, tail_bound};
use ergsq_core::{expectation_profile, GridSpec, ScaleRange, Selector, Signal};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = GridSpec> {
    prop_oneof![
        3 => (-4i32..=1, -20i64..20, 1usize..96).prop_map(|(k, o, n)| GridSpec::real(k, o, n).unwrap()),
        1 => (-20i64..20, 1usize..96).prop_map(|(o, n)| GridSpec::integer(o, n).unwrap()),
    ]
}

fn dyadic_signal() -> impl Strategy<Value = Signal> {
    (grid_strategy(), any::<u64>()).prop_map(|(g, seed)| random_dyadic_steps(g, seed).unwrap())
}

fn signal() -> impl Strategy<Value = Signal> {
    (grid_strategy(), any::<u64>()).prop_map(|(g, seed)| random_steps(g, seed).unwrap())
}

fn range_for(grid: &GridSpec, extra: i32) -> ScaleRange {
    ScaleRange::new(grid.k_min, window_level(grid) + extra).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integrals_add_up(f in dyadic_signal(), a in 0usize..96, b in 0usize..96, c in 0usize..96) {
        let g = *f.grid();
        let n = g.cell_count;
        let mut cut = [a % (n + 1), b % (n + 1), c % (n + 1)];
        cut.sort_unstable();
        let at = |i: usize| g.lo() + i as f64 * g.cell_width();
        let whole = f.integral(at(cut[0]), at(cut[2])).unwrap();
        let parts = f.integral(at(cut[0]), at(cut[1])).unwrap() + f.integral(at(cut[1]), at(cut[2])).unwrap();
        prop_assert_eq!(whole, parts);
        let naive: f64 = f.values()[cut[0]..cut[2]].iter().sum::<f64>() * g.cell_width();
        prop_assert_eq!(whole, naive);
    }

    #[test]
    fn tower_property(k_min in -3i32..2, blocks in 1usize..6, origin in -4i64..4, up in 0i32..4, gap in 0i32..4, seed in any::<u64>()) {
        // The window is aligned to the coarse level so no atom sticks out.
        let per = 1usize << (up + gap);
        let g = GridSpec::real(k_min, origin * per as i64, blocks * per).unwrap();
        let f = random_dyadic_steps(g, seed).unwrap();
        let k = g.k_min + up;
        let coarse = k + gap;
        let once = expectation_profile(&f, coarse);
        let inner = f.with_values(expectation_profile(&f, k)).unwrap();
        prop_assert_eq!(expectation_profile(&inner, coarse), once);
    }

    #[test]
    fn expectations_contract(f in signal(), up in 0i32..8) {
        let k = f.grid().k_min + up;
        let bound = f.sup_norm();
        prop_assert!(expectation_profile(&f, k).iter().all(|v| v.abs() <= bound * (1.0 + 4.0 * f64::EPSILON)));
    }

    #[test]
    fn expectation_is_linear(f in dyadic_signal(), seed in any::<u64>(), up in 0i32..5) {
        let g = random_dyadic_steps(*f.grid(), seed).unwrap();
        let k = f.grid().k_min + up;
        let sum = f.with_values(f.values().iter().zip(g.values()).map(|(a, b)| 2.0 * a - b).collect()).unwrap();
        let lhs = expectation_profile(&sum, k);
        let (ef, eg) = (expectation_profile(&f, k), expectation_profile(&g, k));
        for i in 0..lhs.len() {
            prop_assert_eq!(lhs[i], 2.0 * ef[i] - eg[i]);
        }
    }

    #[test]
    fn envelope_dominates_selectors(f in signal(), seed in any::<u64>()) {
        let range = range_for(f.grid(), 2);
        let hi = s_sup(&f, range).unwrap().values;
        let lo = s_inf(&f, range).unwrap().values;
        for sel in [Selector::Left, Selector::Right, Selector::Centered, Selector::SeededRandom { seed }] {
            let v = s_selector(&f, &sel, range).unwrap().values;
            for i in 0..v.len() {
                prop_assert!(lo[i] <= v[i] && v[i] <= hi[i], "{} at {}: {} {} {}", sel.kind(), i, lo[i], v[i], hi[i]);
            }
        }
    }

    #[test]
    fn power_of_two_scaling_is_exact(f in signal(), e in -3i32..4, negate in any::<bool>()) {
        let c = if negate { -(2f64.powi(e)) } else { 2f64.powi(e) };
        let g = f.with_values(f.values().iter().map(|v| c * v).collect()).unwrap();
        let range = range_for(f.grid(), 1);
        let (a, b) = (s_sup(&f, range).unwrap().values, s_sup(&g, range).unwrap().values);
        for i in 0..a.len() {
            prop_assert_eq!(b[i], c.abs() * a[i]);
        }
    }

    #[test]
    fn scaling_is_equivariant(f in signal(), c in -4.0f64..4.0) {
        let g = f.with_values(f.values().iter().map(|v| c * v).collect()).unwrap();
        let range = range_for(f.grid(), 1);
        let (a, b) = (s_sup(&f, range).unwrap().values, s_sup(&g, range).unwrap().values);
        for i in 0..a.len() {
            prop_assert!((b[i] - c.abs() * a[i]).abs() <= 1e-12 * (1.0 + b[i]));
        }
    }

    #[test]
    fn bmo_ignores_constants_and_scales(f in dyadic_signal(), c in -8i32..8) {
        let grid = *f.grid();
        let intervals = intervals_inside(&grid, grid.k_min, window_level(&grid)).unwrap();
        let base = bmo_over(&grid, f.values(), &intervals).unwrap().0;
        let shift = f64::from(c) / 4.0;
        let shifted: Vec<f64> = f.values().iter().map(|v| v + shift).collect();
        prop_assert_eq!(bmo_over(&grid, &shifted, &intervals).unwrap().0, base);
        let scaled: Vec<f64> = f.values().iter().map(|v| -4.0 * v).collect();
        prop_assert_eq!(bmo_over(&grid, &scaled, &intervals).unwrap().0, 4.0 * base);
    }

    #[test]
    fn dyadic_translation_is_invisible(f in signal(), m in -3i64..3) {
        // Shifting by a multiple of 2^(k_hi + 1) preserves every atom up to k_hi.
        let grid = *f.grid();
        let range = range_for(&grid, 1);
        let step = 1i64 << (range.k_hi + 1 - grid.k_min);
        let moved_grid = GridSpec::new(grid.k_min, grid.origin_index + m * step, grid.cell_count, grid.mode).unwrap();
        let moved = Signal::new(f.values().to_vec(), moved_grid).unwrap();
        prop_assert_eq!(s_sup(&f, range).unwrap().values, s_sup(&moved, range).unwrap().values);
        prop_assert_eq!(s_inf(&f, range).unwrap().values, s_inf(&moved, range).unwrap().values);
    }

    #[test]
    fn widening_respects_tail_bound(f in signal(), extra in 1i32..6) {
        let grid = *f.grid();
        let narrow = range_for(&grid, 0);
        let wide = ScaleRange::new(narrow.k_lo, narrow.k_hi + extra).unwrap();
        let (a, b) = (s_sup(&f, narrow).unwrap(), s_sup(&f, wide).unwrap());
        let (c, d) = (s_inf(&f, narrow).unwrap(), s_inf(&f, wide).unwrap());
        let tail = tail_bound(&f, narrow.k_hi);
        prop_assert_eq!(a.tail_bound, tail);
        for i in 0..a.values.len() {
            prop_assert!(a.values[i] <= b.values[i] && c.values[i] <= d.values[i]);
            let cap = (a.values[i].powi(2) + tail * tail).sqrt();
            prop_assert!(b.values[i] <= cap * (1.0 + 1e-12));
        }
    }

    #[test]
    fn selected_intervals_contain_the_point(f in signal(), seed in any::<u64>(), up in 0i32..8) {
        let grid = *f.grid();
        let k = grid.k_min + up;
        for sel in [Selector::Left, Selector::Right, Selector::Centered, Selector::SeededRandom { seed }] {
            for x in grid.eval_points() {
                let (lo, hi) = sel.select(&grid, k, x).unwrap();
                prop_assert!(lo <= x && x <= hi);
                prop_assert_eq!(hi - lo, 2f64.powi(k));
            }
        }
    }

    #[test]
    fn lp_norm_is_homogeneous(f in dyadic_signal(), p in 1.0f64..9.0) {
        let grid = *f.grid();
        let doubled: Vec<f64> = f.values().iter().map(|v| 2.0 * v).collect();
        let (a, b) = (lp_norm(&grid, f.values(), p).unwrap(), lp_norm(&grid, &doubled, p).unwrap());
        prop_assert!((b - 2.0 * a).abs() <= 1e-12 * b.max(1e-300));
    }
}
