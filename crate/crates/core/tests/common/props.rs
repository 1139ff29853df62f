//! Randomised invariant checks, shared by the property tests and the
//! acceptance report. Each runs a fixed-seed proptest runner.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use proptest::prelude::*;
use proptest::test_runner::TestRunner;
use zonerisk_core::jackknife::{empirical_ci, quantile_sorted};
use zonerisk_core::ordreg::{self, FitOptions, OrdinalModel};
use zonerisk_core::panel::{
    aggregate_weekly, correlation_matrix, parse_daily_csv, population_share_by_colour, ColumnMap, DailyPanel,
    LabelEntry, LabelSeries, Statistic, INDICATOR_COUNT,
};
use zonerisk_core::pca::{fit_pca, select_components, standardize};
use zonerisk_core::search::{enumerate_subsets, search_masks, RegionData, SearchConfig};
use zonerisk_core::{Matrix, RiskLevel};

pub fn config_with(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(20210101),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn level() -> impl Strategy<Value = RiskLevel> {
    (0usize..3).prop_map(|i| RiskLevel::from_index(i).unwrap())
}

fn matrix(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> impl Strategy<Value = Matrix> {
    (rows, cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-100.0f64..100.0, r * c).prop_map(move |d| Matrix::from_row_major(r, c, d))
    })
}

/// Scores and labels with at least two classes.
fn ordinal_data(r: usize) -> impl Strategy<Value = (Matrix, Vec<RiskLevel>)> {
    (8usize..30).prop_flat_map(move |n| {
        (
            prop::collection::vec(-3.0f64..3.0, n * r).prop_map(move |d| Matrix::from_row_major(n, r, d)),
            prop::collection::vec(level(), n).prop_filter("two classes", |y| y.iter().any(|l| *l != y[0])),
        )
    })
}

pub fn probabilities_lie_on_the_simplex(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(
            &(
                -50.0f64..50.0,
                1e-6f64..60.0,
                prop::collection::vec(-20.0f64..20.0, 3),
                prop::collection::vec(-20.0f64..20.0, 3),
            ),
            |(eta1, gap, beta, s)| {
                let m = OrdinalModel {
                    eta: [eta1, eta1 + gap],
                    beta,
                };
                let p = m.class_probabilities(&s);
                prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(p[0] <= p[0] + p[1]);
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

pub fn translation_is_absorbed_by_intercepts(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(
            &(-5.0f64..5.0, 0.01f64..5.0, -3.0f64..3.0, -5.0f64..5.0, -5.0f64..5.0),
            |(eta1, gap, beta, s, c)| {
                let a = OrdinalModel {
                    eta: [eta1, eta1 + gap],
                    beta: vec![beta],
                };
                let b = OrdinalModel {
                    eta: [eta1 - c * beta, eta1 + gap - c * beta],
                    beta: vec![beta],
                };
                let pa = a.class_probabilities(&[s]);
                let pb = b.class_probabilities(&[s + c]);
                for k in 0..3 {
                    prop_assert!((pa[k] - pb[k]).abs() <= 1e-12);
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

pub fn newton_descent_never_raises_the_objective(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(&(ordinal_data(2),), |((s, y),)| {
            let mut trace = Vec::new();
            let Ok(f) = ordreg::fit_traced(&s, &y, &FitOptions::default(), |v| trace.push(v)) else {
                return Ok(());
            };
            for w in trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{trace:?}");
            }
            if f.converged {
                prop_assert!(f.gradient_norm <= 1e-8);
                prop_assert!(!f.separation_flag);
            }
            let again = ordreg::fit(&s, &y, &FitOptions::default()).unwrap();
            prop_assert_eq!(f, again);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn errors_are_multiples_of_one_over_n(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(&(ordinal_data(1),), |((s, y),)| {
            let Ok(f) = ordreg::fit(&s, &y, &FitOptions::default()) else {
                return Ok(());
            };
            let e = ordreg::misclassification_error(&f.model, &s, &y);
            let k = e * y.len() as f64;
            prop_assert!((k - k.round()).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&e));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn loadings_are_orthonormal_and_ordered(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(&(matrix(5..20, 1..9),), |(x,)| {
            let Ok((_, z)) = standardize(&x) else { return Ok(()) };
            let m = fit_pca(&z).unwrap();
            let k = m.dim();
            for i in 0..k {
                for j in 0..k {
                    let d: f64 = m
                        .loadings
                        .row(i)
                        .iter()
                        .zip(m.loadings.row(j))
                        .map(|(a, b)| a * b)
                        .sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((d - expected).abs() <= 1e-9);
                }
            }
            prop_assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(m.eigenvalues.iter().all(|&l| l >= -1e-12));
            prop_assert!((m.eigenvalues.iter().sum::<f64>() - k as f64).abs() <= 1e-9);
            prop_assert!(m.cumulative_ratio.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!((m.cumulative_ratio[k - 1] - 1.0).abs() <= 1e-12);
            let again = fit_pca(&z).unwrap();
            prop_assert_eq!(m.loadings.as_slice(), again.loadings.as_slice());
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn permuting_columns_permutes_loadings(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(&(matrix(8..20, 2..6), 1usize..5), |(x, rot)| {
            let Ok((_, z)) = standardize(&x) else { return Ok(()) };
            let k = x.ncols();
            let perm: Vec<usize> = (0..k).map(|j| (j + rot) % k).collect();
            let a = fit_pca(&z).unwrap();
            let b = fit_pca(&z.select_cols(&perm)).unwrap();
            for c in 0..k {
                prop_assert!((a.eigenvalues[c] - b.eigenvalues[c]).abs() <= 1e-9);
            }
            // compare only components with well separated eigenvalues
            for c in 0..k {
                let gap = (0..k)
                    .filter(|&o| o != c)
                    .map(|o| (a.eigenvalues[c] - a.eigenvalues[o]).abs())
                    .fold(f64::INFINITY, f64::min);
                if gap < 1e-3 {
                    continue;
                }
                let same = (0..k)
                    .map(|j| (b.loadings[(c, j)] - a.loadings[(c, perm[j])]).abs())
                    .fold(0.0, f64::max);
                let flip = (0..k)
                    .map(|j| (b.loadings[(c, j)] + a.loadings[(c, perm[j])]).abs())
                    .fold(0.0, f64::max);
                prop_assert!(same.min(flip) <= 1e-6);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn higher_threshold_never_selects_fewer_components(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(&(matrix(8..20, 1..8), 0.05f64..1.0, 0.05f64..1.0), |(x, t1, t2)| {
            let Ok((_, z)) = standardize(&x) else { return Ok(()) };
            let m = fit_pca(&z).unwrap();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(select_components(&m, lo, None).r <= select_components(&m, hi, None).r);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn correlation_is_symmetric_with_unit_diagonal(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(&(matrix(3..15, 1..7),), |(x,)| {
            let c = correlation_matrix(&x).unwrap();
            for i in 0..x.ncols() {
                for j in 0..x.ncols() {
                    prop_assert_eq!(c.get(i, j), c.get(j, i));
                    if let Some(v) = c.get(i, j) {
                        prop_assert!(v.abs() <= 1.0 + 1e-12);
                    }
                }
                if let Some(v) = c.get(i, i) {
                    prop_assert_eq!(v, 1.0);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn quantile_intervals_are_nested(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(&(prop::collection::vec(-1e3f64..1e3, 10..200),), |(samples,)| {
            let (a50, b50) = empirical_ci(&samples, 0.5).unwrap();
            let (a90, b90) = empirical_ci(&samples, 0.9).unwrap();
            let (a99, b99) = empirical_ci(&samples, 0.99).unwrap();
            prop_assert!(a99 <= a90 && a90 <= a50 && a50 <= b50 && b50 <= b90 && b90 <= b99);
            let mut sorted = samples.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assert_eq!(quantile_sorted(&sorted, 0.0), sorted[0]);
            prop_assert_eq!(quantile_sorted(&sorted, 1.0), *sorted.last().unwrap());
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn weekly_aggregation_ignores_row_order_and_scales(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(
            &(prop::collection::vec(0u32..10_000, 14 * 2), any::<u64>(), 1u32..50),
            |(values, seed, c)| {
                let start = NaiveDate::from_ymd_opt(2021, 3, 1).unwrap();
                let mut rows: Vec<(String, NaiveDate, f64)> = Vec::new();
                for (r, region) in ["East", "West"].iter().enumerate() {
                    for d in 0..14 {
                        rows.push((
                            region.to_string(),
                            start + Days::new(d),
                            values[r * 14 + d as usize] as f64,
                        ));
                    }
                }
                let csv_of = |rows: &[(String, NaiveDate, f64)], scale: f64| {
                    let mut s = String::from("date,region");
                    for i in 1..=16 {
                        s.push_str(&format!(",X{i}"));
                    }
                    s.push('\n');
                    for (region, date, v) in rows {
                        s.push_str(&format!("{date},{region}"));
                        for i in 0..16 {
                            let x = if i == 1 { v * scale } else { v + i as f64 };
                            s.push_str(&format!(",{x}"));
                        }
                        s.push('\n');
                    }
                    s
                };
                let labels = LabelSeries::new(
                    ["East", "West"]
                        .iter()
                        .flat_map(|r| {
                            (0..2).map(move |w| LabelEntry {
                                region: r.to_string(),
                                week_start: start + Days::new(7 * w),
                                week_end: start + Days::new(7 * w + 6),
                                level: if w == 0 { RiskLevel::L } else { RiskLevel::H },
                            })
                        })
                        .collect(),
                )
                .unwrap();
                let map = ColumnMap::identity();
                let agg = |csv: String| {
                    let (daily, _) = parse_daily_csv(csv.as_bytes(), &map).unwrap();
                    aggregate_weekly(&daily, &labels, Statistic::Mean).unwrap().0
                };
                let base = agg(csv_of(&rows, 1.0));
                let mut shuffled = rows.clone();
                let mut state = seed;
                for i in (1..shuffled.len()).rev() {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    shuffled.swap(i, (state >> 33) as usize % (i + 1));
                }
                prop_assert_eq!(&base, &agg(csv_of(&shuffled, 1.0)));
                // powers of two scale exactly; other factors to within rounding
                let scaled = agg(csv_of(&rows, c as f64));
                let pow2 = agg(csv_of(&rows, 64.0));
                for ((a, b), p) in base.iter().zip(&scaled).zip(&pow2) {
                    for ((wa, wb), wp) in a.weeks.iter().zip(&b.weeks).zip(&p.weeks) {
                        prop_assert_eq!(wa.x[1] * 64.0, wp.x[1]);
                        let want = wa.x[1] * c as f64;
                        prop_assert!((want - wb.x[1]).abs() <= 2.0 * f64::EPSILON * want.abs());
                    }
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

pub fn daily_panel_csv_round_trips(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(
            &(prop::collection::vec(0u32..1_000_000, 3 * 16 * 2), any::<bool>()),
            |(values, cents)| {
                let dates: Vec<NaiveDate> = (0..3)
                    .map(|d| NaiveDate::from_ymd_opt(2021, 5, 10).unwrap() + Days::new(d))
                    .collect();
                let series = (0..2)
                    .map(|r| {
                        (0..3)
                            .map(|d| {
                                let mut row = [0.0; INDICATOR_COUNT];
                                for (i, v) in row.iter_mut().enumerate() {
                                    let raw = values[(r * 3 + d) * 16 + i] as f64;
                                    *v = if cents { raw / 100.0 } else { raw };
                                }
                                row
                            })
                            .collect()
                    })
                    .collect();
                let panel = DailyPanel::new(vec!["A".into(), "B".into()], dates, series).unwrap();
                let mut buf = Vec::new();
                panel.write_csv(&mut buf).unwrap();
                let (back, _) = parse_daily_csv(buf.as_slice(), &ColumnMap::identity()).unwrap();
                prop_assert_eq!(&panel, &back);
                let mut buf2 = Vec::new();
                back.write_csv(&mut buf2).unwrap();
                prop_assert_eq!(buf, buf2);
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

pub fn population_shares_sum_to_coverage(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(
            &(
                prop::collection::vec(1u64..10_000_000, 2..21),
                prop::collection::vec(prop::option::of(level()), 21),
            ),
            |(pops, levels)| {
                let start = NaiveDate::from_ymd_opt(2021, 4, 5).unwrap();
                let mut populations = BTreeMap::new();
                let mut entries = Vec::new();
                for (i, &p) in pops.iter().enumerate() {
                    let name = format!("R{i:02}");
                    populations.insert(name.clone(), p);
                    if let Some(l) = levels[i] {
                        entries.push(LabelEntry {
                            region: name,
                            week_start: start,
                            week_end: start + Days::new(6),
                            level: l,
                        });
                    }
                }
                if entries.is_empty() {
                    return Ok(());
                }
                let weeks =
                    population_share_by_colour(&LabelSeries::new(entries.clone()).unwrap(), &populations).unwrap();
                let total: u64 = pops.iter().sum();
                let covered: u64 = entries.iter().map(|e| populations[&e.region]).sum();
                for w in weeks {
                    prop_assert!((w.shares.iter().sum::<f64>() - w.covered).abs() <= 1e-12);
                    prop_assert!((w.covered - covered as f64 / total as f64).abs() <= 1e-12);
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

pub fn search_is_identical_across_worker_counts(config: ProptestConfig) -> Result<(), String> {
    TestRunner::new(config)
        .run(&(0u64..1000,), |(seed,)| {
            let (x, y) = super::four_variable_region(seed);
            let data = RegionData {
                region: "Synthetic".into(),
                x,
                y,
            };
            let masks = enumerate_subsets(4);
            let cfg = SearchConfig::default();
            let one = search_masks(&data, &masks, &cfg, 1).unwrap();
            let many = search_masks(&data, &masks, &cfg, 8).unwrap();
            prop_assert_eq!(&one.best, &many.best);
            prop_assert_eq!(one.records.len(), 15);
            for (a, b) in one.records.iter().zip(&many.records) {
                prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
            }
            for r in one.records.iter().filter(|r| r.valid) {
                prop_assert!(one.best.misclassified <= r.misclassified);
                let k = r.error * r.n_weeks as f64;
                prop_assert!((k - k.round()).abs() < 1e-9);
            }
            // restricting the candidate masks never improves the optimum
            let fewer = search_masks(&data, &masks[..7], &cfg, 1).unwrap();
            prop_assert!(one.best.misclassified <= fewer.best.misclassified);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Every property with the number of cases it runs.
pub type Property = fn(ProptestConfig) -> Result<(), String>;

pub const ALL: &[(&str, Property, u32)] = &[
    ("probabilities_lie_on_the_simplex", probabilities_lie_on_the_simplex, 64),
    (
        "translation_is_absorbed_by_intercepts",
        translation_is_absorbed_by_intercepts,
        64,
    ),
    (
        "newton_descent_never_raises_the_objective",
        newton_descent_never_raises_the_objective,
        64,
    ),
    (
        "errors_are_multiples_of_one_over_n",
        errors_are_multiples_of_one_over_n,
        64,
    ),
    (
        "loadings_are_orthonormal_and_ordered",
        loadings_are_orthonormal_and_ordered,
        64,
    ),
    (
        "permuting_columns_permutes_loadings",
        permuting_columns_permutes_loadings,
        64,
    ),
    (
        "higher_threshold_never_selects_fewer_components",
        higher_threshold_never_selects_fewer_components,
        64,
    ),
    (
        "correlation_is_symmetric_with_unit_diagonal",
        correlation_is_symmetric_with_unit_diagonal,
        64,
    ),
    ("quantile_intervals_are_nested", quantile_intervals_are_nested, 64),
    (
        "weekly_aggregation_ignores_row_order_and_scales",
        weekly_aggregation_ignores_row_order_and_scales,
        64,
    ),
    ("daily_panel_csv_round_trips", daily_panel_csv_round_trips, 64),
    (
        "population_shares_sum_to_coverage",
        population_shares_sum_to_coverage,
        64,
    ),
    (
        "search_is_identical_across_worker_counts",
        search_is_identical_across_worker_counts,
        6,
    ),
];
