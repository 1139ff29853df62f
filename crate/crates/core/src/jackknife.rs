//! Delete-one-day-per-week jackknife for a selected regional model.
//!
//! Each iteration removes one calendar day from every label window (the
//! same day for all regions), re-aggregates the weeks, projects them through
//! the standardization and loadings fitted on the full data, and refits only
//! the ordinal model.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordreg::{self, FitOptions};
use crate::panel::{aggregate_weekly, DailyPanel, LabelSeries, Statistic};
use crate::pca::FrozenTransform;
use crate::search::EvaluationRecord;

pub const DEFAULT_ITERATIONS: usize = 1000;

/// Quantile levels reported for every coefficient.
pub const SUMMARY_QUANTILES: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which day each label window loses in each iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResamplePlan {
    pub seed: u64,
    pub iterations: usize,
    /// Distinct label windows.
    pub weeks: Vec<(NaiveDate, NaiveDate)>,
}

impl ResamplePlan {
    pub fn new(seed: u64, iterations: usize, labels: &LabelSeries) -> Self {
        ResamplePlan {
            seed,
            iterations,
            weeks: labels.windows(),
        }
    }

    /// Index into the `n_days` available days of a window. A pure function of
    /// the seed, the iteration and the window start.
    pub fn choice(&self, iteration: usize, week_start: NaiveDate, n_days: usize) -> usize {
        let key = splitmix64(splitmix64(self.seed ^ splitmix64(iteration as u64)) ^ week_start.to_epoch_days() as u64);
        ChaCha8Rng::seed_from_u64(key).random_range(0..n_days)
    }

    /// Calendar days removed in `iteration`.
    pub fn removed_days(&self, daily: &DailyPanel, iteration: usize) -> Result<BTreeSet<NaiveDate>> {
        let mut out = BTreeSet::new();
        for &(start, end) in &self.weeks {
            let range = daily.date_range(start, end);
            if range.is_empty() {
                continue;
            }
            if range.len() < 2 {
                return Err(Error::WeekTooShort(start));
            }
            let pick = self.choice(iteration, start, range.len());
            out.insert(daily.dates()[range.start + pick]);
        }
        Ok(out)
    }
}

/// Daily panel with the planned day of every label window removed.
pub fn resample_days(daily: &DailyPanel, plan: &ResamplePlan, iteration: usize) -> Result<DailyPanel> {
    Ok(daily.without_dates(&plan.removed_days(daily, iteration)?))
}

/// Empirical distributions of the refitted coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDistributions {
    pub region: String,
    /// `eta1`, `eta2`, `beta1`, ...
    pub parameters: Vec<String>,
    /// One vector per parameter, iteration order, converged refits only.
    pub samples: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: usize,
    pub non_converged: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub full_data: f64,
    /// Values at [`SUMMARY_QUANTILES`].
    pub quantiles: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
}

impl CoefficientDistributions {
    /// Quantile summary per parameter, alongside the full-data estimate.
    pub fn summarize(&self, full_data: &[f64]) -> Vec<ParameterSummary> {
        self.parameters
            .iter()
            .zip(&self.samples)
            .zip(full_data)
            .map(|((name, s), &full)| {
                let mut sorted = s.clone();
                sorted.sort_by(f64::total_cmp);
                let n = sorted.len().max(1) as f64;
                let mean = sorted.iter().sum::<f64>() / n;
                let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                ParameterSummary {
                    name: name.clone(),
                    full_data: full,
                    quantiles: SUMMARY_QUANTILES.iter().map(|&p| quantile_sorted(&sorted, p)).collect(),
                    mean,
                    std_dev: var.sqrt(),
                }
            })
            .collect()
    }
}

pub fn parameter_names(r: usize) -> Vec<String> {
    let mut v = vec!["eta1".to_string(), "eta2".to_string()];
    v.extend((1..=r).map(|i| format!("beta{i}")));
    v
}

/// Runs the jackknife for one region's selected model.
#[allow(clippy::too_many_arguments)]
pub fn jackknife_region(
    best: &EvaluationRecord,
    transform: &FrozenTransform,
    daily: &DailyPanel,
    labels: &LabelSeries,
    statistic: Statistic,
    plan: &ResamplePlan,
    fit_opts: &FitOptions,
    workers: usize,
) -> Result<CoefficientDistributions> {
    if !best.valid {
        return Err(Error::Config(format!(
            "region '{}': selected record is not valid",
            best.region
        )));
    }
    let mut warnings = Vec::new();
    if !best.converged() {
        warnings.push(format!(
            "region '{}': full-data fit did not converge; resampled fits may not either",
            best.region
        ));
    }
    let region_labels = LabelSeries::new(labels.for_region(&best.region).cloned().collect())?;
    let cols = best.mask.positions();

    let refit = |iteration: usize| -> Result<Option<Vec<f64>>> {
        let resampled = resample_days(daily, plan, iteration)?;
        let (panels, _) = aggregate_weekly(&resampled, &region_labels, statistic)?;
        let panel = &panels[0];
        let x = panel.matrix().select_cols(&cols);
        let scores = transform.project(&x)?;
        let fit = match ordreg::fit(&scores, &panel.labels(), fit_opts) {
            Ok(f) => f,
            Err(Error::SingleClass | Error::Unidentifiable { .. } | Error::NonFinite { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        if !fit.converged {
            return Ok(None);
        }
        let mut params = vec![fit.model.eta[0], fit.model.eta[1]];
        params.extend(&fit.model.beta);
        Ok(Some(params))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<Result<Option<Vec<f64>>>> =
        pool.install(|| (0..plan.iterations).into_par_iter().map(refit).collect());

    let names = parameter_names(transform.r);
    let mut samples = vec![Vec::new(); names.len()];
    let mut non_converged = 0;
    for res in results {
        match res? {
            Some(p) => {
                for (s, v) in samples.iter_mut().zip(p) {
                    s.push(v);
                }
            }
            None => non_converged += 1,
        }
    }
    if non_converged * 2 > plan.iterations {
        return Err(Error::UnusableDistribution {
            failed: non_converged,
            iterations: plan.iterations,
        });
    }
    Ok(CoefficientDistributions {
        region: best.region.clone(),
        parameters: names,
        converged: plan.iterations - non_converged,
        samples,
        iterations: plan.iterations,
        non_converged,
        warnings,
    })
}

/// Linear interpolation between order statistics at `h = (n - 1) p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Central empirical interval holding `level` of the samples.
pub fn empirical_ci(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 10 {
        return Err(Error::TooFewSamples {
            needed: 10,
            got: samples.len(),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("interval level {level} outside (0, 1)")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail)))
}

/// Equal-width histogram of one sample vector: `(bin_lo, bin_hi, count)`.
pub fn histogram(samples: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if samples.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![(lo, hi, samples.len())];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in samples {
        let b = (((s - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}
