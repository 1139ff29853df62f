//! Seeded synthetic regions for tests, benchmarks and demonstrations.
//!
//! Each region follows a weekly latent epidemic intensity. Indicators are
//! noisy positive functions of three latent factors, so subsets of them show
//! the strong collinearity typical of surveillance counts, and weekly labels
//! are noisy tertiles of the first factor.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::panel::{DailyPanel, LabelEntry, LabelSeries, RiskLevel, INDICATOR_COUNT};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub regions: Vec<String>,
    pub weeks: usize,
    /// Monday of the first labelled week.
    pub first_day: NaiveDate,
    /// Relative day-to-day noise inside a week.
    pub daily_noise: f64,
    /// Standard deviation of the noise added to the latent before labelling.
    pub label_noise: f64,
    /// Indicators (1-based) held at a constant value for every day.
    pub constant: Vec<usize>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 1,
            regions: vec!["Alpha".into()],
            weeks: 48,
            first_day: NaiveDate::from_ymd_opt(2021, 1, 4).expect("valid date"),
            daily_noise: 0.05,
            label_noise: 0.4,
            constant: Vec::new(),
        }
    }
}

impl SyntheticSpec {
    pub fn with_regions(mut self, n: usize) -> Self {
        self.regions = (1..=n).map(|i| format!("Region {i:02}")).collect();
        self
    }
}

/// Daily panel covering exactly the labelled weeks, plus the labels.
pub fn generate(spec: &SyntheticSpec) -> Result<(DailyPanel, LabelSeries)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let days = spec.weeks * 7;
    let dates: Vec<NaiveDate> = (0..days as u64).map(|d| spec.first_day + Days::new(d)).collect();

    // loadings of each indicator on the three latent factors
    let mut weights = [[0.0f64; 3]; INDICATOR_COUNT];
    for w in weights.iter_mut() {
        w[0] = rng.random_range(0.2..1.4);
        w[1] = rng.random_range(-1.0..1.0);
        w[2] = rng.random_range(-0.6..0.6);
    }

    let mut values = Vec::with_capacity(spec.regions.len());
    let mut entries = Vec::new();
    for region in &spec.regions {
        let scale: f64 = rng.random_range(0.5..3.0);
        let mut level = [0.0f64; 3];
        let mut weekly = Vec::with_capacity(spec.weeks);
        for w in 0..spec.weeks {
            let phase = w as f64 / spec.weeks as f64 * std::f64::consts::TAU;
            level[0] = 0.7 * level[0] + 0.5 * std.sample(&mut rng) + 0.8 * phase.sin();
            level[1] = 0.8 * level[1] + 0.4 * std.sample(&mut rng);
            level[2] = 0.5 * level[2] + 0.3 * std.sample(&mut rng);
            weekly.push(level);
        }

        let mut tagged: Vec<f64> = weekly
            .iter()
            .map(|l| l[0] + spec.label_noise * std.sample(&mut rng))
            .collect();
        let mut sorted = tagged.clone();
        sorted.sort_by(f64::total_cmp);
        let cut = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];
        let (lo, hi) = (cut(1.0 / 3.0), cut(2.0 / 3.0));
        for (w, t) in tagged.iter_mut().enumerate() {
            let level = if *t <= lo {
                RiskLevel::L
            } else if *t <= hi {
                RiskLevel::M
            } else {
                RiskLevel::H
            };
            let start = dates[w * 7];
            entries.push(LabelEntry {
                region: region.clone(),
                week_start: start,
                week_end: start + Days::new(6),
                level,
            });
        }

        let mut series = Vec::with_capacity(days);
        for d in 0..days {
            let l = weekly[d / 7];
            let mut row = [0.0; INDICATOR_COUNT];
            for (j, v) in row.iter_mut().enumerate() {
                let signal = weights[j].iter().zip(&l).map(|(a, b)| a * b).sum::<f64>();
                let noise = spec.daily_noise * std.sample(&mut rng);
                let base = 100.0 * (j + 1) as f64 * scale;
                *v = if spec.constant.contains(&(j + 1)) {
                    base
                } else {
                    (base * (0.5 * signal + noise).exp()).round()
                };
            }
            series.push(row);
        }
        values.push(series);
    }
    let daily = DailyPanel::new(spec.regions.clone(), dates, values)?;
    Ok((daily, LabelSeries::new(entries)?))
}
