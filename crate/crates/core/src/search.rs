//! Exhaustive indicator-subset search.
//!
//! Every non-empty subset of the sixteen indicators goes through the same
//! pipeline: standardize, PCA, keep the leading components reaching the
//! variance threshold, fit the ordinal model on their scores and count
//! misclassified weeks. The best subset per region is the minimum of a total
//! order, so the result does not depend on evaluation order or worker count.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::ordreg::{self, FitOptions, FitResult};
use crate::panel::{IndicatorId, RiskLevel, WeeklyPanel, INDICATOR_COUNT};
use crate::pca::{self, FrozenTransform};

/// Non-empty set of indicators, bit `i` standing for `X(i+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub struct SubsetMask(u16);

impl SubsetMask {
    pub fn new(bits: u16) -> Option<Self> {
        (bits != 0).then_some(SubsetMask(bits))
    }

    pub fn from_indicators(ids: impl IntoIterator<Item = IndicatorId>) -> Option<Self> {
        SubsetMask::new(ids.into_iter().fold(0u16, |b, id| b | (1 << id.position())))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn n_vars(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, id: IndicatorId) -> bool {
        self.0 & (1 << id.position()) != 0
    }

    /// Column positions, ascending.
    pub fn positions(self) -> Vec<usize> {
        (0..INDICATOR_COUNT).filter(|i| self.0 & (1 << i) != 0).collect()
    }

    pub fn indicators(self) -> impl Iterator<Item = IndicatorId> {
        IndicatorId::all().filter(move |id| self.contains(*id))
    }
}

impl TryFrom<u16> for SubsetMask {
    type Error = String;
    fn try_from(bits: u16) -> Result<Self, String> {
        SubsetMask::new(bits).ok_or_else(|| "subset mask must be non-zero".to_string())
    }
}

impl From<SubsetMask> for u16 {
    fn from(m: SubsetMask) -> u16 {
        m.0
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.indicators().map(|id| id.to_string()).collect();
        f.write_str(&names.join("+"))
    }
}

/// All non-empty subsets of the first `p` indicators, ascending.
pub fn enumerate_subsets(p: usize) -> Vec<SubsetMask> {
    assert!((1..=INDICATOR_COUNT).contains(&p), "p must be in 1..=16");
    (1..(1u32 << p)).map(|b| SubsetMask(b as u16)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub threshold: f64,
    pub cap: Option<usize>,
    pub fit: FitOptions,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            threshold: pca::DEFAULT_THRESHOLD,
            cap: None,
            fit: FitOptions::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!("threshold {} outside (0, 1]", self.threshold)));
        }
        if self.cap == Some(0) {
            return Err(Error::Config("component cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one (region, subset) trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub region: String,
    pub mask: SubsetMask,
    pub n_vars: usize,
    /// Selected component count; 0 when the subset is invalid before PCA.
    pub r: usize,
    pub cum_var: f64,
    pub threshold_met: bool,
    pub fit: Option<FitResult>,
    pub misclassified: usize,
    pub n_weeks: usize,
    /// `misclassified / n_weeks`; NaN for invalid records.
    pub error: f64,
    pub valid: bool,
    pub invalid_reason: Option<String>,
}

impl EvaluationRecord {
    fn invalid(region: &str, mask: SubsetMask, n_weeks: usize, r: usize, cum_var: f64, reason: String) -> Self {
        EvaluationRecord {
            region: region.to_owned(),
            mask,
            n_vars: mask.n_vars(),
            r,
            cum_var,
            threshold_met: false,
            fit: None,
            misclassified: 0,
            n_weeks,
            error: f64::NAN,
            valid: false,
            invalid_reason: Some(reason),
        }
    }

    pub fn converged(&self) -> bool {
        self.fit.as_ref().is_some_and(|f| f.converged)
    }

    /// Total order used to pick the best record: fewer misclassified weeks,
    /// then converged before not, fewer variables, fewer components, smaller
    /// mask. Invalid records sort last.
    pub fn selection_cmp(&self, other: &Self) -> Ordering {
        let key = |r: &Self| (!r.valid, r.misclassified, !r.converged(), r.n_vars, r.r, r.mask);
        key(self).cmp(&key(other))
    }
}

/// Weekly indicators and labels of one region, ready for repeated trials.
#[derive(Debug, Clone)]
pub struct RegionData {
    pub region: String,
    pub x: Matrix,
    pub y: Vec<RiskLevel>,
}

impl RegionData {
    pub fn from_panel(panel: &WeeklyPanel) -> Self {
        RegionData {
            region: panel.region.clone(),
            x: panel.matrix(),
            y: panel.labels(),
        }
    }

    pub fn n_weeks(&self) -> usize {
        self.y.len()
    }

    fn check(&self) -> Result<()> {
        if self.n_weeks() < 3 {
            return Err(Error::TooFewRows {
                needed: 3,
                got: self.n_weeks(),
            });
        }
        if self.y.iter().all(|&l| l == self.y[0]) {
            return Err(Error::SingleClass);
        }
        Ok(())
    }
}

/// Runs the pipeline for one subset, also returning the fitted transform for
/// valid records.
pub fn evaluate_subset_detailed(
    data: &RegionData,
    mask: SubsetMask,
    cfg: &SearchConfig,
) -> (EvaluationRecord, Option<FrozenTransform>) {
    let n = data.n_weeks();
    let x = data.x.select_cols(&mask.positions());
    let (scaler, z) = match pca::standardize(&x) {
        Ok(v) => v,
        Err(Error::ZeroVariance(j)) => {
            let id = mask.indicators().nth(j).expect("column of mask");
            let reason = format!("zero variance in {id}");
            return (EvaluationRecord::invalid(&data.region, mask, n, 0, 0.0, reason), None);
        }
        Err(e) => {
            return (
                EvaluationRecord::invalid(&data.region, mask, n, 0, 0.0, e.to_string()),
                None,
            )
        }
    };
    let model = match pca::fit_pca(&z) {
        Ok(m) => m,
        Err(e) => {
            return (
                EvaluationRecord::invalid(&data.region, mask, n, 0, 0.0, e.to_string()),
                None,
            )
        }
    };
    let sel = pca::select_components(&model, cfg.threshold, cfg.cap);
    let cum_var = model.cumulative_ratio[sel.r - 1];

    let mut scores = Matrix::zeros(n, sel.r);
    for (i, zr) in z.rows().enumerate() {
        for (c, s) in scores.row_mut(i).iter_mut().enumerate() {
            *s = dot(model.loadings.row(c), zr);
        }
    }
    let fit = match ordreg::fit(&scores, &data.y, &cfg.fit) {
        Ok(f) => f,
        Err(e) => {
            return (
                EvaluationRecord::invalid(&data.region, mask, n, sel.r, cum_var, e.to_string()),
                None,
            )
        }
    };
    let misclassified = ordreg::misclassified(&fit.model, &scores, &data.y);
    let record = EvaluationRecord {
        region: data.region.clone(),
        mask,
        n_vars: mask.n_vars(),
        r: sel.r,
        cum_var,
        threshold_met: sel.threshold_met,
        fit: Some(fit),
        misclassified,
        n_weeks: n,
        error: misclassified as f64 / n as f64,
        valid: true,
        invalid_reason: None,
    };
    let transform = FrozenTransform {
        scaler,
        pca: model,
        r: sel.r,
    };
    (record, Some(transform))
}

pub fn evaluate_subset(data: &RegionData, mask: SubsetMask, cfg: &SearchConfig) -> EvaluationRecord {
    evaluate_subset_detailed(data, mask, cfg).0
}

#[derive(Debug, Clone)]
pub struct RegionSearch {
    pub best: EvaluationRecord,
    pub transform: FrozenTransform,
    /// One record per mask, in mask order.
    pub records: Vec<EvaluationRecord>,
}

/// Evaluates `masks` for one region on `workers` threads and picks the best.
pub fn search_masks(
    data: &RegionData,
    masks: &[SubsetMask],
    cfg: &SearchConfig,
    workers: usize,
) -> Result<RegionSearch> {
    cfg.validate()?;
    data.check()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let records: Vec<EvaluationRecord> =
        pool.install(|| masks.par_iter().map(|&m| evaluate_subset(data, m, cfg)).collect());
    let best = records
        .iter()
        .filter(|r| r.valid)
        .min_by(|a, b| a.selection_cmp(b))
        .cloned()
        .ok_or_else(|| Error::AllSubsetsInvalid(data.region.clone()))?;
    let (again, transform) = evaluate_subset_detailed(data, best.mask, cfg);
    debug_assert_eq!(again, best);
    Ok(RegionSearch {
        best,
        transform: transform.expect("best record is valid"),
        records,
    })
}

/// Full 65,535-subset search for one region.
pub fn search_region(panel: &WeeklyPanel, cfg: &SearchConfig, workers: usize) -> Result<RegionSearch> {
    let data = RegionData::from_panel(panel);
    search_masks(&data, &enumerate_subsets(INDICATOR_COUNT), cfg, workers)
}

/// Counts of valid records by selected component count, bucketed 1, 2, 3, 4+.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcCountTally {
    pub counts: [u64; 4],
}

impl PcCountTally {
    pub fn add(&mut self, record: &EvaluationRecord) {
        if record.valid && record.r > 0 {
            self.counts[record.r.min(4) - 1] += 1;
        }
    }

    pub fn merge(&mut self, other: &PcCountTally) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn fractions(&self) -> [f64; 4] {
        let t = self.total().max(1) as f64;
        self.counts.map(|c| c as f64 / t)
    }
}

/// Fraction of valid records selecting 1, 2, 3 and 4+ components.
pub fn pc_count_distribution<'a>(records: impl IntoIterator<Item = &'a EvaluationRecord>) -> [f64; 4] {
    let mut tally = PcCountTally::default();
    for r in records {
        tally.add(r);
    }
    tally.fractions()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NvarsSummary {
    pub n_vars: usize,
    pub count: usize,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Population standard deviation.
    pub std_dev: Option<f64>,
}

/// Error statistics of valid records grouped by subset size, one row per size 1..=16.
pub fn error_by_nvars<'a>(records: impl IntoIterator<Item = &'a EvaluationRecord>) -> Vec<NvarsSummary> {
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); INDICATOR_COUNT];
    for r in records.into_iter().filter(|r| r.valid) {
        groups[r.n_vars - 1].push(r.error);
    }
    groups
        .iter()
        .enumerate()
        .map(|(i, errs)| {
            if errs.is_empty() {
                return NvarsSummary {
                    n_vars: i + 1,
                    count: 0,
                    mean: None,
                    min: None,
                    max: None,
                    std_dev: None,
                };
            }
            let n = errs.len() as f64;
            let mean = errs.iter().sum::<f64>() / n;
            let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
            NvarsSummary {
                n_vars: i + 1,
                count: errs.len(),
                mean: Some(mean),
                min: errs.iter().copied().reduce(f64::min),
                max: errs.iter().copied().reduce(f64::max),
                std_dev: Some(var.sqrt()),
            }
        })
        .collect()
}

/// Per indicator, the fraction of best models that include it.
pub fn inclusion_percentages<'a>(best: impl IntoIterator<Item = &'a EvaluationRecord>) -> [f64; INDICATOR_COUNT] {
    let mut counts = [0usize; INDICATOR_COUNT];
    let mut total = 0usize;
    for rec in best {
        total += 1;
        for id in rec.mask.indicators() {
            counts[id.position()] += 1;
        }
    }
    counts.map(|c| c as f64 / total.max(1) as f64)
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        "NA".into()
    }
}

/// Compact per-record CSV: `mask,n_vars,r,cum_var,misclassified,error,valid,converged,separation,threshold_met,reason`.
pub fn write_records_csv<W: Write>(records: &[EvaluationRecord], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record([
        "mask",
        "n_vars",
        "r",
        "cum_var",
        "misclassified",
        "error",
        "valid",
        "converged",
        "separation",
        "threshold_met",
        "reason",
    ])?;
    for r in records {
        let sep = r.fit.as_ref().is_some_and(|f| f.separation_flag);
        out.write_record([
            r.mask.bits().to_string(),
            r.n_vars.to_string(),
            r.r.to_string(),
            fmt_f64(r.cum_var),
            r.misclassified.to_string(),
            fmt_f64(r.error),
            (r.valid as u8).to_string(),
            (r.converged() as u8).to_string(),
            (sep as u8).to_string(),
            (r.threshold_met as u8).to_string(),
            r.invalid_reason.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
