use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::panel::indicator::RiskLevel;
use crate::panel::labels::LabelSeries;

/// Pearson correlations; `None` where a column is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    size: usize,
    entries: Vec<Option<f64>>,
}

impl CorrelationMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries[i * self.size + j]
    }
}

/// Column-wise Pearson correlation of `rows` (observations × variables).
pub fn correlation_matrix(rows: &Matrix) -> Result<CorrelationMatrix> {
    let n = rows.nrows();
    if n < 3 {
        return Err(Error::TooFewRows { needed: 3, got: n });
    }
    let k = rows.ncols();
    let means: Vec<f64> = (0..k)
        .map(|j| rows.rows().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cross = Matrix::zeros(k, k);
    for r in rows.rows() {
        for i in 0..k {
            let di = r[i] - means[i];
            for j in i..k {
                cross[(i, j)] += di * (r[j] - means[j]);
            }
        }
    }
    let mut entries = vec![None; k * k];
    for i in 0..k {
        for j in i..k {
            let (sii, sjj) = (cross[(i, i)], cross[(j, j)]);
            if sii <= 0.0 || sjj <= 0.0 {
                continue;
            }
            let c = if i == j {
                1.0
            } else {
                (cross[(i, j)] / (sii.sqrt() * sjj.sqrt())).clamp(-1.0, 1.0)
            };
            entries[i * k + j] = Some(c);
            entries[j * k + i] = Some(c);
        }
    }
    Ok(CorrelationMatrix { size: k, entries })
}

/// Population shares of the three levels for one label window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekShare {
    pub week_start: NaiveDate,
    pub week_end: NaiveDate,
    /// Indexed by [`RiskLevel::index`].
    pub shares: [f64; 3],
    /// Fraction of the total population whose region is labelled this week.
    pub covered: f64,
}

/// Per label window, the fraction of the total population living in
/// regions at each level. A region counts toward a window when one of its
/// labels contains the window's first day.
pub fn population_share_by_colour(labels: &LabelSeries, populations: &BTreeMap<String, u64>) -> Result<Vec<WeekShare>> {
    for region in labels.regions() {
        match populations.get(region) {
            Some(p) if *p > 0 => {}
            _ => return Err(Error::MissingPopulation(region.to_owned())),
        }
    }
    let total: f64 = populations.values().map(|&p| p as f64).sum();
    let mut out = Vec::new();
    for (start, end) in labels.windows() {
        let mut by_level = [0u64; 3];
        for e in labels.entries().iter().filter(|e| e.contains(start)) {
            by_level[e.level.index()] += populations[&e.region];
        }
        let shares = by_level.map(|p| p as f64 / total);
        let covered = by_level.iter().sum::<u64>() as f64 / total;
        out.push(WeekShare {
            week_start: start,
            week_end: end,
            shares,
            covered,
        });
    }
    Ok(out)
}

pub fn share_of(week: &WeekShare, level: RiskLevel) -> f64 {
    week.shares[level.index()]
}
