use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};
use crate::linalg::Matrix;
use crate::panel::daily::{parse_date, DailyPanel};
use crate::panel::indicator::{IndicatorId, RiskLevel, INDICATOR_COUNT};
use crate::panel::labels::LabelSeries;

/// Weeks with fewer available days than this are rejected.
pub const MIN_DAYS_PER_WEEK: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    #[default]
    Mean,
    Sum,
}

impl FromStr for Statistic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mean" => Ok(Statistic::Mean),
            "sum" => Ok(Statistic::Sum),
            other => Err(format!("unknown statistic '{other}' (expected mean or sum)")),
        }
    }
}

impl std::fmt::Display for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Statistic::Mean => "mean",
            Statistic::Sum => "sum",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Week {
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Number of daily rows aggregated.
    pub days: usize,
    pub x: [f64; INDICATOR_COUNT],
    pub y: RiskLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyPanel {
    pub region: String,
    pub statistic: Statistic,
    pub weeks: Vec<Week>,
}

impl WeeklyPanel {
    pub fn len(&self) -> usize {
        self.weeks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weeks.is_empty()
    }

    pub fn labels(&self) -> Vec<RiskLevel> {
        self.weeks.iter().map(|w| w.y).collect()
    }

    /// weeks × 16 matrix of aggregated indicators.
    pub fn matrix(&self) -> Matrix {
        let rows: Vec<&[f64]> = self.weeks.iter().map(|w| &w.x[..]).collect();
        if rows.is_empty() {
            return Matrix::zeros(0, INDICATOR_COUNT);
        }
        Matrix::from_rows(&rows)
    }

    /// Writes `week_start,week_end,days,level,X1..X16`. Floats use the
    /// shortest representation that parses back to the same value.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header: Vec<String> = ["week_start", "week_end", "days", "level"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(IndicatorId::all().map(|id| id.to_string()));
        out.write_record(&header)?;
        for wk in &self.weeks {
            let mut rec = vec![
                wk.start.to_string(),
                wk.end.to_string(),
                wk.days.to_string(),
                wk.y.to_string(),
            ];
            rec.extend(wk.x.iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, region: &str, statistic: Statistic) -> Result<WeeklyPanel> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = 4 + INDICATOR_COUNT;
        if headers.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: headers.len(),
            });
        }
        let mut weeks = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |i: usize, expected: &'static str| Error::Parse {
                location: Location {
                    line,
                    column: Some(headers[i].to_owned()),
                },
                value: rec[i].to_owned(),
                expected,
            };
            let start = parse_date(&rec[0]).ok_or_else(|| bad(0, "date"))?;
            let end = parse_date(&rec[1]).ok_or_else(|| bad(1, "date"))?;
            let days = rec[2].parse().map_err(|_| bad(2, "integer"))?;
            let y = rec[3].parse().map_err(|_| bad(3, "risk level"))?;
            let mut x = [0.0; INDICATOR_COUNT];
            for (j, v) in x.iter_mut().enumerate() {
                *v = rec[4 + j].parse().map_err(|_| bad(4 + j, "number"))?;
            }
            weeks.push(Week { start, end, days, x, y });
        }
        Ok(WeeklyPanel {
            region: region.to_owned(),
            statistic,
            weeks,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedWeek {
    pub region: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub days: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationReport {
    pub rejected: Vec<RejectedWeek>,
}

/// Aggregates daily values over each labelled window, one panel per
/// labelled region (sorted by region name).
pub fn aggregate_weekly(
    daily: &DailyPanel,
    labels: &LabelSeries,
    statistic: Statistic,
) -> Result<(Vec<WeeklyPanel>, AggregationReport)> {
    let mut report = AggregationReport::default();
    let mut panels = Vec::new();
    for region in labels.regions() {
        let r = daily
            .region_index(region)
            .ok_or_else(|| Error::UnknownRegion(region.to_owned()))?;
        let series = daily.series(r);
        let mut weeks = Vec::new();
        for label in labels.for_region(region) {
            let range = daily.date_range(label.week_start, label.week_end);
            let days = range.len();
            if days == 0 {
                return Err(Error::EmptyWindow {
                    region: region.to_owned(),
                    start: label.week_start,
                    end: label.week_end,
                });
            }
            if days < MIN_DAYS_PER_WEEK {
                report.rejected.push(RejectedWeek {
                    region: region.to_owned(),
                    start: label.week_start,
                    end: label.week_end,
                    days,
                });
                continue;
            }
            let mut x = [0.0; INDICATOR_COUNT];
            for day in &series[range] {
                for (acc, v) in x.iter_mut().zip(day) {
                    *acc += v;
                }
            }
            if statistic == Statistic::Mean {
                for acc in &mut x {
                    *acc /= days as f64;
                }
            }
            weeks.push(Week {
                start: label.week_start,
                end: label.week_end,
                days,
                x,
                y: label.level,
            });
        }
        panels.push(WeeklyPanel {
            region: region.to_owned(),
            statistic,
            weeks,
        });
    }
    Ok((panels, report))
}
