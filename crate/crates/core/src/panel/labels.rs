use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};
use crate::panel::daily::parse_date;
use crate::panel::indicator::RiskLevel;

/// What a colour word maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColourTarget {
    #[serde(rename = "L")]
    Low,
    #[serde(rename = "M")]
    Medium,
    #[serde(rename = "H")]
    High,
    #[serde(rename = "drop")]
    Drop,
}

impl ColourTarget {
    fn level(self) -> Option<RiskLevel> {
        match self {
            ColourTarget::Low => Some(RiskLevel::L),
            ColourTarget::Medium => Some(RiskLevel::M),
            ColourTarget::High => Some(RiskLevel::H),
            ColourTarget::Drop => None,
        }
    }
}

/// Case-insensitive colour word → level mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColourMap(BTreeMap<String, ColourTarget>);

impl Default for ColourMap {
    fn default() -> Self {
        ColourMap::from_pairs([
            ("yellow", ColourTarget::Low),
            ("orange", ColourTarget::Medium),
            ("red", ColourTarget::High),
            ("white", ColourTarget::Drop),
        ])
    }
}

impl ColourMap {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, ColourTarget)>) -> Self {
        ColourMap(pairs.into_iter().map(|(k, v)| (k.trim().to_lowercase(), v)).collect())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let raw: BTreeMap<String, ColourTarget> = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Ok(ColourMap::from_pairs(raw.iter().map(|(k, v)| (k.as_str(), *v))))
    }

    pub fn lookup(&self, word: &str) -> Option<ColourTarget> {
        self.0.get(&word.trim().to_lowercase()).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub region: String,
    pub week_start: NaiveDate,
    pub week_end: NaiveDate,
    pub level: RiskLevel,
}

impl LabelEntry {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.week_start <= d && d <= self.week_end
    }
}

/// Weekly risk labels, sorted by region then window start.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSeries {
    entries: Vec<LabelEntry>,
}

impl LabelSeries {
    /// Validates window order and per-region overlap.
    pub fn new(mut entries: Vec<LabelEntry>) -> Result<Self> {
        for e in &entries {
            if e.week_end < e.week_start {
                return Err(Error::InvertedWindow {
                    location: Location { line: 0, column: None },
                    start: e.week_start,
                    end: e.week_end,
                });
            }
        }
        entries.sort_by(|a, b| (&a.region, a.week_start).cmp(&(&b.region, b.week_start)));
        for w in entries.windows(2) {
            if w[0].region == w[1].region && w[1].week_start <= w[0].week_end {
                return Err(Error::OverlappingWindows {
                    region: w[0].region.clone(),
                    first: w[0].week_start,
                    second: w[1].week_start,
                });
            }
        }
        Ok(LabelSeries { entries })
    }

    pub fn entries(&self) -> &[LabelEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct region names, sorted.
    pub fn regions(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.entries.iter().map(|e| e.region.as_str()).collect();
        v.dedup();
        v
    }

    pub fn for_region<'a>(&'a self, region: &'a str) -> impl Iterator<Item = &'a LabelEntry> + 'a {
        self.entries.iter().filter(move |e| e.region == region)
    }

    /// Distinct `(week_start, week_end)` windows across all regions, sorted.
    pub fn windows(&self) -> Vec<(NaiveDate, NaiveDate)> {
        let mut w: Vec<_> = self.entries.iter().map(|e| (e.week_start, e.week_end)).collect();
        w.sort_unstable();
        w.dedup();
        w
    }

    /// Writes `region,week_start,week_end,colour` rows using the default
    /// colour words (yellow, orange, red).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        wtr.write_record(["region", "week_start", "week_end", "colour"])?;
        for e in &self.entries {
            let colour = match e.level {
                RiskLevel::L => "yellow",
                RiskLevel::M => "orange",
                RiskLevel::H => "red",
            };
            wtr.write_record([
                e.region.as_str(),
                &e.week_start.to_string(),
                &e.week_end.to_string(),
                colour,
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn renamed(&self, rename: impl Fn(&str) -> String) -> Result<LabelSeries> {
        LabelSeries::new(
            self.entries
                .iter()
                .map(|e| LabelEntry {
                    region: rename(&e.region),
                    ..e.clone()
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub retained: BTreeMap<String, usize>,
    pub dropped: BTreeMap<String, usize>,
}

/// Reads `region,week_start,week_end,colour` rows (header required).
pub fn parse_label_csv<R: Read>(reader: R, colours: &ColourMap) -> Result<(LabelSeries, LabelReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let cols = [find("region")?, find("week_start")?, find("week_end")?, find("colour")?];

    let mut entries = Vec::new();
    let mut report = LabelReport::default();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize| rec.get(cols[i]).unwrap_or("");
        let date = |i: usize, name: &str| {
            parse_date(get(i)).ok_or_else(|| Error::Parse {
                location: Location {
                    line,
                    column: Some(name.to_owned()),
                },
                value: get(i).to_owned(),
                expected: "ISO-8601 date",
            })
        };
        let region = get(0).to_owned();
        let start = date(1, "week_start")?;
        let end = date(2, "week_end")?;
        if end < start {
            return Err(Error::InvertedWindow {
                location: Location { line, column: None },
                start,
                end,
            });
        }
        let target = colours.lookup(get(3)).ok_or_else(|| Error::UnknownColour {
            location: Location {
                line,
                column: Some("colour".into()),
            },
            colour: get(3).to_owned(),
        })?;
        match target.level() {
            Some(level) => {
                *report.retained.entry(region.clone()).or_default() += 1;
                entries.push(LabelEntry {
                    region,
                    week_start: start,
                    week_end: end,
                    level,
                });
            }
            None => *report.dropped.entry(region).or_default() += 1,
        }
    }
    Ok((LabelSeries::new(entries)?, report))
}
