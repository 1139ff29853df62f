use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};
use crate::linalg::Matrix;
use crate::panel::indicator::{IndicatorId, INDICATOR_COUNT};

/// How a source column is validated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    /// Stock or cumulative count; negative values are rejected.
    #[default]
    Count,
    /// Daily change as published by the source; may be negative after corrections.
    Increment,
}

/// Where an indicator's daily values come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ColumnSource {
    /// Day-over-day difference of a cumulative source column.
    Difference { difference_of: String },
    Column {
        column: String,
        #[serde(default)]
        kind: ColumnKind,
    },
}

impl ColumnSource {
    pub fn column(name: &str) -> Self {
        ColumnSource::Column {
            column: name.to_owned(),
            kind: ColumnKind::Count,
        }
    }

    pub fn increment(name: &str) -> Self {
        ColumnSource::Column {
            column: name.to_owned(),
            kind: ColumnKind::Increment,
        }
    }

    pub fn difference_of(name: &str) -> Self {
        ColumnSource::Difference {
            difference_of: name.to_owned(),
        }
    }

    fn source_column(&self) -> &str {
        match self {
            ColumnSource::Difference { difference_of } => difference_of,
            ColumnSource::Column { column, .. } => column,
        }
    }

    fn describe(&self) -> String {
        match self {
            ColumnSource::Difference { difference_of } => format!("difference of {difference_of}"),
            ColumnSource::Column { column, .. } => column.clone(),
        }
    }
}

/// Inclusive date range used to restrict ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    pub fn unbounded() -> Self {
        DateWindow {
            start: NaiveDate::MIN,
            end: NaiveDate::MAX,
        }
    }
}

impl Default for DateWindow {
    fn default() -> Self {
        DateWindow {
            start: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2021, 12, 31).unwrap(),
        }
    }
}

/// Maps the source CSV schema onto the indicator catalogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub date_column: String,
    pub region_column: String,
    #[serde(default)]
    pub window: DateWindow,
    pub indicators: BTreeMap<IndicatorId, ColumnSource>,
}

impl Default for ColumnMap {
    /// Italian Civil Protection regional schema.
    fn default() -> Self {
        let cols = [
            ColumnSource::column("ricoverati_con_sintomi"),
            ColumnSource::column("terapia_intensiva"),
            ColumnSource::column("ingressi_terapia_intensiva"),
            ColumnSource::column("isolamento_domiciliare"),
            ColumnSource::column("totale_positivi"),
            ColumnSource::column("dimessi_guariti"),
            ColumnSource::column("deceduti"),
            ColumnSource::column("totale_positivi_test_molecolare"),
            ColumnSource::column("totale_positivi_test_antigenico_rapido"),
            ColumnSource::column("totale_casi"),
            ColumnSource::increment("nuovi_positivi"),
            ColumnSource::column("casi_testati"),
            ColumnSource::column("tamponi_test_molecolare"),
            ColumnSource::column("tamponi_test_antigenico_rapido"),
            ColumnSource::column("tamponi"),
            ColumnSource::difference_of("tamponi"),
        ];
        ColumnMap {
            date_column: "data".into(),
            region_column: "denominazione_regione".into(),
            window: DateWindow::default(),
            indicators: IndicatorId::all().zip(cols).collect(),
        }
    }
}

impl ColumnMap {
    /// Reads columns named `X1`..`X16` verbatim, over all dates. This is the
    /// schema written by [`DailyPanel::write_csv`].
    pub fn identity() -> Self {
        ColumnMap {
            date_column: "date".into(),
            region_column: "region".into(),
            window: DateWindow::unbounded(),
            indicators: IndicatorId::all()
                .map(|id| (id, ColumnSource::increment(&id.to_string())))
                .collect(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let map: ColumnMap = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(missing) = IndicatorId::all().find(|id| !self.indicators.contains_key(id)) {
            return Err(Error::Config(format!("column map has no entry for {missing}")));
        }
        if self.window.end < self.window.start {
            return Err(Error::Config("column map window ends before it starts".into()));
        }
        Ok(())
    }

    fn source(&self, id: IndicatorId) -> &ColumnSource {
        &self.indicators[&id]
    }
}

/// Per-region, per-day values of the sixteen indicators on a shared date axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyPanel {
    regions: Vec<String>,
    dates: Vec<NaiveDate>,
    /// Region-major: `values[r * dates.len() + d]`.
    values: Vec<[f64; INDICATOR_COUNT]>,
}

impl DailyPanel {
    /// `values` is indexed `[region][date]`.
    pub fn new(regions: Vec<String>, dates: Vec<NaiveDate>, values: Vec<Vec<[f64; INDICATOR_COUNT]>>) -> Result<Self> {
        if values.len() != regions.len() {
            return Err(Error::Dimension {
                expected: regions.len(),
                got: values.len(),
            });
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "dates must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let unique: BTreeSet<_> = regions.iter().collect();
        if unique.len() != regions.len() {
            return Err(Error::Config("duplicate region name".into()));
        }
        let mut flat = Vec::with_capacity(regions.len() * dates.len());
        for series in values {
            if series.len() != dates.len() {
                return Err(Error::Dimension {
                    expected: dates.len(),
                    got: series.len(),
                });
            }
            flat.extend(series);
        }
        if let Some(pos) = flat.iter().position(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite { row: pos });
        }
        Ok(DailyPanel {
            regions,
            dates,
            values: flat,
        })
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn region_index(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r == name)
    }

    /// All days of one region, in date order.
    pub fn series(&self, region: usize) -> &[[f64; INDICATOR_COUNT]] {
        let n = self.dates.len();
        &self.values[region * n..(region + 1) * n]
    }

    pub fn value(&self, region: usize, date: usize) -> &[f64; INDICATOR_COUNT] {
        &self.values[region * self.dates.len() + date]
    }

    /// Date positions falling inside `[start, end]`.
    pub fn date_range(&self, start: NaiveDate, end: NaiveDate) -> std::ops::Range<usize> {
        let lo = self.dates.partition_point(|d| *d < start);
        let hi = self.dates.partition_point(|d| *d <= end);
        lo..hi.max(lo)
    }

    /// Copy with the given calendar days removed for every region.
    pub fn without_dates(&self, drop: &BTreeSet<NaiveDate>) -> DailyPanel {
        let keep: Vec<usize> = (0..self.dates.len())
            .filter(|&i| !drop.contains(&self.dates[i]))
            .collect();
        let mut values = Vec::with_capacity(self.regions.len() * keep.len());
        for r in 0..self.regions.len() {
            let s = self.series(r);
            values.extend(keep.iter().map(|&i| s[i]));
        }
        DailyPanel {
            regions: self.regions.clone(),
            dates: keep.iter().map(|&i| self.dates[i]).collect(),
            values,
        }
    }

    /// Renames regions (for example to canonical spellings); regions are
    /// re-sorted and a collision is an error.
    pub fn renamed(&self, rename: impl Fn(&str) -> String) -> Result<DailyPanel> {
        let mut order: Vec<(String, usize)> = self.regions.iter().enumerate().map(|(i, r)| (rename(r), i)).collect();
        order.sort();
        if let Some(w) = order.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Config(format!(
                "regions '{}' and '{}' both map to '{}'",
                self.regions[w[0].1], self.regions[w[1].1], w[0].0
            )));
        }
        let mut values = Vec::with_capacity(self.values.len());
        for (_, i) in &order {
            values.extend_from_slice(self.series(*i));
        }
        Ok(DailyPanel {
            regions: order.into_iter().map(|(n, _)| n).collect(),
            dates: self.dates.clone(),
            values,
        })
    }

    /// Sum over regions for each day.
    pub fn national_totals(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dates.len(), INDICATOR_COUNT);
        for r in 0..self.regions.len() {
            for (d, v) in self.series(r).iter().enumerate() {
                for (o, x) in m.row_mut(d).iter_mut().zip(v) {
                    *o += x;
                }
            }
        }
        m
    }

    /// Writes the panel as `date,region,X1..X16`, readable back with
    /// [`ColumnMap::identity`].
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["date".to_string(), "region".to_string()];
        header.extend(IndicatorId::all().map(|id| id.to_string()));
        out.write_record(&header)?;
        for (r, region) in self.regions.iter().enumerate() {
            for (d, date) in self.dates.iter().enumerate() {
                let mut rec = vec![date.to_string(), region.clone()];
                rec.extend(self.value(r, d).iter().map(|x| x.to_string()));
                out.write_record(&rec)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// A day removed from the panel during ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedDay {
    pub date: NaiveDate,
    pub regions: Vec<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSource {
    pub id: IndicatorId,
    pub name: String,
    pub source: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DailyIngestReport {
    pub indicators: Vec<IndicatorSource>,
    pub rows_read: usize,
    pub days_retained: usize,
    pub dropped_days: Vec<DroppedDay>,
    pub warnings: Vec<String>,
}

pub(crate) fn parse_date(raw: &str) -> Option<NaiveDate> {
    // Accept full ISO-8601 timestamps such as 2021-01-01T17:00:00.
    let head = raw.trim().get(..10)?;
    NaiveDate::parse_from_str(head, "%Y-%m-%d").ok()
}

/// Reads a daily indicator CSV into a validated panel.
pub fn parse_daily_csv<R: Read>(reader: R, map: &ColumnMap) -> Result<(DailyPanel, DailyIngestReport)> {
    map.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let date_col = find(&map.date_column)?;
    let region_col = find(&map.region_column)?;

    // Distinct source columns; a column is count-validated unless every use is
    // a published increment.
    let mut columns: Vec<(String, usize, bool)> = Vec::new();
    for id in IndicatorId::all() {
        let src = map.source(id);
        let name = src.source_column();
        let is_count = !matches!(
            src,
            ColumnSource::Column {
                kind: ColumnKind::Increment,
                ..
            }
        );
        match columns.iter_mut().find(|c| c.0 == name) {
            Some(c) => c.2 |= is_count,
            None => columns.push((name.to_owned(), find(name)?, is_count)),
        }
    }
    let col_slot: HashMap<&str, usize> = columns.iter().enumerate().map(|(i, c)| (c.0.as_str(), i)).collect();

    // region -> date -> values per distinct source column (None when blank)
    let mut rows: BTreeMap<String, BTreeMap<NaiveDate, Vec<Option<f64>>>> = BTreeMap::new();
    let mut report = DailyIngestReport::default();
    let mut negative_increments: BTreeMap<(String, String), usize> = BTreeMap::new();

    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        report.rows_read += 1;
        let loc = |column: &str| Location {
            line,
            column: Some(column.to_owned()),
        };
        let raw_date = rec.get(date_col).unwrap_or("");
        let date = parse_date(raw_date).ok_or_else(|| Error::Parse {
            location: loc(&map.date_column),
            value: raw_date.to_owned(),
            expected: "ISO-8601 date",
        })?;
        let region = rec.get(region_col).unwrap_or("").to_owned();
        if region.is_empty() {
            return Err(Error::Parse {
                location: loc(&map.region_column),
                value: String::new(),
                expected: "region name",
            });
        }
        let in_window = map.window.contains(date);
        let mut vals = Vec::with_capacity(columns.len());
        for (name, idx, is_count) in &columns {
            let raw = rec.get(*idx).unwrap_or("");
            if raw.is_empty() {
                // Blank cells outside the window are tolerated; they only
                // matter if needed as a difference predecessor.
                if in_window {
                    return Err(Error::Parse {
                        location: loc(name),
                        value: String::new(),
                        expected: "number",
                    });
                }
                vals.push(None);
                continue;
            }
            let v: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    location: loc(name),
                    value: raw.to_owned(),
                    expected: "number",
                })?;
            if v < 0.0 {
                if *is_count {
                    if in_window {
                        return Err(Error::NegativeCount {
                            location: loc(name),
                            value: v,
                        });
                    }
                } else if in_window {
                    *negative_increments.entry((region.clone(), name.clone())).or_default() += 1;
                }
            }
            vals.push(Some(v));
        }
        let per_region = rows.entry(region.clone()).or_default();
        if per_region.insert(date, vals).is_some() {
            return Err(Error::DuplicateRow {
                location: Location { line, column: None },
                region,
                date,
            });
        }
    }

    for ((region, column), count) in negative_increments {
        report.warnings.push(format!(
            "region '{region}': {count} negative value(s) in increment column '{column}'"
        ));
    }

    // Resolve each indicator per in-window (region, date).
    let mut resolved: BTreeMap<String, BTreeMap<NaiveDate, [f64; INDICATOR_COUNT]>> = BTreeMap::new();
    let mut undifferenced: BTreeMap<NaiveDate, (Vec<String>, BTreeSet<String>)> = BTreeMap::new();
    let mut negative_diffs: BTreeMap<(String, IndicatorId), usize> = BTreeMap::new();
    for (region, series) in &rows {
        let out = resolved.entry(region.clone()).or_default();
        for (&date, vals) in series.range(map.window.start..=map.window.end) {
            let mut x = [0.0; INDICATOR_COUNT];
            let mut missing_prev: Option<&str> = None;
            for id in IndicatorId::all() {
                let src = map.source(id);
                let slot = col_slot[src.source_column()];
                let today = vals[slot].expect("in-window cells are present");
                x[id.position()] = match src {
                    ColumnSource::Column { .. } => today,
                    ColumnSource::Difference { difference_of } => {
                        let prev = date.pred_opt().and_then(|p| series.get(&p)).and_then(|v| v[slot]);
                        match prev {
                            Some(p) => {
                                let d = today - p;
                                if d < 0.0 {
                                    *negative_diffs.entry((region.clone(), id)).or_default() += 1;
                                }
                                d
                            }
                            None => {
                                missing_prev = Some(difference_of);
                                0.0
                            }
                        }
                    }
                };
            }
            match missing_prev {
                Some(col) => {
                    let e = undifferenced.entry(date).or_default();
                    e.0.push(region.clone());
                    e.1.insert(col.to_owned());
                }
                None => {
                    out.insert(date, x);
                }
            }
        }
    }
    for ((region, id), count) in negative_diffs {
        report.warnings.push(format!(
            "region '{region}': {count} negative day-over-day difference(s) for {id}"
        ));
    }

    let regions: Vec<String> = rows.keys().cloned().collect();
    let mut axis: BTreeSet<NaiveDate> = BTreeSet::new();
    for series in rows.values() {
        axis.extend(series.range(map.window.start..=map.window.end).map(|(d, _)| *d));
    }
    for (date, (regs, cols)) in undifferenced {
        axis.remove(&date);
        report.dropped_days.push(DroppedDay {
            date,
            regions: regs,
            reason: format!(
                "no previous day for difference of {}",
                cols.into_iter().collect::<Vec<_>>().join(", ")
            ),
        });
    }
    let dates: Vec<NaiveDate> = axis.into_iter().collect();
    let mut values = Vec::with_capacity(regions.len());
    for region in &regions {
        let series = &resolved[region];
        let mut v = Vec::with_capacity(dates.len());
        for d in &dates {
            match series.get(d) {
                Some(x) => v.push(*x),
                None => {
                    return Err(Error::MissingDay {
                        region: region.clone(),
                        date: *d,
                    })
                }
            }
        }
        values.push(v);
    }

    report.indicators = IndicatorId::all()
        .map(|id| IndicatorSource {
            id,
            name: id.name().to_owned(),
            source: map.source(id).describe(),
        })
        .collect();
    report.days_retained = dates.len();
    let panel = DailyPanel::new(regions, dates, values)?;
    Ok((panel, report))
}
