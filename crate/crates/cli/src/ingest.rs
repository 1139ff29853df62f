//! `zonerisk ingest`: validate the raw inputs, cache them in canonical form
//! and write one weekly panel per labelled region.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use zonerisk_core::panel::{
    aggregate_weekly, parse_daily_csv, parse_label_csv, AggregationReport, ColourMap, ColumnMap, DailyIngestReport,
    LabelReport,
};
use zonerisk_core::regions::RegionCatalogue;
use zonerisk_core::{Error, Statistic};

use crate::args::RunConfig;
use crate::error::{CliError, Result, WithPath};
use crate::output::{
    read_bytes, read_json, read_string, sha256_hex, slug, write_csv_with, write_json, write_rows, Layout, Provenance,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionEntry {
    pub name: String,
    pub slug: String,
    pub weeks: usize,
    pub rejected_weeks: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestReport {
    pub provenance: Provenance,
    pub statistic: Statistic,
    pub regions: Vec<RegionEntry>,
    pub populations: bool,
    pub daily: DailyIngestReport,
    pub labels: LabelReport,
    pub aggregation: AggregationReport,
    pub warnings: Vec<String>,
}

impl IngestReport {
    pub fn load(layout: &Layout) -> Result<Self> {
        read_json(&layout.ingest_report(), "ingest")
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| CliError::Usage(format!("ingest needs --{flag}")))
}

/// Digest of an optional input file, or "builtin".
fn digest(path: Option<&Path>) -> Result<String> {
    Ok(match path {
        Some(p) => sha256_hex(&read_bytes(p)?),
        None => "builtin".into(),
    })
}

fn parse_populations(path: &Path, catalogue: &RegionCatalogue) -> Result<BTreeMap<String, u64>> {
    let bytes = read_bytes(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes.as_slice());
    let bad = |source: Error| CliError::Input {
        path: path.to_owned(),
        source,
    };
    let headers = rdr.headers().map_err(|e| bad(e.into()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| bad(Error::MissingColumn(name.into())))
    };
    let (rc, pc) = (find("region")?, find("population")?);
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.into()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let value: u64 = rec[pc].parse().ok().filter(|&v| v > 0).ok_or_else(|| {
            bad(Error::Parse {
                location: zonerisk_core::error::Location {
                    line,
                    column: Some(headers[pc].to_owned()),
                },
                value: rec[pc].to_owned(),
                expected: "positive integer",
            })
        })?;
        let region = catalogue.normalize(&rec[rc]);
        if out.insert(region.clone(), value).is_some() {
            return Err(bad(Error::Config(format!(
                "line {line}: duplicate population for '{region}'"
            ))));
        }
    }
    Ok(out)
}

pub fn write_populations(path: &Path, prov: &Provenance, pops: &BTreeMap<String, u64>) -> Result<()> {
    let rows: Vec<Vec<String>> = pops.iter().map(|(r, p)| vec![r.clone(), p.to_string()]).collect();
    write_rows(path, prov, &["region".into(), "population".into()], &rows)
}

pub fn read_populations(layout: &Layout) -> Result<BTreeMap<String, u64>> {
    let path = layout.populations_cache();
    parse_populations(&path, &RegionCatalogue::from_entries(Vec::new())?)
}

pub fn run(cfg: &RunConfig, layout: &Layout) -> Result<()> {
    let daily_path = required(&cfg.daily, "daily")?;
    let labels_path = required(&cfg.labels, "labels")?;

    let column_map = match &cfg.column_map {
        Some(p) => ColumnMap::from_toml_str(&read_string(p)?).at(p)?,
        None => ColumnMap::default(),
    };
    let colour_map = match &cfg.colour_map {
        Some(p) => ColourMap::from_toml_str(&read_string(p)?).at(p)?,
        None => ColourMap::default(),
    };
    let catalogue = match &cfg.regions {
        Some(p) => RegionCatalogue::from_toml_str(&read_string(p)?).at(p)?,
        None => RegionCatalogue::default(),
    };

    let daily_bytes = read_bytes(daily_path)?;
    let labels_bytes = read_bytes(labels_path)?;
    let config = json!({
        "inputs": {
            "daily": sha256_hex(&daily_bytes),
            "labels": sha256_hex(&labels_bytes),
            "populations": digest(cfg.populations.as_deref())?,
            "column_map": digest(cfg.column_map.as_deref())?,
            "colour_map": digest(cfg.colour_map.as_deref())?,
            "regions": digest(cfg.regions.as_deref())?,
        },
        "statistic": cfg.statistic,
    });
    let prov = Provenance::new("ingest", config);

    let (daily, daily_report) = parse_daily_csv(daily_bytes.as_slice(), &column_map).at(daily_path)?;
    let (labels, label_report) = parse_label_csv(labels_bytes.as_slice(), &colour_map).at(labels_path)?;
    let daily = daily.renamed(|n| catalogue.normalize(n)).at(daily_path)?;
    let labels = labels.renamed(|n| catalogue.normalize(n)).at(labels_path)?;
    let (panels, aggregation) = aggregate_weekly(&daily, &labels, cfg.statistic).at(labels_path)?;

    let populations = match &cfg.populations {
        Some(p) => {
            let pops = parse_populations(p, &catalogue)?;
            if let Some(missing) = labels.regions().into_iter().find(|r| !pops.contains_key(*r)) {
                return Err(CliError::Input {
                    path: p.clone(),
                    source: Error::MissingPopulation(missing.to_owned()),
                });
            }
            Some(pops)
        }
        None => None,
    };

    let mut warnings = daily_report.warnings.clone();
    let mut regions = Vec::new();
    for panel in &panels {
        let rejected = aggregation.rejected.iter().filter(|r| r.region == panel.region).count();
        if rejected > 0 {
            warnings.push(format!(
                "region '{}': {rejected} label windows have too few daily rows and were skipped",
                panel.region
            ));
        }
        let entry = RegionEntry {
            name: panel.region.clone(),
            slug: slug(&panel.region),
            weeks: panel.len(),
            rejected_weeks: rejected,
        };
        write_csv_with(&layout.weekly(&entry.slug), &prov, |buf| panel.write_csv(buf))?;
        regions.push(entry);
    }
    let mut seen = BTreeMap::new();
    for r in &regions {
        if let Some(other) = seen.insert(r.slug.clone(), r.name.clone()) {
            return Err(CliError::Usage(format!(
                "regions '{other}' and '{}' map to the same file name '{}'",
                r.name, r.slug
            )));
        }
    }

    write_csv_with(&layout.daily_cache(), &prov, |buf| daily.write_csv(buf))?;
    write_csv_with(&layout.labels_cache(), &prov, |buf| labels.write_csv(buf))?;
    if let Some(pops) = &populations {
        write_populations(&layout.populations_cache(), &prov, pops)?;
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let report = IngestReport {
        provenance: prov,
        statistic: cfg.statistic,
        regions,
        populations: populations.is_some(),
        daily: daily_report,
        labels: label_report,
        aggregation,
        warnings,
    };
    write_json(&layout.ingest_report(), &report)?;
    eprintln!("ingest: {} regions", report.regions.len());
    Ok(())
}
