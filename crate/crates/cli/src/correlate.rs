//! `zonerisk correlate`: Pearson correlations of the national daily totals.

use serde_json::json;
use zonerisk_core::panel::{correlation_matrix, parse_daily_csv, ColumnMap, IndicatorId, INDICATOR_NAMES};

use crate::error::{Result, WithPath};
use crate::ingest::IngestReport;
use crate::output::{opt_num, read_prerequisite, write_rows, Layout, Provenance};

pub fn run(layout: &Layout) -> Result<()> {
    let ingest = IngestReport::load(layout)?;
    let path = layout.daily_cache();
    let bytes = read_prerequisite(&path, "ingest")?;
    let (daily, _) = parse_daily_csv(bytes.as_slice(), &ColumnMap::identity()).at(&path)?;
    let corr = correlation_matrix(&daily.national_totals()).at(&path)?;

    let prov = Provenance::new("correlate", json!({ "upstream": ingest.provenance.config_hash }));
    let mut header = vec!["indicator".to_string(), "name".to_string()];
    header.extend(IndicatorId::all().map(|id| id.to_string()));
    let rows: Vec<Vec<String>> = IndicatorId::all()
        .map(|a| {
            let mut row = vec![a.to_string(), INDICATOR_NAMES[a.position()].to_string()];
            row.extend(IndicatorId::all().map(|b| opt_num(corr.get(a.position(), b.position()))));
            row
        })
        .collect();
    write_rows(&layout.correlation(), &prov, &header, &rows)?;
    eprintln!("correlate: {} days", daily.dates().len());
    Ok(())
}
