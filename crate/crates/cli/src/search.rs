//! `zonerisk search`: exhaustive subset search per region and the
//! cross-region tables derived from it.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use zonerisk_core::panel::{IndicatorId, WeeklyPanel, INDICATOR_COUNT};
use zonerisk_core::search::{
    error_by_nvars, inclusion_percentages, search_region, write_records_csv, PcCountTally, RegionSearch,
};
use zonerisk_core::{Error, ErrorKind, EvaluationRecord, FitOptions, FrozenTransform, SearchConfig};

use crate::args::RunConfig;
use crate::error::{CliError, Result, WithPath};
use crate::ingest::IngestReport;
use crate::output::{num, opt_num, read_prerequisite, write_csv_with, write_json, write_rows, Layout, Provenance};

pub const TIE_BREAK: &str =
    "fewest misclassified weeks, then converged fits, fewer variables, fewer components, smallest mask";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Indicator {
    pub id: IndicatorId,
    pub name: String,
}

/// Selected model of one region, with everything needed to refit it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestModel {
    pub provenance: Provenance,
    pub region: String,
    pub mask: u16,
    pub indicators: Vec<Indicator>,
    pub n_vars: usize,
    pub r: usize,
    pub cum_var: f64,
    pub threshold_met: bool,
    pub misclassified: usize,
    pub n_weeks: usize,
    pub error: f64,
    pub converged: bool,
    pub separation: bool,
    pub eta: [f64; 2],
    pub beta: Vec<f64>,
    /// Loadings of the selected components, one row per component.
    pub loadings: Vec<Vec<f64>>,
    pub record: EvaluationRecord,
    pub transform: FrozenTransform,
}

impl BestModel {
    fn new(prov: &Provenance, s: &RegionSearch) -> Self {
        let b = &s.best;
        let fit = b.fit.as_ref().expect("best record has a fit");
        let k = s.transform.pca.dim();
        BestModel {
            provenance: prov.clone(),
            region: b.region.clone(),
            mask: b.mask.bits(),
            indicators: b
                .mask
                .indicators()
                .map(|id| Indicator {
                    id,
                    name: id.name().into(),
                })
                .collect(),
            n_vars: b.n_vars,
            r: b.r,
            cum_var: b.cum_var,
            threshold_met: b.threshold_met,
            misclassified: b.misclassified,
            n_weeks: b.n_weeks,
            error: b.error,
            converged: fit.converged,
            separation: fit.separation_flag,
            eta: fit.model.eta,
            beta: fit.model.beta.clone(),
            loadings: (0..b.r)
                .map(|c| (0..k).map(|j| s.transform.pca.loadings[(c, j)]).collect())
                .collect(),
            record: b.clone(),
            transform: s.transform.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionOutcome {
    pub region: String,
    pub slug: String,
    /// Absent when every subset was invalid or the region could not be searched.
    pub best_mask: Option<u16>,
    pub failure: Option<String>,
    pub valid_records: usize,
    pub pc_counts: PcCountTally,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchManifest {
    pub provenance: Provenance,
    pub threshold: f64,
    pub cap: Option<usize>,
    pub tie_break: String,
    pub workers: usize,
    pub wall_seconds: f64,
    pub regions: Vec<RegionOutcome>,
    pub pc_counts: PcCountTally,
}

impl SearchManifest {
    pub fn load(layout: &Layout) -> Result<Self> {
        crate::output::read_json(&layout.search_manifest(), "search")
    }
}

pub fn search_config(cfg: &RunConfig) -> SearchConfig {
    SearchConfig {
        threshold: cfg.threshold,
        cap: cfg.cap,
        fit: FitOptions::default(),
    }
}

fn names(mask: zonerisk_core::SubsetMask) -> String {
    mask.indicators().map(|id| id.name()).collect::<Vec<_>>().join("; ")
}

fn ids(mask: zonerisk_core::SubsetMask) -> String {
    mask.indicators().map(|id| id.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn run(cfg: &RunConfig, layout: &Layout) -> Result<()> {
    let started = Instant::now();
    let ingest = IngestReport::load(layout)?;
    let search_cfg = search_config(cfg);
    let prov = Provenance::new(
        "search",
        json!({
            "upstream": ingest.provenance.config_hash,
            "threshold": search_cfg.threshold,
            "cap": search_cfg.cap,
            "fit": search_cfg.fit,
            "tie_break": TIE_BREAK,
        }),
    );
    let workers = cfg.workers();

    let mut outcomes = Vec::new();
    let mut best: Vec<EvaluationRecord> = Vec::new();
    let mut best_models: Vec<BestModel> = Vec::new();
    let mut slim: Vec<EvaluationRecord> = Vec::new();
    let mut total = PcCountTally::default();
    for entry in &ingest.regions {
        let path = layout.weekly(&entry.slug);
        let bytes = read_prerequisite(&path, "ingest")?;
        let panel = WeeklyPanel::read_csv(bytes.as_slice(), &entry.name, ingest.statistic).at(&path)?;
        let mut outcome = RegionOutcome {
            region: entry.name.clone(),
            slug: entry.slug.clone(),
            best_mask: None,
            failure: None,
            valid_records: 0,
            pc_counts: PcCountTally::default(),
        };
        match search_region(&panel, &search_cfg, workers) {
            Ok(s) => {
                for r in &s.records {
                    outcome.pc_counts.add(r);
                }
                outcome.valid_records = s.records.iter().filter(|r| r.valid).count();
                outcome.best_mask = Some(s.best.mask.bits());
                write_csv_with(&layout.records(&entry.slug), &prov, |buf| {
                    write_records_csv(&s.records, buf)
                })?;
                let model = BestModel::new(&prov, &s);
                write_json(&layout.best(&entry.slug), &model)?;
                slim.extend(s.records.into_iter().map(|mut r| {
                    r.fit = None;
                    r
                }));
                best.push(s.best);
                best_models.push(model);
            }
            Err(e @ Error::Config(_)) => return Err(CliError::Core(e)),
            Err(e) if e.kind() == ErrorKind::Numerical => return Err(CliError::Input { path, source: e }),
            Err(e) => {
                eprintln!("warning: region '{}' skipped: {e}", entry.name);
                outcome.failure = Some(e.to_string());
            }
        }
        total.merge(&outcome.pc_counts);
        eprintln!("search: {} done", entry.name);
        outcomes.push(outcome);
    }

    write_table1(layout, &prov, &best)?;
    write_table2(layout, &prov, &best_models)?;
    write_table4(layout, &prov, &best_models)?;
    write_fig3(layout, &prov, &slim)?;
    write_fig4(layout, &prov, &best)?;
    write_pc_counts(layout, &prov, &total)?;

    let manifest = SearchManifest {
        provenance: prov,
        threshold: search_cfg.threshold,
        cap: search_cfg.cap,
        tie_break: TIE_BREAK.into(),
        workers,
        wall_seconds: started.elapsed().as_secs_f64(),
        regions: outcomes,
        pc_counts: total,
    };
    write_json(&layout.search_manifest(), &manifest)?;
    Ok(())
}

fn write_table1(layout: &Layout, prov: &Provenance, best: &[EvaluationRecord]) -> Result<()> {
    let header = [
        "region",
        "n_vars",
        "indicators",
        "names",
        "r",
        "cum_var",
        "misclassified",
        "n_weeks",
        "error",
        "converged",
    ];
    let rows: Vec<Vec<String>> = best
        .iter()
        .map(|b| {
            vec![
                b.region.clone(),
                b.n_vars.to_string(),
                ids(b.mask),
                names(b.mask),
                b.r.to_string(),
                num(b.cum_var),
                b.misclassified.to_string(),
                b.n_weeks.to_string(),
                num(b.error),
                b.converged().to_string(),
            ]
        })
        .collect();
    write_rows(&layout.file("table1_models.csv"), prov, &strings(&header), &rows)
}

fn write_table2(layout: &Layout, prov: &Provenance, models: &[BestModel]) -> Result<()> {
    let max_r = models.iter().map(|m| m.r).max().unwrap_or(1);
    let mut header = strings(&["region", "indicator", "name"]);
    header.extend((1..=max_r).map(|c| format!("pc{c}")));
    let mut rows = Vec::new();
    for m in models {
        for (j, ind) in m.indicators.iter().enumerate() {
            let mut row = vec![m.region.clone(), ind.id.to_string(), ind.name.clone()];
            row.extend((0..max_r).map(|c| opt_num(m.loadings.get(c).map(|l| l[j]))));
            rows.push(row);
        }
    }
    write_rows(&layout.file("table2_loadings.csv"), prov, &header, &rows)
}

fn write_table4(layout: &Layout, prov: &Provenance, models: &[BestModel]) -> Result<()> {
    let width = models.iter().map(|m| m.r).max().unwrap_or(0).max(4);
    let mut header = strings(&["region", "r", "eta1", "eta2"]);
    header.extend((1..=width).map(|c| format!("beta{c}")));
    header.extend(strings(&["converged", "separation"]));
    let rows: Vec<Vec<String>> = models
        .iter()
        .map(|m| {
            let mut row = vec![m.region.clone(), m.r.to_string(), num(m.eta[0]), num(m.eta[1])];
            row.extend((0..width).map(|c| opt_num(m.beta.get(c).copied())));
            row.push(m.converged.to_string());
            row.push(m.separation.to_string());
            row
        })
        .collect();
    write_rows(&layout.file("table4_coefficients.csv"), prov, &header, &rows)
}

fn write_fig3(layout: &Layout, prov: &Provenance, records: &[EvaluationRecord]) -> Result<()> {
    let header = strings(&["region", "n_vars", "count", "mean", "min", "max", "std_dev"]);
    let mut rows = Vec::new();
    let mut push = |region: &str, recs: &mut dyn Iterator<Item = &EvaluationRecord>| {
        for s in error_by_nvars(recs) {
            rows.push(vec![
                region.to_string(),
                s.n_vars.to_string(),
                s.count.to_string(),
                opt_num(s.mean),
                opt_num(s.min),
                opt_num(s.max),
                opt_num(s.std_dev),
            ]);
        }
    };
    let mut start = 0;
    while start < records.len() {
        let region = &records[start].region;
        let end = start + records[start..].iter().take_while(|r| &r.region == region).count();
        push(region, &mut records[start..end].iter());
        start = end;
    }
    push("all", &mut records.iter());
    write_rows(&layout.file("fig3_error_by_nvars.csv"), prov, &header, &rows)
}

fn write_fig4(layout: &Layout, prov: &Provenance, best: &[EvaluationRecord]) -> Result<()> {
    let pct = inclusion_percentages(best);
    let rows: Vec<Vec<String>> = (0..INDICATOR_COUNT)
        .map(|j| {
            let id = IndicatorId::from_position(j);
            vec![id.to_string(), id.name().to_string(), num(pct[j])]
        })
        .collect();
    write_rows(
        &layout.file("fig4_inclusion.csv"),
        prov,
        &strings(&["indicator", "name", "fraction"]),
        &rows,
    )
}

fn write_pc_counts(layout: &Layout, prov: &Provenance, tally: &PcCountTally) -> Result<()> {
    let fractions = tally.fractions();
    let rows: Vec<Vec<String>> = ["1", "2", "3", "4+"]
        .iter()
        .enumerate()
        .map(|(i, label)| vec![label.to_string(), tally.counts[i].to_string(), num(fractions[i])])
        .collect();
    write_rows(
        &layout.file("pc_counts.csv"),
        prov,
        &strings(&["r", "count", "fraction"]),
        &rows,
    )
}

pub fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}
