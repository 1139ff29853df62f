//! `zonerisk jackknife`: coefficient distributions of each selected model
//! under delete-one-day-per-week resampling.

use serde::{Deserialize, Serialize};
use serde_json::json;
use zonerisk_core::jackknife::{
    empirical_ci, histogram, jackknife_region, ParameterSummary, ResamplePlan, SUMMARY_QUANTILES,
};
use zonerisk_core::panel::{parse_daily_csv, parse_label_csv, ColourMap, ColumnMap};
use zonerisk_core::{Error, FitOptions};

use crate::args::RunConfig;
use crate::error::{CliError, Result, WithPath};
use crate::ingest::IngestReport;
use crate::output::{num, read_json, read_prerequisite, write_bytes, write_json, write_rows, Layout, Provenance};
use crate::search::{strings, BestModel, SearchManifest};
use crate::svg;

pub const INTERVAL_LEVEL: f64 = 0.99;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Interval {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub contains_full_data: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionJackknife {
    pub provenance: Provenance,
    pub region: String,
    pub usable: bool,
    pub iterations: usize,
    pub converged: usize,
    pub non_converged: usize,
    pub warnings: Vec<String>,
    pub quantile_levels: Vec<f64>,
    pub summary: Vec<ParameterSummary>,
    pub interval_level: f64,
    pub intervals: Vec<Interval>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JackknifeEntry {
    pub region: String,
    pub slug: String,
    pub usable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JackknifeManifest {
    pub provenance: Provenance,
    pub seed: u64,
    pub iterations: usize,
    pub regions: Vec<JackknifeEntry>,
}

impl JackknifeManifest {
    pub fn load(layout: &Layout) -> Result<Self> {
        read_json(&layout.jackknife_manifest(), "jackknife")
    }
}

pub fn run(cfg: &RunConfig, layout: &Layout) -> Result<()> {
    let seed = cfg
        .seed
        .ok_or_else(|| CliError::Usage("jackknife needs --seed".into()))?;
    let ingest = IngestReport::load(layout)?;
    let search = SearchManifest::load(layout)?;
    if search.provenance.config["upstream"] != json!(ingest.provenance.config_hash) {
        return Err(CliError::Stale {
            path: layout.search_manifest(),
            stage: "search",
        });
    }
    let prov = Provenance::new(
        "jackknife",
        json!({
            "upstream": search.provenance.config_hash,
            "seed": seed,
            "iterations": cfg.iterations,
            "bins": cfg.bins,
            "samples": cfg.samples,
            "interval_level": INTERVAL_LEVEL,
        }),
    );

    let daily_path = layout.daily_cache();
    let bytes = read_prerequisite(&daily_path, "ingest")?;
    let (daily, _) = parse_daily_csv(bytes.as_slice(), &ColumnMap::identity()).at(&daily_path)?;
    let labels_path = layout.labels_cache();
    let bytes = read_prerequisite(&labels_path, "ingest")?;
    let (labels, _) = parse_label_csv(bytes.as_slice(), &ColourMap::default()).at(&labels_path)?;
    let plan = ResamplePlan::new(seed, cfg.iterations, &labels);
    let dir = layout.jackknife_dir();

    let mut entries = Vec::new();
    for outcome in search.regions.iter().filter(|o| o.best_mask.is_some()) {
        let best_path = layout.best(&outcome.slug);
        let model: BestModel = read_json(&best_path, "search")?;
        let result = jackknife_region(
            &model.record,
            &model.transform,
            &daily,
            &labels,
            ingest.statistic,
            &plan,
            &FitOptions::default(),
            cfg.workers(),
        );
        let full: Vec<f64> = model.eta.iter().chain(&model.beta).copied().collect();
        let out = match result {
            Ok(dist) => {
                let summary = dist.summarize(&full);
                let mut intervals = Vec::new();
                for ((name, s), &f) in dist.parameters.iter().zip(&dist.samples).zip(&full) {
                    let (lo, hi) = empirical_ci(s, INTERVAL_LEVEL).at(&best_path)?;
                    intervals.push(Interval {
                        name: name.clone(),
                        lo,
                        hi,
                        contains_full_data: lo <= f && f <= hi,
                    });
                }
                let mut rows = Vec::new();
                for (name, s) in dist.parameters.iter().zip(&dist.samples) {
                    for (b, (lo, hi, count)) in histogram(s, cfg.bins).into_iter().enumerate() {
                        rows.push(vec![name.clone(), b.to_string(), num(lo), num(hi), count.to_string()]);
                    }
                }
                let hist_header = strings(&["parameter", "bin", "bin_lo", "bin_hi", "count"]);
                write_rows(
                    &dir.join(format!("{}.hist.csv", outcome.slug)),
                    &prov,
                    &hist_header,
                    &rows,
                )?;
                if cfg.svg {
                    let doc = svg::histograms(&model.region, &dist.parameters, &dist.samples, &full, cfg.bins);
                    write_bytes(&dir.join(format!("{}.svg", outcome.slug)), doc.as_bytes())?;
                }
                RegionJackknife {
                    provenance: prov.clone(),
                    region: model.region.clone(),
                    usable: true,
                    iterations: dist.iterations,
                    converged: dist.converged,
                    non_converged: dist.non_converged,
                    warnings: dist.warnings,
                    quantile_levels: SUMMARY_QUANTILES.to_vec(),
                    summary,
                    interval_level: INTERVAL_LEVEL,
                    intervals,
                    samples: cfg.samples.then_some(dist.samples),
                }
            }
            Err(Error::UnusableDistribution { failed, iterations }) => {
                let msg = format!("{failed} of {iterations} refits did not converge; distribution unusable");
                eprintln!("warning: region '{}': {msg}", model.region);
                RegionJackknife {
                    provenance: prov.clone(),
                    region: model.region.clone(),
                    usable: false,
                    iterations,
                    converged: iterations - failed,
                    non_converged: failed,
                    warnings: vec![msg],
                    quantile_levels: SUMMARY_QUANTILES.to_vec(),
                    summary: Vec::new(),
                    interval_level: INTERVAL_LEVEL,
                    intervals: Vec::new(),
                    samples: None,
                }
            }
            Err(e) => {
                return Err(CliError::Input {
                    path: daily_path,
                    source: e,
                })
            }
        };
        write_json(&dir.join(format!("{}.json", outcome.slug)), &out)?;
        entries.push(JackknifeEntry {
            region: out.region,
            slug: outcome.slug.clone(),
            usable: out.usable,
        });
        eprintln!("jackknife: {} done", model.region);
    }
    let manifest = JackknifeManifest {
        provenance: prov,
        seed,
        iterations: cfg.iterations,
        regions: entries,
    };
    write_json(&layout.jackknife_manifest(), &manifest)
}

pub fn load_region(layout: &Layout, slug: &str) -> Result<RegionJackknife> {
    read_json(&layout.jackknife_dir().join(format!("{slug}.json")), "jackknife")
}
