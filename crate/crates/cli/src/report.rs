//! `zonerisk report`: one JSON and one text summary merging every stage.

use std::fmt::Write;

use serde::Serialize;
use serde_json::json;
use zonerisk_core::panel::{parse_label_csv, population_share_by_colour, ColourMap, WeekShare};
use zonerisk_core::search::PcCountTally;

use crate::error::{CliError, Result, WithPath};
use crate::ingest::{read_populations, IngestReport, RegionEntry};
use crate::jackknife::{self, JackknifeManifest, RegionJackknife};
use crate::output::{num, read_json, read_prerequisite, write_bytes, write_json, write_rows, Layout, Provenance};
use crate::search::{strings, BestModel, SearchManifest};

#[derive(Debug, Serialize)]
struct IngestSection {
    statistic: String,
    regions: Vec<RegionEntry>,
    days_retained: usize,
    dropped_days: usize,
    dropped_labels: usize,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ModelRow {
    region: String,
    indicators: Vec<String>,
    n_vars: usize,
    r: usize,
    cum_var: f64,
    misclassified: usize,
    n_weeks: usize,
    error: f64,
    converged: bool,
    eta: [f64; 2],
    beta: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct SearchSection {
    threshold: f64,
    cap: Option<usize>,
    tie_break: String,
    models: Vec<ModelRow>,
    failed_regions: Vec<(String, String)>,
    pc_counts: PcCountTally,
    pc_fractions: [f64; 4],
}

#[derive(Debug, Serialize)]
struct Report {
    provenance: Provenance,
    ingest: IngestSection,
    search: SearchSection,
    jackknife: Option<Vec<RegionJackknife>>,
    population_share: Option<Vec<WeekShare>>,
}

fn stale(path: std::path::PathBuf, stage: &'static str) -> CliError {
    CliError::Stale { path, stage }
}

pub fn run(layout: &Layout) -> Result<()> {
    let ingest = IngestReport::load(layout)?;
    let search = SearchManifest::load(layout)?;
    if search.provenance.config["upstream"] != json!(ingest.provenance.config_hash) {
        return Err(stale(layout.search_manifest(), "search"));
    }
    let jk = if layout.jackknife_manifest().is_file() {
        let m = JackknifeManifest::load(layout)?;
        if m.provenance.config["upstream"] != json!(search.provenance.config_hash) {
            return Err(stale(layout.jackknife_manifest(), "jackknife"));
        }
        Some(m)
    } else {
        None
    };
    let prov = Provenance::new(
        "report",
        json!({
            "ingest": ingest.provenance.config_hash,
            "search": search.provenance.config_hash,
            "jackknife": jk.as_ref().map(|m| m.provenance.config_hash.clone()),
        }),
    );

    let mut models = Vec::new();
    let mut failed = Vec::new();
    let mut tally = PcCountTally::default();
    for o in &search.regions {
        tally.merge(&o.pc_counts);
        if o.best_mask.is_none() {
            failed.push((o.region.clone(), o.failure.clone().unwrap_or_default()));
            continue;
        }
        let m: BestModel = read_json(&layout.best(&o.slug), "search")?;
        models.push(ModelRow {
            region: m.region,
            indicators: m.indicators.iter().map(|i| i.id.to_string()).collect(),
            n_vars: m.n_vars,
            r: m.r,
            cum_var: m.cum_var,
            misclassified: m.misclassified,
            n_weeks: m.n_weeks,
            error: m.error,
            converged: m.converged,
            eta: m.eta,
            beta: m.beta,
        });
    }

    let jackknife = match &jk {
        Some(m) => Some(
            m.regions
                .iter()
                .map(|e| jackknife::load_region(layout, &e.slug))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };

    let population_share = if ingest.populations {
        let pops = read_populations(layout)?;
        let path = layout.labels_cache();
        let bytes = read_prerequisite(&path, "ingest")?;
        let (labels, _) = parse_label_csv(bytes.as_slice(), &ColourMap::default()).at(&path)?;
        let shares = population_share_by_colour(&labels, &pops).at(layout.populations_cache())?;
        let rows: Vec<Vec<String>> = shares
            .iter()
            .map(|w| {
                vec![
                    w.week_start.to_string(),
                    w.week_end.to_string(),
                    num(w.shares[0]),
                    num(w.shares[1]),
                    num(w.shares[2]),
                    num(w.covered),
                ]
            })
            .collect();
        let header = strings(&["week_start", "week_end", "L", "M", "H", "covered"]);
        write_rows(&layout.file("fig1_population_share.csv"), &prov, &header, &rows)?;
        Some(shares)
    } else {
        None
    };

    let report = Report {
        provenance: prov,
        ingest: IngestSection {
            statistic: ingest.statistic.to_string(),
            regions: ingest.regions,
            days_retained: ingest.daily.days_retained,
            dropped_days: ingest.daily.dropped_days.len(),
            dropped_labels: ingest.labels.dropped.values().sum(),
            warnings: ingest.warnings,
        },
        search: SearchSection {
            threshold: search.threshold,
            cap: search.cap,
            tie_break: search.tie_break,
            models,
            failed_regions: failed,
            pc_fractions: tally.fractions(),
            pc_counts: tally,
        },
        jackknife,
        population_share,
    };
    write_json(&layout.file("report.json"), &report)?;
    write_bytes(&layout.file("report.txt"), text(&report).as_bytes())?;
    Ok(())
}

fn text(r: &Report) -> String {
    let mut s = String::new();
    let p = &r.provenance;
    let _ = writeln!(s, "{} {} report (config sha256 {})", p.tool, p.version, p.config_hash);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Ingest: {} regions, {} days retained, {} days dropped, weekly {}",
        r.ingest.regions.len(),
        r.ingest.days_retained,
        r.ingest.dropped_days,
        r.ingest.statistic
    );
    for w in &r.ingest.warnings {
        let _ = writeln!(s, "  warning: {w}");
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Selected models (threshold {:.2}; ties: {})",
        r.search.threshold, r.search.tie_break
    );
    let _ = writeln!(
        s,
        "{:<24} {:>4} {:>3} {:>8} {:>8}  indicators",
        "region", "vars", "PCs", "cum%", "error%"
    );
    for m in &r.search.models {
        let _ = writeln!(
            s,
            "{:<24} {:>4} {:>3} {:>8.2} {:>8.2}  {}",
            m.region,
            m.n_vars,
            m.r,
            100.0 * m.cum_var,
            100.0 * m.error,
            m.indicators.join(" ")
        );
    }
    for (region, why) in &r.search.failed_regions {
        let _ = writeln!(s, "{region:<24} no model: {why}");
    }
    let f = r.search.pc_fractions;
    let _ = writeln!(
        s,
        "\nComponents selected over {} valid subsets: 1 PC {:.2}%, 2 PCs {:.2}%, 3 PCs {:.2}%, 4+ PCs {:.2}%",
        r.search.pc_counts.total(),
        100.0 * f[0],
        100.0 * f[1],
        100.0 * f[2],
        100.0 * f[3]
    );
    match &r.jackknife {
        Some(regions) => {
            let _ = writeln!(s, "\nJackknife 99% intervals");
            for j in regions {
                if !j.usable {
                    let _ = writeln!(
                        s,
                        "{:<24} unusable ({} of {} refits failed)",
                        j.region, j.non_converged, j.iterations
                    );
                    continue;
                }
                let parts: Vec<String> = j
                    .intervals
                    .iter()
                    .map(|i| format!("{} [{:.3}, {:.3}]", i.name, i.lo, i.hi))
                    .collect();
                let _ = writeln!(
                    s,
                    "{:<24} {}/{} converged  {}",
                    j.region,
                    j.converged,
                    j.iterations,
                    parts.join("  ")
                );
            }
        }
        None => {
            let _ = writeln!(s, "\nJackknife: not run");
        }
    }
    if let Some(shares) = &r.population_share {
        let _ = writeln!(
            s,
            "\nPopulation share by level: {} label weeks (fig1_population_share.csv)",
            shares.len()
        );
    }
    s
}
