use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use zonerisk_core::Statistic;

#[derive(Debug, Parser)]
#[command(
    name = "zonerisk",
    version,
    about = "Regional risk-level model search and jackknife validation"
)]
pub struct Cli {
    #[command(flatten)]
    pub cfg: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate inputs, cache them and aggregate weekly panels.
    Ingest,
    /// National correlation matrix of the sixteen indicators.
    Correlate,
    /// Exhaustive subset search for every region.
    Search,
    /// Delete-one-day-per-week resampling of each selected model.
    Jackknife,
    /// Merge earlier outputs into report.json and report.txt.
    Report,
    /// Every stage in order.
    Run,
    /// Write a seeded synthetic dataset (daily, labels, populations, column map).
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Daily indicator CSV.
    #[arg(long, global = true)]
    pub daily: Option<PathBuf>,
    /// Weekly colour label CSV (region, week_start, week_end, colour).
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    /// Region population CSV (region, population).
    #[arg(long, global = true)]
    pub populations: Option<PathBuf>,
    /// Indicator column map (TOML); defaults to the Civil Protection schema.
    #[arg(long, global = true)]
    pub column_map: Option<PathBuf>,
    /// Colour word map (TOML); defaults to yellow/orange/red, white dropped.
    #[arg(long, global = true)]
    pub colour_map: Option<PathBuf>,
    /// Region name catalogue (TOML); defaults to the 21 Italian regions.
    #[arg(long, global = true)]
    pub regions: Option<PathBuf>,
    /// Cumulative explained variance required when choosing components.
    #[arg(long, global = true, default_value_t = 0.90)]
    pub threshold: f64,
    /// Upper bound on the number of components.
    #[arg(long, global = true)]
    pub cap: Option<usize>,
    /// Weekly aggregation of daily values.
    #[arg(long, global = true, default_value_t = Statistic::Mean)]
    pub statistic: Statistic,
    /// Resampling seed; required by `jackknife`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Jackknife iterations.
    #[arg(long, global = true, default_value_t = 1000)]
    pub iterations: usize,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "zonerisk-out")]
    pub out: PathBuf,
    /// Also store every jackknife sample in the per-region JSON.
    #[arg(long, global = true)]
    pub samples: bool,
    /// Also draw jackknife histograms as SVG.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Histogram bins per coefficient.
    #[arg(long, global = true, default_value_t = 30)]
    pub bins: usize,
}

impl RunConfig {
    pub fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(format!("--threshold {} outside (0, 1]", self.threshold));
        }
        if self.cap == Some(0) {
            return Err("--cap must be at least 1".into());
        }
        if self.iterations == 0 {
            return Err("--iterations must be at least 1".into());
        }
        if self.workers == Some(0) {
            return Err("--workers must be at least 1".into());
        }
        if self.bins == 0 {
            return Err("--bins must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Number of regions.
    #[arg(long, default_value_t = 3)]
    pub count: usize,
    /// Labelled weeks per region.
    #[arg(long, default_value_t = 48)]
    pub weeks: usize,
    /// Generator seed.
    #[arg(long = "synth-seed", default_value_t = 1)]
    pub synth_seed: u64,
}
