mod args;
mod correlate;
mod error;
mod ingest;
mod jackknife;
mod output;
mod report;
mod search;
mod svg;
mod synth;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, Result};
use crate::output::Layout;

fn run(cli: Cli) -> Result<()> {
    cli.cfg.validate().map_err(CliError::Usage)?;
    let layout = Layout::new(cli.cfg.out.clone());
    let cfg = &cli.cfg;
    match cli.command {
        Command::Ingest => ingest::run(cfg, &layout),
        Command::Correlate => correlate::run(&layout),
        Command::Search => search::run(cfg, &layout),
        Command::Jackknife => jackknife::run(cfg, &layout),
        Command::Report => report::run(&layout),
        Command::Run => {
            ingest::run(cfg, &layout)?;
            correlate::run(&layout)?;
            search::run(cfg, &layout)?;
            jackknife::run(cfg, &layout)?;
            report::run(&layout)
        }
        Command::Synth(args) => synth::run(&args, &layout),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
