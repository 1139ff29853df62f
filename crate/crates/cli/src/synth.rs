//! `zonerisk synth`: a seeded synthetic dataset in the raw input formats.

use std::fmt::Write;

use zonerisk_core::panel::IndicatorId;
use zonerisk_core::synthetic::{generate, SyntheticSpec};

use crate::args::SynthArgs;
use crate::error::{CliError, Result};
use crate::output::{write_bytes, Layout};

pub fn run(args: &SynthArgs, layout: &Layout) -> Result<()> {
    if args.count == 0 || args.weeks < 3 {
        return Err(CliError::Usage(
            "synth needs at least one region and three weeks".into(),
        ));
    }
    let spec = SyntheticSpec {
        seed: args.synth_seed,
        weeks: args.weeks,
        ..SyntheticSpec::default()
    }
    .with_regions(args.count);
    let (daily, labels) = generate(&spec)?;

    let mut buf = Vec::new();
    daily.write_csv(&mut buf)?;
    write_bytes(&layout.file("daily.csv"), &buf)?;
    let mut buf = Vec::new();
    labels.write_csv(&mut buf)?;
    write_bytes(&layout.file("labels.csv"), &buf)?;

    let mut pops = String::from("region,population\n");
    for (i, r) in spec.regions.iter().enumerate() {
        let _ = writeln!(pops, "{r},{}", 500_000 + 250_000 * i as u64);
    }
    write_bytes(&layout.file("populations.csv"), pops.as_bytes())?;

    let dates = daily.dates();
    let mut map = String::from("date_column = \"date\"\nregion_column = \"region\"\n\n[window]\n");
    let _ = writeln!(
        map,
        "start = \"{}\"\nend = \"{}\"\n\n[indicators]",
        dates[0],
        dates[dates.len() - 1]
    );
    for id in IndicatorId::all() {
        let _ = writeln!(map, "{id} = {{ column = \"{id}\", kind = \"increment\" }}");
    }
    write_bytes(&layout.file("column_map.toml"), map.as_bytes())?;
    eprintln!("synth: {} regions, {} weeks", args.count, args.weeks);
    Ok(())
}
