//! Fixtures shared by the benchmarks.

use zonerisk_core::panel::{aggregate_weekly, DailyPanel, LabelSeries, Statistic};
use zonerisk_core::search::RegionData;
use zonerisk_core::synthetic::{generate, SyntheticSpec};

/// One 48-week synthetic region: daily panel, labels and weekly data.
pub fn region(seed: u64) -> (DailyPanel, LabelSeries, RegionData) {
    let spec = SyntheticSpec {
        seed,
        ..SyntheticSpec::default()
    };
    let (daily, labels) = generate(&spec).expect("synthetic data is valid");
    let (panels, _) = aggregate_weekly(&daily, &labels, Statistic::Mean).expect("weeks are complete");
    let data = RegionData::from_panel(&panels[0]);
    (daily, labels, data)
}
