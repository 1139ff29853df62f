//! Ingestion of daily regional indicators and weekly risk labels, weekly
//! aggregation, and descriptive summaries.

mod daily;
mod indicator;
mod labels;
mod summary;
mod weekly;

pub use daily::{
    parse_daily_csv, ColumnKind, ColumnMap, ColumnSource, DailyIngestReport, DailyPanel, DateWindow, DroppedDay,
    IndicatorSource,
};
pub use indicator::{IndicatorId, RiskLevel, INDICATOR_COUNT, INDICATOR_NAMES};
pub use labels::{parse_label_csv, ColourMap, ColourTarget, LabelEntry, LabelReport, LabelSeries};
pub use summary::{correlation_matrix, population_share_by_colour, share_of, CorrelationMatrix, WeekShare};
pub use weekly::{aggregate_weekly, AggregationReport, RejectedWeek, Statistic, Week, WeeklyPanel, MIN_DAYS_PER_WEEK};
