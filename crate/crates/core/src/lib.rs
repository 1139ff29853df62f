//! Regional risk-level modelling from daily epidemic indicators.
//!
//! The pipeline aggregates sixteen daily indicators per region onto the
//! weeks defined by a label file, reduces every non-empty indicator subset
//! with correlation-matrix PCA, fits a proportional-odds model on the leading
//! components, and keeps the subset with the lowest in-sample
//! misclassification error. A delete-one-day-per-week jackknife then checks
//! how stable the selected model's coefficients are.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod jackknife;
pub mod linalg;
pub mod ordreg;
pub mod panel;
pub mod pca;
pub mod regions;
pub mod search;
pub mod synthetic;

pub use error::{Error, ErrorKind, Result};
pub use linalg::Matrix;
pub use ordreg::{FitOptions, FitResult, OrdinalModel};
pub use panel::{DailyPanel, IndicatorId, LabelSeries, RiskLevel, Statistic, WeeklyPanel};
pub use pca::{FrozenTransform, PcaModel, StandardScaler};
pub use search::{EvaluationRecord, SearchConfig, SubsetMask};
