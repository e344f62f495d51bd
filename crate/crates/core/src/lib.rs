//! Geometry-aware path loss modelling toolkit.
//!
//! The crate splits into six parts:
//!
//! * [`regionmap`] — geo-referenced region grids, straight-line traversal,
//!   penetration counting and LOS classification;
//! * [`models`] — the AMPLE / CI / ABG predictors, their parameter sets and
//!   preset files;
//! * [`fitting`] — maximum-likelihood extraction by fixed-step gradient
//!   descent with analytic gradients, plus the closed-form CI cross-check;
//! * [`metrics`] — RMSE, MAE, AHRE, AIC-selected distribution fits, PMDE and
//!   per-point timing;
//! * [`dataio`] — dataset files, filtering, binning and city-based
//!   extraction/validation splits;
//! * [`synth`] — seeded procedural maps and model-generated datasets.

// `!(x > 0.0)` deliberately treats NaN like a violation; `partial_cmp`
// phrasing would bury that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
pub mod fitting;
pub mod metrics;
pub mod models;
pub mod regionmap;
pub mod synth;

pub use dataio::{FilterSpec, RawDataset};
pub use fitting::{FitConfig, FitResult};
pub use metrics::{MetricsReport, ThrRange};
pub use models::{AbgParams, AmpleParams, CiParams, ModelKind, ModelParams, SamplePoint};
pub use regionmap::{GeoPoint, LineMatrix, Los, RegionCode, RegionMap};
