//! Time-varying mean-group (TVMG) estimation for heterogeneous panels.
//!
//! The crate covers the full estimation pipeline:
//!
//! - [`panel`]: balanced panel construction from long-format records.
//! - [`kernel`]: kernel functions, bandwidth rules and time weights.
//! - [`local_wls`]: per-unit kernel-weighted least squares paths.
//! - [`mean_group`]: cross-sectional aggregation, bands and significance runs.
//! - [`bandwidth`]: leave-one-unit-out cross-validated bandwidth choice.
//! - [`robustness`]: leave-one-group-out influence and coefficient-shift tests.
//! - [`aggregate`]: single-series time-varying regression with block bootstrap bands.
//! - [`factors`]: stationarity transforms, annualization and principal components.
//! - [`dgp`]: synthetic panel and firm-framework simulators.
//!
//! Unit-level work runs on rayon when the `parallel` feature (on by default) is
//! enabled; without it the same code runs sequentially and yields identical
//! results.

pub mod aggregate;
pub mod bandwidth;
pub mod dgp;
pub mod error;
pub mod factors;
pub mod kernel;
pub mod local_wls;
pub mod mean_group;
pub mod panel;
pub mod par;
pub mod robustness;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
pub use kernel::{KernelKind, KernelSpec};
pub use mean_group::CoefficientPath;
pub use panel::Panel;
