//! Mixed-frequency volatility econometrics.
//!
//! The crate is organised bottom-up:
//!
//! - [`timeseries`]: CSV ingestion, differencing, calendar alignment and the
//!   [`MixedPanel`] that pairs daily returns with low-frequency covariates.
//! - [`diagnostics`]: descriptive statistics, normality / serial-correlation /
//!   ARCH / unit-root tests, Spearman correlation and AR(p) volatility proxies.
//! - [`weights`]: beta and exponential lag polynomials for MIDAS filters.
//! - [`optimizer`]: transformed-space quasi-Newton maximisation, numerical
//!   Hessians and standard errors.
//! - [`garch_midas`]: the GARCH-MIDAS model with GJR short-run dynamics,
//!   plus a plain GJR-GARCH(1,1) used as a nested benchmark.
//! - [`dcc`]: two-step DCC-GARCH and DCC-MIDAS correlation models.
//! - [`report`]: serialisable fit and diagnostics reports.

pub mod dcc;
pub mod diagnostics;
pub mod error;
pub mod garch_midas;
pub mod optimizer;
pub mod report;
pub mod timeseries;
pub mod weights;

pub use error::{Error, Result};
pub use timeseries::{DatedSeries, Frequency, MixedPanel};
pub use weights::WeightScheme;
