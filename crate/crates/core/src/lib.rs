//! Vector-autoregression toolkit for daily panel data.
//!
//! The crate covers the full workflow for small multivariate systems observed
//! daily: loading and aligning raw CSV sources into a [`SeriesFrame`]
//! ([`ingest`]), descriptive statistics ([`series`]), unit-root and
//! cointegration screening ([`adf`], [`cointegration`]), residual whiteness
//! testing ([`ljung_box`]), VAR estimation with lag-order selection and
//! stability checks ([`var`]), h-step forecasting with confidence bands
//! ([`forecast`]), and rolling-origin backtesting ([`backtest`]).
//!
//! All computations are deterministic: no global state, no hidden RNG, and
//! any internal parallelism yields results identical to sequential
//! evaluation.

pub mod adf;
pub mod backtest;
pub mod cointegration;
pub mod error;
pub mod forecast;
pub mod ingest;
pub mod ljung_box;
mod mackinnon;
pub mod numfmt;
mod ols;
pub mod series;
pub mod sim;
pub mod store;
pub mod var;

pub use error::{Error, ErrorKind, Result};
pub use series::{acf, correlation_matrix, diff, SeriesFrame};

/// Crate version, for embedding in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
