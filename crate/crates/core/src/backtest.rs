//! Rolling-origin backtesting: fit through a cutoff, forecast ahead, and
//! compare against the held-out rows.
//!
//! For every cutoff date the frame is truncated to rows on or before it, a
//! model is fitted (or a shared one reused), and an `h`-step forecast is
//! joined with whatever actual values the frame holds past the cutoff.
//! Rows whose target dates run past the frame keep empty actuals. The fit
//! for a cutoff never sees data after that cutoff.
//!
//! Cutoffs are processed in parallel; results are merged in cutoff order,
//! so reports are bit-identical across runs and thread counts.

use std::io::Write;

use chrono::{NaiveDate, Weekday};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forecast::{forecast, Forecast};
use crate::numfmt::sig6;
use crate::series::SeriesFrame;
use crate::var::{fit_var, select_lag, Criterion, VarModel};

/// How the lag order is chosen for backtest fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagSpec {
    /// Use this order everywhere.
    Fixed(usize),
    /// Choose the order that minimizes `criterion` over `1..=p_max`.
    Auto { p_max: usize, criterion: Criterion },
}

impl LagSpec {
    /// Largest order this spec can produce, used for cutoff validation.
    fn bound(self) -> usize {
        match self {
            LagSpec::Fixed(p) => p,
            LagSpec::Auto { p_max, .. } => p_max,
        }
    }
}

/// Backtest protocol parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    /// Forecast origins. Each must be a frame date with enough history.
    pub cutoffs: Vec<NaiveDate>,
    /// Steps to forecast past each cutoff.
    pub horizon: usize,
    /// Lag-order choice.
    pub lag: LagSpec,
    /// Confidence level for the bands.
    pub level: f64,
    /// Optional weekday filter for comparison output. Rows are always
    /// produced daily; this only selects [`BacktestReport::comparison_rows`].
    pub comparison_weekday: Option<Weekday>,
    /// Re-estimate coefficients at every cutoff (default). When false, one
    /// model is fitted at the earliest cutoff and reused, which still never
    /// looks past any cutoff.
    pub refit_per_cutoff: bool,
    /// With [`LagSpec::Auto`], rerun order selection inside every window
    /// instead of selecting once at the earliest cutoff (default false).
    pub reselect_lag_per_cutoff: bool,
}

impl BacktestConfig {
    /// Config with the documented defaults: horizon 30, level 0.95, no
    /// weekday filter, refit per cutoff, select the lag once.
    pub fn new(cutoffs: Vec<NaiveDate>, lag: LagSpec) -> Self {
        Self {
            cutoffs,
            horizon: 30,
            lag,
            level: 0.95,
            comparison_weekday: None,
            refit_per_cutoff: true,
            reselect_lag_per_cutoff: false,
        }
    }
}

/// One (cutoff, target date, variable) comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestRow {
    pub cutoff: NaiveDate,
    pub target_date: NaiveDate,
    pub variable: String,
    /// Held-out observation, when the frame extends this far.
    pub actual: Option<f64>,
    pub predicted: f64,
    pub lower: f64,
    pub upper: f64,
    /// `lower <= actual <= upper`; absent exactly when `actual` is absent.
    pub covered: Option<bool>,
    /// `|actual - predicted|`; absent exactly when `actual` is absent.
    pub abs_error: Option<f64>,
}

/// Per-cutoff aggregate of a backtest's rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffSummary {
    pub cutoff: NaiveDate,
    /// Fraction of covered rows among rows with actuals; absent when no
    /// row has an actual.
    pub coverage_rate: Option<f64>,
    /// Mean absolute error over rows with actuals; absent when none.
    pub mean_abs_error: Option<f64>,
    /// Mean band width over all rows.
    pub mean_interval_width: f64,
}

/// Full backtest output: daily rows, per-cutoff summaries, and the lag
/// order each cutoff used.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub rows: Vec<BacktestRow>,
    pub summary: Vec<CutoffSummary>,
    /// Lag order used at each cutoff, in cutoff order.
    pub lags_used: Vec<(NaiveDate, usize)>,
    /// Weekday filter carried over from the config.
    pub comparison_weekday: Option<Weekday>,
}

impl BacktestReport {
    /// Rows for side-by-side comparison tables: all rows, or only those
    /// whose target date falls on the configured weekday.
    pub fn comparison_rows(&self) -> Vec<&BacktestRow> {
        match self.comparison_weekday {
            None => self.rows.iter().collect(),
            Some(wd) => self
                .rows
                .iter()
                .filter(|r| chrono::Datelike::weekday(&r.target_date) == wd)
                .collect(),
        }
    }
}

fn annotate(cutoff: NaiveDate) -> impl Fn(Error) -> Error {
    move |e| Error::BacktestCutoff {
        cutoff,
        source: Box::new(e),
    }
}

/// Runs the rolling-origin protocol.
///
/// # Errors
///
/// * [`Error::InvalidHorizon`] / [`Error::InvalidLevel`] — out-of-range
///   parameters.
/// * [`Error::InsufficientData`] — no cutoffs given.
/// * [`Error::InvalidCutoff`] — a cutoff outside the frame, duplicated, or
///   with fewer than `lag + 30` observations on or before it.
/// * [`Error::BacktestCutoff`] — a fit, selection, or forecast failure,
///   annotated with the cutoff it occurred at.
pub fn run_backtest(frame: &SeriesFrame, config: &BacktestConfig) -> Result<BacktestReport> {
    if config.horizon == 0 {
        return Err(Error::InvalidHorizon { horizon: 0 });
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(Error::InvalidLevel {
            level: config.level,
        });
    }
    if config.cutoffs.is_empty() {
        return Err(Error::InsufficientData {
            context: "backtest cutoffs",
            needed: 1,
            got: 0,
        });
    }

    let mut cutoffs = config.cutoffs.clone();
    cutoffs.sort();
    for pair in cutoffs.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::InvalidCutoff {
                cutoff: pair[0],
                reason: "duplicate cutoff".to_string(),
            });
        }
    }
    let min_train = config.lag.bound() + 30;
    for &cutoff in &cutoffs {
        let idx = frame.date_index(cutoff).ok_or_else(|| Error::InvalidCutoff {
            cutoff,
            reason: format!(
                "outside the frame's date range {}..{}",
                frame.first_date(),
                frame.last_date()
            ),
        })?;
        let train_rows = idx + 1;
        if train_rows < min_train {
            return Err(Error::InvalidCutoff {
                cutoff,
                reason: format!(
                    "needs at least {min_train} observations on or before it, found {train_rows}"
                ),
            });
        }
    }

    // Shared decisions are made on the earliest window so that nothing any
    // cutoff reuses ever depends on data past that cutoff.
    let earliest = cutoffs[0];
    let earliest_frame = frame.truncate_through(earliest).map_err(annotate(earliest))?;
    let shared_lag: Option<usize> = match config.lag {
        LagSpec::Fixed(p) => Some(p),
        LagSpec::Auto { p_max, criterion } => {
            if config.reselect_lag_per_cutoff {
                None
            } else {
                let table = select_lag(&earliest_frame, p_max).map_err(annotate(earliest))?;
                Some(table.chosen_by(criterion))
            }
        }
    };
    let shared_model: Option<VarModel> = if config.refit_per_cutoff {
        None
    } else {
        let p = match shared_lag {
            Some(p) => p,
            None => match config.lag {
                LagSpec::Auto { p_max, criterion } => {
                    let table = select_lag(&earliest_frame, p_max).map_err(annotate(earliest))?;
                    table.chosen_by(criterion)
                }
                LagSpec::Fixed(p) => p,
            },
        };
        Some(fit_var(&earliest_frame, p).map_err(annotate(earliest))?)
    };

    let per_cutoff: Vec<(Vec<BacktestRow>, (NaiveDate, usize))> = cutoffs
        .par_iter()
        .map(|&cutoff| -> Result<(Vec<BacktestRow>, (NaiveDate, usize))> {
            let wrap = annotate(cutoff);
            let window = frame.truncate_through(cutoff).map_err(&wrap)?;
            let fc: Forecast;
            let lag_used: usize;
            if let Some(model) = &shared_model {
                lag_used = model.p;
                fc = forecast(model, &window, config.horizon, config.level).map_err(&wrap)?;
            } else {
                let p = match shared_lag {
                    Some(p) => p,
                    None => match config.lag {
                        LagSpec::Auto { p_max, criterion } => {
                            let table = select_lag(&window, p_max).map_err(&wrap)?;
                            table.chosen_by(criterion)
                        }
                        LagSpec::Fixed(p) => p,
                    },
                };
                let model = fit_var(&window, p).map_err(&wrap)?;
                lag_used = p;
                fc = forecast(&model, &window, config.horizon, config.level).map_err(&wrap)?;
            }

            let dates = fc.target_dates();
            let mut rows = Vec::with_capacity(config.horizon * frame.width());
            for s in 0..config.horizon {
                for (v, name) in fc.names.iter().enumerate() {
                    let predicted = fc.point[(s, v)];
                    let lower = fc.lower[(s, v)];
                    let upper = fc.upper[(s, v)];
                    let actual = frame.value_at(dates[s], v);
                    rows.push(BacktestRow {
                        cutoff,
                        target_date: dates[s],
                        variable: name.clone(),
                        actual,
                        predicted,
                        lower,
                        upper,
                        covered: actual.map(|a| lower <= a && a <= upper),
                        abs_error: actual.map(|a| (a - predicted).abs()),
                    });
                }
            }
            Ok((rows, (cutoff, lag_used)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut lags_used = Vec::with_capacity(cutoffs.len());
    for (mut chunk, lag) in per_cutoff {
        rows.append(&mut chunk);
        lags_used.push(lag);
    }
    let summary = coverage_summary(&rows);
    Ok(BacktestReport {
        rows,
        summary,
        lags_used,
        comparison_weekday: config.comparison_weekday,
    })
}

/// Aggregates rows into per-cutoff summaries, ordered by cutoff.
///
/// `coverage_rate` is the fraction of covered rows among rows with actuals
/// (absent when the cutoff has no actuals at all); `mean_abs_error`
/// likewise; `mean_interval_width` averages `upper - lower` over every row.
pub fn coverage_summary(rows: &[BacktestRow]) -> Vec<CutoffSummary> {
    let mut cutoffs: Vec<NaiveDate> = rows.iter().map(|r| r.cutoff).collect();
    cutoffs.sort();
    cutoffs.dedup();

    cutoffs
        .into_iter()
        .map(|cutoff| {
            let group: Vec<&BacktestRow> = rows.iter().filter(|r| r.cutoff == cutoff).collect();
            let with_actual = group.iter().filter(|r| r.actual.is_some()).count();
            let covered = group
                .iter()
                .filter(|r| r.covered == Some(true))
                .count();
            let width_sum: f64 = group.iter().map(|r| r.upper - r.lower).sum();
            let abs_sum: f64 = group.iter().filter_map(|r| r.abs_error).sum();
            CutoffSummary {
                cutoff,
                coverage_rate: (with_actual > 0).then(|| covered as f64 / with_actual as f64),
                mean_abs_error: (with_actual > 0).then(|| abs_sum / with_actual as f64),
                mean_interval_width: width_sum / group.len() as f64,
            }
        })
        .collect()
}

fn opt_display<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes rows as CSV with header
/// `cutoff,target_date,variable,actual,predicted,lower,upper,covered`;
/// absent actuals and coverage flags become empty fields. Actuals are data
/// values and keep their exact decimal form; predictions and bounds are
/// computed statistics rendered to 6 significant digits.
pub fn write_backtest_csv<'a>(
    rows: impl IntoIterator<Item = &'a BacktestRow>,
    out: &mut impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "cutoff",
        "target_date",
        "variable",
        "actual",
        "predicted",
        "lower",
        "upper",
        "covered",
    ])?;
    for r in rows {
        w.write_record([
            r.cutoff.to_string(),
            r.target_date.to_string(),
            r.variable.clone(),
            opt_display(r.actual),
            sig6(r.predicted),
            sig6(r.lower),
            sig6(r.upper),
            opt_display(r.covered),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes per-cutoff summaries as CSV with header
/// `cutoff,coverage_rate,mean_abs_error,mean_interval_width`; absent
/// aggregates become empty fields.
pub fn write_summary_csv(summaries: &[CutoffSummary], out: &mut impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cutoff", "coverage_rate", "mean_abs_error", "mean_interval_width"])?;
    for s in summaries {
        w.write_record([
            s.cutoff.to_string(),
            opt_display(s.coverage_rate.map(sig6)),
            opt_display(s.mean_abs_error.map(sig6)),
            sig6(s.mean_interval_width),
        ])?;
    }
    w.flush()?;
    Ok(())
}
