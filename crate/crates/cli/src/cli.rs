//! Command-line definitions. Every flag that feeds a numeric library
//! precondition is passed through unchecked so range errors surface with the
//! library's own message and the documented exit code.

use std::path::PathBuf;
use std::str::FromStr;

use chrono::{NaiveDate, Weekday};
use clap::{Args, Parser, Subcommand};
use varcast::backtest::{BacktestConfig, LagSpec};
use varcast::ingest::{default_start, ColumnMap, TempUnit};
use varcast::var::Criterion;

use crate::commands::parse_iso_date;

pub const EXIT_CODE_HELP: &str = "\
Exit codes:
  0   success
  2   usage error
  3   file input/output failure
  4   input schema problem (missing columns, bad headers, name mismatches)
  5   parse failure (malformed cell, field, or manifest)
  6   unfillable gap in the date coverage
  7   not enough observations
  8   numerically degenerate input (collinear or constant columns)
  9   argument outside its documented range (lag, horizon, level, cutoff)
  10  manifest verification failure

Failures also emit a one-line JSON record on stderr:
  {\"error\":{\"kind\":...,\"exit_code\":...,\"message\":...}}";

/// Daily panel modeling pipeline: ingest, screen, fit, diagnose, forecast,
/// and backtest vector autoregressions over CSV data.
#[derive(Debug, Parser)]
#[command(name = "varcast", version, after_help = EXIT_CODE_HELP)]
pub struct Cli {
    /// Random seed recorded in the run manifest. Reserved for stochastic
    /// diagnostics; none of the current subcommands draw random numbers.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Join raw case and weather CSVs into the canonical daily frame.
    Ingest(IngestArgs),
    /// Correlation matrix of the frame's variables.
    Corr(CorrArgs),
    /// Engle-Granger cointegration of every other variable with the target.
    Coint(CointArgs),
    /// Criterion table over candidate lag orders with per-criterion argmins.
    SelectLag(SelectLagArgs),
    /// Fit a vector autoregression and save the model.
    Fit(FitArgs),
    /// Residual whiteness diagnostics for a saved model.
    Diagnose(DiagnoseArgs),
    /// Multi-step forecast with confidence bands.
    Forecast(ForecastArgs),
    /// Rolling-origin evaluation over historical cutoffs.
    Backtest(BacktestArgs),
    /// Replay a recorded run and verify it reproduces the same bytes.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Corr(_) => "corr",
            Command::Coint(_) => "coint",
            Command::SelectLag(_) => "select-lag",
            Command::Fit(_) => "fit",
            Command::Diagnose(_) => "diagnose",
            Command::Forecast(_) => "forecast",
            Command::Backtest(_) => "backtest",
            Command::Rerun(_) => "rerun",
        }
    }
}

fn parse_temp_unit(s: &str) -> Result<TempUnit, String> {
    match s {
        "celsius" => Ok(TempUnit::Celsius),
        "fahrenheit" => Ok(TempUnit::Fahrenheit),
        other => Err(format!("`{other}` is not `celsius` or `fahrenheit`")),
    }
}

fn parse_criterion(s: &str) -> Result<Criterion, String> {
    match s {
        "aic" => Ok(Criterion::Aic),
        "hqc" => Ok(Criterion::Hqc),
        "sc" => Ok(Criterion::Sc),
        "fpe" => Ok(Criterion::Fpe),
        other => Err(format!("`{other}` is not one of aic, hqc, sc, fpe")),
    }
}

fn parse_weekday(s: &str) -> Result<Weekday, String> {
    Weekday::from_str(s).map_err(|_| format!("`{s}` is not a weekday name"))
}

/// Lag order: a fixed positive integer or `auto` for criterion selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagChoice {
    Auto,
    Fixed(usize),
}

fn parse_lag(s: &str) -> Result<LagChoice, String> {
    if s == "auto" {
        return Ok(LagChoice::Auto);
    }
    s.parse::<usize>()
        .map(LagChoice::Fixed)
        .map_err(|_| format!("`{s}` is not `auto` or a lag order"))
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Case-count CSV (one row per day, cumulative and daily columns).
    #[arg(long)]
    pub covid: PathBuf,
    /// Weather CSV (one row per day).
    #[arg(long)]
    pub weather: PathBuf,
    /// First date to keep.
    #[arg(long, value_parser = parse_iso_date, default_value_t = default_start())]
    pub start: NaiveDate,
    /// Last date to keep (defaults to the end of the overlap).
    #[arg(long, value_parser = parse_iso_date)]
    pub end: Option<NaiveDate>,
    /// Unit the temperature column is measured in (recorded, not converted).
    #[arg(long, value_parser = parse_temp_unit, default_value = "celsius")]
    pub temp_unit: TempUnit,
    /// Source column holding daily new positives.
    #[arg(long, default_value = "positiveIncrease")]
    pub col_pos_increase: String,
    /// Source column holding cumulative deaths.
    #[arg(long, default_value = "death")]
    pub col_death_cum: String,
    /// Source column holding cumulative recoveries.
    #[arg(long, default_value = "recovered")]
    pub col_recovered_cum: String,
    /// Source column holding temperature.
    #[arg(long, default_value = "temperature")]
    pub col_temperature: String,
    /// Source column holding relative humidity.
    #[arg(long, default_value = "humidity")]
    pub col_humidity: String,
    /// Directory to write artifacts into.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

impl IngestArgs {
    pub fn column_map(&self) -> ColumnMap {
        ColumnMap {
            pos_increase: self.col_pos_increase.clone(),
            death_cum: self.col_death_cum.clone(),
            recovered_cum: self.col_recovered_cum.clone(),
            temperature: self.col_temperature.clone(),
            humidity: self.col_humidity.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct CorrArgs {
    /// Canonical frame CSV produced by `ingest`.
    #[arg(long)]
    pub frame: PathBuf,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CointArgs {
    /// Canonical frame CSV produced by `ingest`.
    #[arg(long)]
    pub frame: PathBuf,
    /// Variable every other column is tested against.
    #[arg(long, default_value = "pos_increase")]
    pub target: String,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectLagArgs {
    /// Canonical frame CSV produced by `ingest`.
    #[arg(long)]
    pub frame: PathBuf,
    /// Largest candidate lag order.
    #[arg(long = "pmax", default_value_t = 10)]
    pub p_max: usize,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Canonical frame CSV produced by `ingest`.
    #[arg(long)]
    pub frame: PathBuf,
    /// Lag order, or `auto` to minimize --criterion over 1..=--pmax.
    #[arg(long, value_parser = parse_lag, default_value = "auto")]
    pub lag: LagChoice,
    /// Largest candidate order for `--lag auto`.
    #[arg(long = "pmax", default_value_t = 10)]
    pub p_max: usize,
    /// Criterion minimized by `--lag auto`.
    #[arg(long, value_parser = parse_criterion, default_value = "aic")]
    pub criterion: Criterion,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Saved model JSON produced by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    /// The frame the model was fitted on.
    #[arg(long)]
    pub frame: PathBuf,
    /// Autocorrelation lags for the whiteness tests. Must exceed the fitted
    /// parameter count per equation; defaults to max(20, that count + 10).
    #[arg(long)]
    pub lb_lags: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Canonical frame CSV holding the forecast history.
    #[arg(long)]
    pub frame: PathBuf,
    /// Saved model JSON to forecast with. When absent, a model is fitted on
    /// the history using --lag/--pmax/--criterion.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Forecast origin: history is truncated after this date (defaults to
    /// the frame's last date). A supplied --model must have been fitted
    /// within the truncated window.
    #[arg(long, value_parser = parse_iso_date)]
    pub from: Option<NaiveDate>,
    /// Lag order for the internal fit, or `auto` (rejected with --model).
    #[arg(long, value_parser = parse_lag)]
    pub lag: Option<LagChoice>,
    /// Largest candidate order for `--lag auto`.
    #[arg(long = "pmax", default_value_t = 10)]
    pub p_max: usize,
    /// Criterion minimized by `--lag auto`.
    #[arg(long, value_parser = parse_criterion, default_value = "aic")]
    pub criterion: Criterion,
    /// Steps ahead to forecast.
    #[arg(long, default_value_t = 30)]
    pub horizon: usize,
    /// Confidence level for the bands.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Floor negative lower bounds at zero in the output.
    #[arg(long)]
    pub clip_zero: bool,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Canonical frame CSV to evaluate on.
    #[arg(long)]
    pub frame: PathBuf,
    /// Forecast origins (comma-separated dates present in the frame).
    #[arg(long, value_parser = parse_iso_date, value_delimiter = ',', required = true)]
    pub cutoffs: Vec<NaiveDate>,
    /// Steps to forecast past each cutoff.
    #[arg(long, default_value_t = 30)]
    pub horizon: usize,
    /// Lag order, or `auto` to minimize --criterion over 1..=--pmax on the
    /// earliest cutoff's window.
    #[arg(long, value_parser = parse_lag, default_value = "auto")]
    pub lag: LagChoice,
    /// Largest candidate order for `--lag auto`.
    #[arg(long = "pmax", default_value_t = 10)]
    pub p_max: usize,
    /// Criterion minimized by `--lag auto`.
    #[arg(long, value_parser = parse_criterion, default_value = "aic")]
    pub criterion: Criterion,
    /// Confidence level for the bands.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Keep only targets falling on this weekday in the comparison output.
    #[arg(long, value_parser = parse_weekday)]
    pub weekday: Option<Weekday>,
    /// Fit one model on the earliest cutoff's window and reuse it at every
    /// cutoff instead of re-estimating per cutoff.
    #[arg(long)]
    pub no_refit: bool,
    /// Re-run lag selection inside every cutoff's window (with --lag auto)
    /// instead of selecting once on the earliest window.
    #[arg(long)]
    pub reselect_lag: bool,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

impl BacktestArgs {
    pub fn to_config(&self) -> BacktestConfig {
        let lag = match self.lag {
            LagChoice::Fixed(p) => LagSpec::Fixed(p),
            LagChoice::Auto => LagSpec::Auto { p_max: self.p_max, criterion: self.criterion },
        };
        let mut config = BacktestConfig::new(self.cutoffs.clone(), lag);
        config.horizon = self.horizon;
        config.level = self.level;
        config.comparison_weekday = self.weekday;
        config.refit_per_cutoff = !self.no_refit;
        config.reselect_lag_per_cutoff = self.reselect_lag;
        config
    }
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// Manifest written by a previous run.
    pub manifest: PathBuf,
}
