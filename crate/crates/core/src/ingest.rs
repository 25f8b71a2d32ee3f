//! CSV ingestion: aligning a case-count file and a weather file into one
//! daily frame.
//!
//! The case file supplies daily positive increases and cumulative death /
//! recovered counts; the weather file supplies temperature and humidity.
//! Dates may arrive in any row order and in either ISO-8601 (`2020-03-25`)
//! or compact (`20200325`) form. The two sources are joined on date over
//! their overlapping range (optionally narrowed by the spec's start/end),
//! and the result is a strictly consecutive daily [`SeriesFrame`] with the
//! canonical columns
//! `pos_increase,death_cum,recovered_cum,temperature,humidity`.
//!
//! A date missing from one source for a single day is filled: weather
//! columns by linear interpolation between the neighboring days, cumulative
//! counts by carrying the previous value forward with a zero attributed to
//! the daily increase. Runs of two or more missing days are an error.
//! Cumulative columns that decrease (source corrections) are clamped to the
//! previous value. Every fill and clamp is listed in the accompanying
//! [`LoadReport`] — nothing is repaired silently.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::SeriesFrame;

/// Canonical output column order.
pub const CANONICAL_COLUMNS: [&str; 5] = [
    "pos_increase",
    "death_cum",
    "recovered_cum",
    "temperature",
    "humidity",
];

/// First frame date used when a spec does not name one.
pub fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 3, 25).expect("valid calendar date")
}

/// Source header names for the five canonical columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub pos_increase: String,
    pub death_cum: String,
    pub recovered_cum: String,
    pub temperature: String,
    pub humidity: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            pos_increase: "positiveIncrease".to_string(),
            death_cum: "death".to_string(),
            recovered_cum: "recovered".to_string(),
            temperature: "temperature".to_string(),
            humidity: "humidity".to_string(),
        }
    }
}

/// Unit the temperature column is expressed in. Metadata only: values are
/// stored as given, and model estimates are covariant under affine
/// rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TempUnit {
    #[default]
    Celsius,
    Fahrenheit,
}

impl TempUnit {
    pub fn label(self) -> &'static str {
        match self {
            TempUnit::Celsius => "celsius",
            TempUnit::Fahrenheit => "fahrenheit",
        }
    }
}

/// Everything needed to load and align the two sources.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestSpec {
    pub covid_path: PathBuf,
    pub weather_path: PathBuf,
    pub columns: ColumnMap,
    /// Inclusive first date to keep; `None` takes everything available.
    pub start: Option<NaiveDate>,
    /// Inclusive last date to keep; `None` takes everything available.
    pub end: Option<NaiveDate>,
    pub temp_unit: TempUnit,
}

impl IngestSpec {
    /// Spec with default column names, the default start date, no end
    /// date, and Celsius temperatures.
    pub fn new(covid_path: impl Into<PathBuf>, weather_path: impl Into<PathBuf>) -> Self {
        Self {
            covid_path: covid_path.into(),
            weather_path: weather_path.into(),
            columns: ColumnMap::default(),
            start: Some(default_start()),
            end: None,
            temp_unit: TempUnit::default(),
        }
    }
}

/// How a missing value was filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillMethod {
    /// Midpoint of the neighboring days (weather columns).
    Interpolated,
    /// Previous day's value repeated (cumulative counts).
    CarriedForward,
    /// Zero attributed to a daily-increase column on a filled day.
    ZeroAttributed,
}

impl FillMethod {
    fn label(self) -> &'static str {
        match self {
            FillMethod::Interpolated => "interpolated",
            FillMethod::CarriedForward => "carried forward",
            FillMethod::ZeroAttributed => "attributed 0",
        }
    }
}

/// One filled (date, column) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GapFill {
    pub date: NaiveDate,
    pub column: &'static str,
    pub value: f64,
    pub method: FillMethod,
}

/// One clamped cumulative correction.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityClamp {
    pub date: NaiveDate,
    pub column: &'static str,
    pub reported: f64,
    pub clamped_to: f64,
}

/// Record of everything the loader did.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub covid_path: String,
    pub weather_path: String,
    pub covid_rows_read: usize,
    pub weather_rows_read: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub rows: usize,
    pub temp_unit: TempUnit,
    pub gap_fills: Vec<GapFill>,
    pub clamps: Vec<MonotonicityClamp>,
}

impl LoadReport {
    /// Plain-text rendering, one line per fill/clamp.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "case file: {} ({} rows read)", self.covid_path, self.covid_rows_read);
        let _ = writeln!(
            s,
            "weather file: {} ({} rows read)",
            self.weather_path, self.weather_rows_read
        );
        let _ = writeln!(s, "temperature unit: {}", self.temp_unit.label());
        let _ = writeln!(s, "frame: {} rows, {} through {}", self.rows, self.start, self.end);
        let _ = writeln!(s, "filled gaps: {}", self.gap_fills.len());
        for g in &self.gap_fills {
            let _ = writeln!(s, "  {} {}: {} {}", g.date, g.column, g.method.label(), g.value);
        }
        let _ = writeln!(s, "clamped cumulative corrections: {}", self.clamps.len());
        for c in &self.clamps {
            let _ = writeln!(
                s,
                "  {} {}: reported {} clamped to {}",
                c.date, c.column, c.reported, c.clamped_to
            );
        }
        s
    }
}

fn parse_date(text: &str) -> Option<NaiveDate> {
    let t = text.trim();
    NaiveDate::parse_from_str(t, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(t, "%Y%m%d"))
        .ok()
}

fn prev_day(d: NaiveDate) -> NaiveDate {
    d.checked_sub_days(Days::new(1)).expect("date within calendar range")
}

fn next_day(d: NaiveDate) -> NaiveDate {
    d.checked_add_days(Days::new(1)).expect("date within calendar range")
}

/// Reads one source file into a date-keyed table of the mapped columns.
fn read_source(
    path: &Path,
    mapped: &[(&'static str, &str)],
) -> Result<(BTreeMap<NaiveDate, Vec<f64>>, usize)> {
    let label = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::File {
        path: label.clone(),
        source: e,
    })?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));

    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Option<usize> { headers.iter().position(|h| h.trim() == name) };
    let date_idx = find("date").ok_or_else(|| Error::Schema {
        file: label.clone(),
        detail: "missing column \"date\"".to_string(),
    })?;
    let mut col_idx = Vec::with_capacity(mapped.len());
    for (canonical, source) in mapped {
        let idx = find(source).ok_or_else(|| Error::Schema {
            file: label.clone(),
            detail: format!("missing column {source:?} (mapped to {canonical})"),
        })?;
        col_idx.push(idx);
    }

    let mut table = BTreeMap::new();
    let mut rows_read = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2; // 1-based, counting the header line
        rows_read += 1;
        let raw_date = record.get(date_idx).unwrap_or("");
        let date = parse_date(raw_date).ok_or_else(|| Error::Parse {
            file: label.clone(),
            row,
            column: "date".to_string(),
            detail: format!("unparseable date {raw_date:?}"),
        })?;
        let mut values = Vec::with_capacity(mapped.len());
        for ((canonical, source), &idx) in mapped.iter().zip(&col_idx) {
            let raw = record.get(idx).unwrap_or("").trim();
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                file: label.clone(),
                row,
                column: format!("{source} ({canonical})"),
                detail: format!("unparseable number {raw:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    file: label.clone(),
                    row,
                    column: format!("{source} ({canonical})"),
                    detail: format!("non-finite value {raw:?}"),
                });
            }
            values.push(value);
        }
        if table.insert(date, values).is_some() {
            return Err(Error::Schema {
                file: label,
                detail: format!("duplicate date {date}"),
            });
        }
    }
    if table.is_empty() {
        return Err(Error::Schema {
            file: label,
            detail: "no data rows".to_string(),
        });
    }
    Ok((table, rows_read))
}

/// The true extent of the source's missing-day run containing `date`.
fn source_gap_span(table: &BTreeMap<NaiveDate, Vec<f64>>, date: NaiveDate) -> (NaiveDate, NaiveDate) {
    let first = *table.keys().next().expect("nonempty table");
    let last = *table.keys().next_back().expect("nonempty table");
    let mut lo = date;
    while lo > first && !table.contains_key(&prev_day(lo)) {
        lo = prev_day(lo);
    }
    let mut hi = date;
    while hi < last && !table.contains_key(&next_day(hi)) {
        hi = next_day(hi);
    }
    (lo, hi)
}

/// Materializes one source over `lo..=hi`, filling single-day gaps with
/// `fill` (given previous and next day values) and recording what was
/// filled.
fn resolve_source(
    table: &BTreeMap<NaiveDate, Vec<f64>>,
    lo: NaiveDate,
    hi: NaiveDate,
    gap_label: &'static str,
    fill: impl Fn(&[f64], &[f64]) -> Vec<(f64, FillMethod)>,
    columns: &[&'static str],
    fills: &mut Vec<GapFill>,
) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut date = lo;
    loop {
        if let Some(values) = table.get(&date) {
            rows.push(values.clone());
        } else {
            let prev = table.get(&prev_day(date));
            let next = table.get(&next_day(date));
            match (prev, next) {
                (Some(p), Some(n)) => {
                    let filled = fill(p, n);
                    for ((value, method), column) in filled.iter().zip(columns) {
                        fills.push(GapFill {
                            date,
                            column,
                            value: *value,
                            method: *method,
                        });
                    }
                    rows.push(filled.into_iter().map(|(v, _)| v).collect());
                }
                _ => {
                    let (gap_lo, gap_hi) = source_gap_span(table, date);
                    let days = (gap_hi - gap_lo).num_days() as usize + 1;
                    return Err(Error::UnfillableGap {
                        column: gap_label.to_string(),
                        start: gap_lo,
                        end: gap_hi,
                        days,
                    });
                }
            }
        }
        if date == hi {
            break;
        }
        date = next_day(date);
    }
    Ok(rows)
}

/// Loads, joins, gap-fills, and validates the two sources.
///
/// # Errors
///
/// * [`Error::Schema`] — unreadable file, missing mapped column, duplicate
///   date, or no data rows.
/// * [`Error::Parse`] — unparseable date or number, located by row and
///   column.
/// * [`Error::UnfillableGap`] — two or more consecutive missing days in one
///   source within the requested range.
/// * [`Error::EmptyJoin`] — sources (and range) share no dates.
pub fn load_frame(spec: &IngestSpec) -> Result<(SeriesFrame, LoadReport)> {
    let cols = &spec.columns;
    let covid_mapped: Vec<(&'static str, &str)> = vec![
        ("pos_increase", cols.pos_increase.as_str()),
        ("death_cum", cols.death_cum.as_str()),
        ("recovered_cum", cols.recovered_cum.as_str()),
    ];
    let weather_mapped: Vec<(&'static str, &str)> = vec![
        ("temperature", cols.temperature.as_str()),
        ("humidity", cols.humidity.as_str()),
    ];
    let (covid, covid_rows_read) = read_source(&spec.covid_path, &covid_mapped)?;
    let (weather, weather_rows_read) = read_source(&spec.weather_path, &weather_mapped)?;

    let mut lo = *covid.keys().next().unwrap();
    lo = lo.max(*weather.keys().next().unwrap());
    if let Some(s) = spec.start {
        lo = lo.max(s);
    }
    let mut hi = *covid.keys().next_back().unwrap();
    hi = hi.min(*weather.keys().next_back().unwrap());
    if let Some(e) = spec.end {
        hi = hi.min(e);
    }
    if lo > hi {
        return Err(Error::EmptyJoin);
    }

    let mut fills = Vec::new();
    let covid_rows = resolve_source(
        &covid,
        lo,
        hi,
        "case counts (pos_increase, death_cum, recovered_cum)",
        |p, _n| {
            vec![
                (0.0, FillMethod::ZeroAttributed),
                (p[1], FillMethod::CarriedForward),
                (p[2], FillMethod::CarriedForward),
            ]
        },
        &["pos_increase", "death_cum", "recovered_cum"],
        &mut fills,
    )?;
    let weather_rows = resolve_source(
        &weather,
        lo,
        hi,
        "weather (temperature, humidity)",
        |p, n| {
            vec![
                ((p[0] + n[0]) / 2.0, FillMethod::Interpolated),
                ((p[1] + n[1]) / 2.0, FillMethod::Interpolated),
            ]
        },
        &["temperature", "humidity"],
        &mut fills,
    )?;

    let n = covid_rows.len();
    let mut values = DMatrix::zeros(n, 5);
    for t in 0..n {
        values[(t, 0)] = covid_rows[t][0];
        values[(t, 1)] = covid_rows[t][1];
        values[(t, 2)] = covid_rows[t][2];
        values[(t, 3)] = weather_rows[t][0];
        values[(t, 4)] = weather_rows[t][1];
    }

    // Cumulative columns must never decrease; source corrections are
    // clamped to the running maximum and reported.
    let mut clamps = Vec::new();
    let dates: Vec<NaiveDate> = (0..n)
        .map(|i| lo.checked_add_days(Days::new(i as u64)).expect("valid date range"))
        .collect();
    for (col, name) in [(1usize, "death_cum"), (2usize, "recovered_cum")] {
        for t in 1..n {
            if values[(t, col)] < values[(t - 1, col)] {
                clamps.push(MonotonicityClamp {
                    date: dates[t],
                    column: name,
                    reported: values[(t, col)],
                    clamped_to: values[(t - 1, col)],
                });
                values[(t, col)] = values[(t - 1, col)];
            }
        }
    }

    let names = CANONICAL_COLUMNS.iter().map(|s| s.to_string()).collect();
    let frame = SeriesFrame::new(dates, names, values)?;
    let report = LoadReport {
        covid_path: spec.covid_path.display().to_string(),
        weather_path: spec.weather_path.display().to_string(),
        covid_rows_read,
        weather_rows_read,
        start: lo,
        end: hi,
        rows: n,
        temp_unit: spec.temp_unit,
        gap_fills: fills,
        clamps,
    };
    Ok((frame, report))
}

/// Writes a frame as CSV: `date,<column names>`, ISO dates, and values in
/// shortest-roundtrip decimal form, so reading the file back reproduces the
/// frame exactly.
pub fn write_frame_csv(frame: &SeriesFrame, out: &mut impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(frame.names().iter().cloned());
    w.write_record(&header)?;
    for (t, date) in frame.dates().iter().enumerate() {
        let mut record = vec![date.to_string()];
        for c in 0..frame.width() {
            record.push(frame.values()[(t, c)].to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a frame previously written by [`write_frame_csv`].
///
/// # Errors
///
/// * [`Error::File`] — the file cannot be opened.
/// * [`Error::Schema`] — missing/invalid header or no data rows.
/// * [`Error::Parse`] — unparseable date or number.
pub fn read_frame_csv(path: &Path) -> Result<SeriesFrame> {
    let label = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::File {
        path: label.clone(),
        source: e,
    })?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || headers.get(0) != Some("date") {
        return Err(Error::Schema {
            file: label,
            detail: "header must be \"date\" followed by at least one column".to_string(),
        });
    }
    let names: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();

    let mut dates = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let raw_date = record.get(0).unwrap_or("");
        let date = parse_date(raw_date).ok_or_else(|| Error::Parse {
            file: label.clone(),
            row,
            column: "date".to_string(),
            detail: format!("unparseable date {raw_date:?}"),
        })?;
        let mut cells = Vec::with_capacity(names.len());
        for (c, name) in names.iter().enumerate() {
            let raw = record.get(c + 1).unwrap_or("").trim();
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                file: label.clone(),
                row,
                column: name.clone(),
                detail: format!("unparseable number {raw:?}"),
            })?;
            cells.push(value);
        }
        dates.push(date);
        rows.push(cells);
    }
    if rows.is_empty() {
        return Err(Error::Schema {
            file: label,
            detail: "no data rows".to_string(),
        });
    }
    let values = DMatrix::from_fn(rows.len(), names.len(), |r, c| rows[r][c]);
    SeriesFrame::new(dates, names, values)
}
