//! Aligned daily panel data and basic descriptive statistics.
//!
//! [`SeriesFrame`] is the core data container: several named series observed
//! on consecutive calendar days with no missing entries. Construction
//! validates those invariants once so every downstream consumer can rely on
//! them. The free functions implement the descriptive statistics used across
//! the crate: Pearson correlation ([`correlation_matrix`]), the sample
//! autocorrelation function ([`acf`]), and plain differencing ([`diff`]).

use chrono::{Days, NaiveDate};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A panel of daily observations: `T` rows (consecutive calendar dates) by
/// `m` named columns, with every cell present and finite.
///
/// Rows are in strictly increasing date order, one row per day with no holes;
/// column names are unique. These invariants are checked by [`SeriesFrame::new`]
/// and hold for every frame in circulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame {
    dates: Vec<NaiveDate>,
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl SeriesFrame {
    /// Builds a frame from parallel date, name, and value containers.
    ///
    /// `values` is row-major in time: row `t` holds the observations for
    /// `dates[t]`.
    ///
    /// # Errors
    ///
    /// * [`Error::EmptyFrame`] — no rows or no columns.
    /// * [`Error::DimensionMismatch`] — container lengths disagree.
    /// * [`Error::NonConsecutiveDates`] — dates are not strictly increasing
    ///   consecutive calendar days.
    /// * [`Error::DuplicateName`] — repeated column name.
    /// * [`Error::NonFiniteValue`] — a NaN or infinite cell.
    pub fn new(dates: Vec<NaiveDate>, names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if dates.is_empty() || names.is_empty() {
            return Err(Error::EmptyFrame);
        }
        if values.nrows() != dates.len() {
            return Err(Error::DimensionMismatch {
                what: "value rows vs dates",
                expected: dates.len(),
                got: values.nrows(),
            });
        }
        if values.ncols() != names.len() {
            return Err(Error::DimensionMismatch {
                what: "value columns vs names",
                expected: names.len(),
                got: values.ncols(),
            });
        }
        for w in dates.windows(2) {
            if w[0].checked_add_days(Days::new(1)) != Some(w[1]) {
                return Err(Error::NonConsecutiveDates {
                    prev: w[0],
                    next: w[1],
                });
            }
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::DuplicateName { name: name.clone() });
            }
        }
        for col in 0..values.ncols() {
            for row in 0..values.nrows() {
                if !values[(row, col)].is_finite() {
                    return Err(Error::NonFiniteValue {
                        row,
                        column: names[col].clone(),
                    });
                }
            }
        }
        Ok(Self {
            dates,
            names,
            values,
        })
    }

    /// Builds a frame from per-column vectors, in the given column order.
    pub fn from_columns(
        dates: Vec<NaiveDate>,
        columns: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::EmptyFrame);
        }
        let nrows = dates.len();
        for (_, col) in &columns {
            if col.len() != nrows {
                return Err(Error::DimensionMismatch {
                    what: "column length vs dates",
                    expected: nrows,
                    got: col.len(),
                });
            }
        }
        let names: Vec<String> = columns.iter().map(|(n, _)| n.clone()).collect();
        let values = DMatrix::from_fn(nrows, columns.len(), |r, c| columns[c].1[r]);
        Self::new(dates, names, values)
    }

    /// Number of rows (observation days).
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    /// True when the frame holds no rows (never the case for a constructed frame).
    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Number of columns (variables).
    pub fn width(&self) -> usize {
        self.names.len()
    }

    /// Observation dates, in increasing order.
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// Column names, in column order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// The `T x m` value matrix (rows are days, columns are variables).
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// First observation date.
    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    /// Last observation date.
    pub fn last_date(&self) -> NaiveDate {
        *self.dates.last().expect("frame is never empty")
    }

    /// Index of `name` in column order.
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn {
                name: name.to_string(),
            })
    }

    /// The values of column `index` as an owned vector.
    pub fn column(&self, index: usize) -> DVector<f64> {
        self.values.column(index).into_owned()
    }

    /// The values of the named column as an owned vector.
    pub fn column_by_name(&self, name: &str) -> Result<DVector<f64>> {
        Ok(self.column(self.column_index(name)?))
    }

    /// Row index of `date`, if it falls inside the frame.
    pub fn date_index(&self, date: NaiveDate) -> Option<usize> {
        let first = self.first_date();
        if date < first || date > self.last_date() {
            return None;
        }
        Some((date - first).num_days() as usize)
    }

    /// Value of column `col` on `date`, if the date is in the frame.
    pub fn value_at(&self, date: NaiveDate, col: usize) -> Option<f64> {
        self.date_index(date).map(|row| self.values[(row, col)])
    }

    /// A new frame containing only rows dated on or before `date`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidCutoff`] when `date` precedes the first observation.
    pub fn truncate_through(&self, date: NaiveDate) -> Result<SeriesFrame> {
        let Some(last_row) = self.date_index(date.min(self.last_date())) else {
            return Err(Error::InvalidCutoff {
                cutoff: date,
                reason: format!("frame starts {}", self.first_date()),
            });
        };
        Ok(SeriesFrame {
            dates: self.dates[..=last_row].to_vec(),
            names: self.names.clone(),
            values: self.values.rows(0, last_row + 1).into_owned(),
        })
    }
}

/// Pearson correlation matrix of the frame's columns.
///
/// Uses the sample covariance with `T - 1` in the denominator; the result is
/// symmetric with a unit diagonal and entries clamped to `[-1, 1]` against
/// floating-point drift.
///
/// # Errors
///
/// * [`Error::InsufficientData`] — fewer than two rows.
/// * [`Error::DegenerateColumn`] — a column with zero sample variance.
pub fn correlation_matrix(frame: &SeriesFrame) -> Result<DMatrix<f64>> {
    let t = frame.len();
    let m = frame.width();
    if t < 2 {
        return Err(Error::InsufficientData {
            context: "correlation matrix",
            needed: 2,
            got: t,
        });
    }
    let values = frame.values();
    let mut centered = values.clone();
    for c in 0..m {
        let mean = values.column(c).mean();
        for r in 0..t {
            centered[(r, c)] -= mean;
        }
    }
    let cov = centered.transpose() * &centered / (t as f64 - 1.0);
    for c in 0..m {
        if cov[(c, c)] <= 0.0 {
            return Err(Error::DegenerateColumn {
                name: frame.names()[c].clone(),
            });
        }
    }
    let mut corr = DMatrix::zeros(m, m);
    for i in 0..m {
        corr[(i, i)] = 1.0;
        for j in (i + 1)..m {
            let r = cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt();
            let r = r.clamp(-1.0, 1.0);
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    Ok(corr)
}

/// Sample autocorrelation function at lags `0..=max_lag`.
///
/// Uses the biased autocovariance estimator (divisor `T` at every lag) with
/// the full-sample mean, so `acf[0]` is exactly 1 and the sequence is the
/// standard input to portmanteau statistics.
///
/// # Errors
///
/// * [`Error::InvalidLag`] — `max_lag` is 0 or not below the series length.
/// * [`Error::DegenerateSeries`] — zero sample variance.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let t = series.len();
    if max_lag == 0 || max_lag >= t {
        return Err(Error::InvalidLag {
            lag: max_lag,
            limit: t.saturating_sub(1),
            context: "autocorrelation",
        });
    }
    let mean = series.iter().sum::<f64>() / t as f64;
    let c0: f64 = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / t as f64;
    if c0 == 0.0 {
        return Err(Error::DegenerateSeries {
            context: "autocorrelation",
        });
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for k in 1..=max_lag {
        let ck: f64 = (0..t - k)
            .map(|i| (series[i] - mean) * (series[i + k] - mean))
            .sum::<f64>()
            / t as f64;
        out.push(ck / c0);
    }
    Ok(out)
}

/// `order`-fold first differences of `series`.
///
/// Each pass maps `x` to `x[1..] - x[..len-1]`, so the result has
/// `len - order` entries.
///
/// # Errors
///
/// [`Error::InvalidOrder`] — `order` is 0 or not below the series length.
pub fn diff(series: &[f64], order: usize) -> Result<Vec<f64>> {
    if order == 0 || order >= series.len() {
        return Err(Error::InvalidOrder {
            order,
            len: series.len(),
        });
    }
    let mut out = series.to_vec();
    for _ in 0..order {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}
