//! Augmented Dickey-Fuller unit-root test.
//!
//! Fits the regression
//!
//! ```text
//! dy_t = [c] + gamma * y_{t-1} + delta_1 dy_{t-1} + ... + delta_k dy_{t-k} + e_t
//! ```
//!
//! and evaluates the t-ratio of `gamma` against the Dickey-Fuller
//! distribution (p-values from the MacKinnon response surfaces). The
//! augmentation order `k` is chosen by AIC over `0..=max_lag`, with all
//! candidates fitted on the common sample implied by `max_lag` so their
//! criteria are comparable, and the winning order refitted on the full
//! available sample.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mackinnon;
use crate::ols;

/// Deterministic terms included in the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdfRegression {
    /// Intercept included (the usual choice for levels).
    Constant,
    /// No deterministic terms (used for residual-based tests).
    None,
}

/// Outcome of [`adf_test`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdfResult {
    /// t-ratio of the level coefficient `gamma`.
    pub statistic: f64,
    /// Augmentation order chosen by AIC.
    pub lags_used: usize,
    /// MacKinnon approximate asymptotic p-value.
    pub p_value: f64,
    /// True when `p_value < 0.05`.
    pub reject_unit_root: bool,
}

/// Schwert's rule of thumb for the largest augmentation order:
/// `floor(12 * (n/100)^(1/4))`.
pub fn schwert_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Runs the augmented Dickey-Fuller test on `series`.
///
/// # Errors
///
/// * [`Error::InsufficientData`] — fewer than `max_lag + 10` observations,
///   or too few effective rows to estimate the widest candidate regression.
/// * [`Error::DegenerateSeries`] — zero sample variance, or a test
///   regression with an exactly zero residual (no stochastic component).
pub fn adf_test(series: &[f64], max_lag: usize, regression: AdfRegression) -> Result<AdfResult> {
    let (statistic, lags_used) = adf_tstat(series, max_lag, regression)?;
    let p_value = match regression {
        AdfRegression::Constant => mackinnon::adf_pvalue_constant(statistic),
        AdfRegression::None => mackinnon::adf_pvalue_none(statistic),
    };
    Ok(AdfResult {
        statistic,
        lags_used,
        p_value,
        reject_unit_root: p_value < 0.05,
    })
}

/// The raw t-statistic and chosen augmentation order, without a p-value.
///
/// Shared with the residual-based cointegration test, which evaluates the
/// same statistic against a different null distribution.
pub(crate) fn adf_tstat(
    series: &[f64],
    max_lag: usize,
    regression: AdfRegression,
) -> Result<(f64, usize)> {
    let n = series.len();
    if n < max_lag + 10 {
        return Err(Error::InsufficientData {
            context: "unit-root test",
            needed: max_lag + 10,
            got: n,
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    if series.iter().all(|v| *v == mean) {
        return Err(Error::DegenerateSeries {
            context: "unit-root test",
        });
    }

    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let n_common = dy.len() - max_lag;
    let widest_params = max_lag + 1 + usize::from(regression == AdfRegression::Constant);
    if n_common < widest_params + 2 {
        return Err(Error::InsufficientData {
            context: "unit-root test",
            needed: widest_params + 2 + max_lag,
            got: dy.len(),
        });
    }

    // Candidate selection on the common sample (rows j = max_lag..len(dy)).
    let mut best: Option<(f64, usize)> = None;
    for k in 0..=max_lag {
        let (rss, rows, params) = regress(series, &dy, k, max_lag, regression)?.1;
        let sigma2 = (rss / rows as f64).max(f64::MIN_POSITIVE);
        let aic = rows as f64 * sigma2.ln() + 2.0 * params as f64;
        if best.is_none_or(|(b, _)| aic < b) {
            best = Some((aic, k));
        }
    }
    let k = best.expect("at least one candidate").1;

    // Refit the winner on its full available sample.
    let (tstat, _) = regress(series, &dy, k, k, regression)?;
    Ok((tstat, k))
}

/// Fits the test regression with `k` augmentation lags, using rows
/// `start..len(dy)`, and returns the t-ratio of the level coefficient plus
/// `(rss, rows, params)` for criterion evaluation.
fn regress(
    y: &[f64],
    dy: &[f64],
    k: usize,
    start: usize,
    regression: AdfRegression,
) -> Result<(f64, (f64, usize, usize))> {
    let rows = dy.len() - start;
    let with_const = regression == AdfRegression::Constant;
    let params = k + 1 + usize::from(with_const);
    let mut x = DMatrix::zeros(rows, params);
    let mut resp = DMatrix::zeros(rows, 1);
    for (row, j) in (start..dy.len()).enumerate() {
        let mut col = 0;
        if with_const {
            x[(row, col)] = 1.0;
            col += 1;
        }
        x[(row, col)] = y[j];
        col += 1;
        for lag in 1..=k {
            x[(row, col)] = dy[j - lag];
            col += 1;
        }
        resp[(row, 0)] = dy[j];
    }

    let fit = ols::least_squares(&x, &resp, |i| format!("regressor {i}")).map_err(|e| match e {
        Error::Collinearity { .. } => Error::DegenerateSeries {
            context: "unit-root regression",
        },
        other => other,
    })?;
    let rss: f64 = fit.residuals.column(0).norm_squared();

    let gamma_idx = usize::from(with_const);
    let df = rows.saturating_sub(params);
    if df == 0 {
        return Err(Error::InsufficientData {
            context: "unit-root regression",
            needed: params + 1,
            got: rows,
        });
    }
    let sigma2 = rss / df as f64;
    let se = (sigma2 * fit.xtx_inv[(gamma_idx, gamma_idx)]).sqrt();
    if !(se > 0.0) {
        return Err(Error::DegenerateSeries {
            context: "unit-root regression",
        });
    }
    let tstat = fit.coef[(gamma_idx, 0)] / se;
    Ok((tstat, (rss, rows, params)))
}
