//! Engle-Granger two-step residual-based cointegration test.

use crate::adf::{schwert_max_lag, AdfRegression};
use crate::error::{Error, Result};
use crate::mackinnon;

/// Outcome of [`engle_granger`].
#[derive(Debug, Clone, PartialEq)]
pub struct CointResult {
    /// Unit-root t-statistic of the cointegrating-regression residuals.
    pub statistic: f64,
    /// Approximate asymptotic p-value from the two-variable residual
    /// surface (not the plain Dickey-Fuller one).
    pub p_value: f64,
    /// True when `p_value < 0.05`.
    pub cointegrated: bool,
    /// Slope of the step-1 regression of `y` on `x`.
    pub regression_slope: f64,
    /// Intercept of the step-1 regression.
    pub regression_intercept: f64,
}

/// Tests whether `y` and `x` are cointegrated.
///
/// Step 1 regresses `y` on `x` with an intercept; step 2 runs the augmented
/// Dickey-Fuller regression (no deterministic terms, augmentation order by
/// AIC up to Schwert's rule) on the residuals and evaluates the statistic
/// against the two-variable residual null distribution.
///
/// When the step-1 residuals are exactly zero (an exact linear
/// relationship), the most extreme rejection is reported by convention:
/// statistic `-inf`, p-value 0, `cointegrated = true`.
///
/// # Errors
///
/// * [`Error::LengthMismatch`] — input lengths differ.
/// * [`Error::InsufficientData`] — fewer than 30 paired observations.
/// * [`Error::DegenerateRegressor`] — `x` has zero variance.
pub fn engle_granger(y: &[f64], x: &[f64]) -> Result<CointResult> {
    if y.len() != x.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: x.len(),
        });
    }
    let n = y.len();
    if n < 30 {
        return Err(Error::InsufficientData {
            context: "cointegration test",
            needed: 30,
            got: n,
        });
    }

    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateRegressor);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let residuals: Vec<f64> = y
        .iter()
        .zip(x)
        .map(|(yi, xi)| yi - intercept - slope * xi)
        .collect();

    // Exact linear dependence: treat as cointegrated by the most extreme
    // rejection convention rather than running a test on a zero series.
    let y_scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if residuals.iter().all(|r| r.abs() <= 1e-12 * y_scale) {
        return Ok(CointResult {
            statistic: f64::NEG_INFINITY,
            p_value: 0.0,
            cointegrated: true,
            regression_slope: slope,
            regression_intercept: intercept,
        });
    }

    let (statistic, _) = crate::adf::adf_tstat(
        &residuals,
        schwert_max_lag(residuals.len()),
        AdfRegression::None,
    )?;
    let p_value = mackinnon::coint_pvalue_two_vars(statistic);
    Ok(CointResult {
        statistic,
        p_value,
        cointegrated: p_value < 0.05,
        regression_slope: slope,
        regression_intercept: intercept,
    })
}
