//! Ljung-Box portmanteau test for residual autocorrelation.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::series::acf;

/// Outcome of a Ljung-Box test.
#[derive(Debug, Clone, PartialEq)]
pub struct LjungBoxResult {
    /// The Q statistic.
    pub statistic: f64,
    /// Number of autocorrelation lags summed.
    pub lags: usize,
    /// Chi-square degrees of freedom: `lags - fitted_params`.
    pub dof: usize,
    /// Upper-tail probability of `statistic` under the white-noise null.
    pub p_value: f64,
}

/// Ljung-Box test of the null that `residuals` are white noise.
///
/// The statistic is
///
/// ```text
/// Q = T (T + 2) * sum_{k=1..h} r_k^2 / (T - k)
/// ```
///
/// with `r_k` the sample autocorrelations from [`acf`]. `fitted_params` is
/// subtracted from `lags` to give the chi-square degrees of freedom, the
/// usual correction when the residuals come from an estimated model. The
/// p-value is the exact chi-square upper tail (regularized incomplete
/// gamma), accurate to well below 1e-10.
///
/// # Errors
///
/// * [`Error::InvalidDof`] — `lags <= fitted_params` leaves no degrees of
///   freedom.
/// * [`Error::InvalidLag`] — the series is not longer than `lags`.
/// * [`Error::DegenerateSeries`] — zero sample variance.
pub fn ljung_box(residuals: &[f64], lags: usize, fitted_params: usize) -> Result<LjungBoxResult> {
    if lags <= fitted_params {
        return Err(Error::InvalidDof {
            lags,
            fitted_params,
        });
    }
    let t = residuals.len();
    if t <= lags {
        return Err(Error::InvalidLag {
            lag: lags,
            limit: t.saturating_sub(1),
            context: "Ljung-Box",
        });
    }
    let r = acf(residuals, lags)?;
    let tf = t as f64;
    let statistic = tf
        * (tf + 2.0)
        * (1..=lags)
            .map(|k| r[k] * r[k] / (tf - k as f64))
            .sum::<f64>();
    let dof = lags - fitted_params;
    let dist = ChiSquared::new(dof as f64).expect("dof >= 1");
    let p_value = dist.sf(statistic).clamp(0.0, 1.0);
    Ok(LjungBoxResult {
        statistic,
        lags,
        dof,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Brute-force Q computed with its own autocorrelation sums, sharing no
    /// code with the implementation.
    fn q_oracle(x: &[f64], h: usize) -> f64 {
        let t = x.len();
        let mean = x.iter().sum::<f64>() / t as f64;
        let c0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        let mut q = 0.0;
        for k in 1..=h {
            let ck: f64 = (0..t - k)
                .map(|i| (x[i] - mean) * (x[i + k] - mean))
                .sum();
            let rk = ck / c0;
            q += rk * rk / (t - k) as f64;
        }
        (t * (t + 2)) as f64 * q
    }

    #[test]
    fn matches_hand_evaluated_statistic() {
        let x = [0.3, -1.1, 0.8, 0.4, -0.2, 1.5, -0.7, 0.1, -0.9, 0.6];
        let got = ljung_box(&x, 2, 0).unwrap();
        assert_abs_diff_eq!(got.statistic, q_oracle(&x, 2), epsilon = 1e-10);
        assert_eq!(got.dof, 2);
        assert!(got.p_value > 0.0 && got.p_value < 1.0);
    }

    #[test]
    fn zero_autocorrelation_design_gives_q_zero_p_one() {
        // Non-zero entries spaced three apart with signs summing to zero:
        // every lag-1 and lag-2 product contains a zero factor and the mean
        // is exactly zero, so both sample autocorrelations vanish.
        let x = [1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0];
        let got = ljung_box(&x, 2, 0).unwrap();
        assert_eq!(got.statistic, 0.0);
        assert_eq!(got.p_value, 1.0);
    }

    #[test]
    fn fitted_params_shift_dof_and_p_value() {
        let x = [0.3, -1.1, 0.8, 0.4, -0.2, 1.5, -0.7, 0.1, -0.9, 0.6];
        let with0 = ljung_box(&x, 4, 0).unwrap();
        let with2 = ljung_box(&x, 4, 2).unwrap();
        assert_eq!(with0.statistic, with2.statistic);
        assert_eq!(with0.dof, 4);
        assert_eq!(with2.dof, 2);
        // Same statistic, fewer dof: the tail probability can only shrink.
        assert!(with2.p_value <= with0.p_value);
    }

    #[test]
    fn rejects_bad_dof_short_series_constant_series() {
        let x = [1.0, 2.0, 1.5, 0.5, 1.0, 2.5];
        assert!(matches!(
            ljung_box(&x, 2, 2),
            Err(Error::InvalidDof { .. })
        ));
        assert!(matches!(
            ljung_box(&x[..3], 3, 0),
            Err(Error::InvalidLag { .. })
        ));
        assert!(matches!(
            ljung_box(&[4.0; 10], 2, 0),
            Err(Error::DegenerateSeries { .. })
        ));
    }

    #[test]
    fn p_value_strictly_decreasing_in_q_for_fixed_dof() {
        let dist = ChiSquared::new(5.0).unwrap();
        let mut prev = 1.0;
        for i in 1..=200 {
            let q = i as f64 * 0.5;
            let p = dist.sf(q);
            assert!(p < prev, "sf not strictly decreasing at q={q}");
            prev = p;
        }
    }
}
