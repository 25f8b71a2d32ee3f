//! h-step-ahead forecasting with Gaussian confidence bands.
//!
//! Point forecasts come from the forward recursion
//! `X̂_{T+s} = c + Σ_j Phi_j X̂_{T+s−j}` (observed values used where the
//! index does not exceed `T`). Band construction uses the moving-average
//! weights `Psi_0 = I`, `Psi_i = Σ_{j=1..min(i,p)} Psi_{i−j} Phi_j`: the
//! step-`s` forecast-error covariance is `Σ(s) = Σ_{i<s} Psi_i Γ Psi_iᵀ`
//! with `Γ` the residual covariance, and bounds are
//! `point ± z_{(1+level)/2} · sqrt(diag Σ(s))`. Coefficient-estimation
//! uncertainty is deliberately ignored, so bands are symmetric and their
//! half-widths never shrink as the step index grows.

use std::io::Write;

use chrono::{Days, NaiveDate};
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numfmt::sig6;
use crate::series::SeriesFrame;
use crate::var::VarModel;

/// An `h`-step forecast with symmetric confidence bands.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    /// Date of the last observation the recursion started from.
    pub origin_date: NaiveDate,
    /// Number of forecast steps (days).
    pub horizon: usize,
    /// Confidence level in (0, 1).
    pub level: f64,
    /// Variable names, fixing the column order of the matrices below.
    pub names: Vec<String>,
    /// Point forecasts, one row per step.
    pub point: DMatrix<f64>,
    /// Lower confidence bounds, same shape as `point`.
    pub lower: DMatrix<f64>,
    /// Upper confidence bounds, same shape as `point`.
    pub upper: DMatrix<f64>,
}

impl Forecast {
    /// Forecast target dates: `origin_date + 1 ..= origin_date + horizon`.
    pub fn target_dates(&self) -> Vec<NaiveDate> {
        (1..=self.horizon)
            .map(|s| {
                self.origin_date
                    .checked_add_days(Days::new(s as u64))
                    .expect("forecast dates within calendar range")
            })
            .collect()
    }

    /// Floors negative lower bounds at zero. Point forecasts and upper
    /// bounds are left untouched; this is a presentation option for count
    /// variables, not part of band construction.
    pub fn clip_lower_at_zero(&mut self) {
        for v in self.lower.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
}

/// Standard-normal quantile at probability `(1 + level) / 2`: the
/// half-width multiplier for a symmetric two-sided band at `level`.
///
/// # Errors
///
/// * [`Error::InvalidLevel`] — `level` outside `(0, 1)`.
pub fn band_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel { level });
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal parameters are valid");
    Ok(normal.inverse_cdf((1.0 + level) / 2.0))
}

/// Moving-average weight matrices `Psi_0 .. Psi_{h-1}`.
///
/// `Psi_0 = I` and `Psi_i = Σ_{j=1..min(i,p)} Psi_{i−j} Phi_j`; these are
/// the power-series coefficients of the inverse lag polynomial.
pub fn psi_weights(model: &VarModel, h: usize) -> Vec<DMatrix<f64>> {
    let m = model.dim();
    let mut psi: Vec<DMatrix<f64>> = Vec::with_capacity(h);
    if h == 0 {
        return psi;
    }
    psi.push(DMatrix::identity(m, m));
    for i in 1..h {
        let mut next = DMatrix::zeros(m, m);
        for (jm1, phi) in model.coeffs.iter().enumerate().take(i) {
            next += &psi[i - 1 - jm1] * phi;
        }
        psi.push(next);
    }
    psi
}

/// Forecasts `h` steps past the end of `history` with symmetric bands at
/// `level`.
///
/// # Errors
///
/// * [`Error::InvalidHorizon`] — `h` is 0.
/// * [`Error::InvalidLevel`] — `level` outside (0, 1).
/// * [`Error::NameMismatch`] — history variables differ from the model's.
/// * [`Error::InsufficientData`] — history shorter than the lag order.
pub fn forecast(model: &VarModel, history: &SeriesFrame, h: usize, level: f64) -> Result<Forecast> {
    if h == 0 {
        return Err(Error::InvalidHorizon { horizon: h });
    }
    let z = band_quantile(level)?;
    if history.names() != model.names.as_slice() {
        return Err(Error::NameMismatch {
            expected: model.names.clone(),
            got: history.names().to_vec(),
        });
    }
    let p = model.p;
    let m = model.dim();
    if history.len() < p {
        return Err(Error::InsufficientData {
            context: "forecast history",
            needed: p,
            got: history.len(),
        });
    }

    // Rolling buffer of the p most recent (observed, then predicted) states.
    let t = history.len();
    let mut recent: Vec<DVector<f64>> = (t - p..t)
        .map(|row| history.values().row(row).transpose())
        .collect();

    let mut point = DMatrix::zeros(h, m);
    for s in 0..h {
        let mut x = model.intercept.clone();
        for (jm1, phi) in model.coeffs.iter().enumerate() {
            x += phi * &recent[recent.len() - 1 - jm1];
        }
        point.row_mut(s).copy_from(&x.transpose());
        recent.remove(0);
        recent.push(x);
    }

    let psi = psi_weights(model, h);
    let mut lower = DMatrix::zeros(h, m);
    let mut upper = DMatrix::zeros(h, m);
    let mut mse = DMatrix::zeros(m, m);
    for s in 0..h {
        mse += &psi[s] * &model.resid_cov * psi[s].transpose();
        for v in 0..m {
            let half = z * mse[(v, v)].max(0.0).sqrt();
            lower[(s, v)] = point[(s, v)] - half;
            upper[(s, v)] = point[(s, v)] + half;
        }
    }

    Ok(Forecast {
        origin_date: history.last_date(),
        horizon: h,
        level,
        names: model.names.clone(),
        point,
        lower,
        upper,
    })
}

/// Writes a forecast as CSV with header
/// `date,variable,point,lower,upper,level`, one row per (step, variable),
/// ISO-8601 dates and 6-significant-digit values.
pub fn write_forecast_csv(fc: &Forecast, out: &mut impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "variable", "point", "lower", "upper", "level"])?;
    let dates = fc.target_dates();
    for s in 0..fc.horizon {
        for (v, name) in fc.names.iter().enumerate() {
            w.write_record([
                dates[s].to_string(),
                name.clone(),
                sig6(fc.point[(s, v)]),
                sig6(fc.lower[(s, v)]),
                sig6(fc.upper[(s, v)]),
                sig6(fc.level),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use chrono::Days;
    use proptest::prelude::*;

    /// 97.5% standard-normal quantile, frozen from reference tables.
    const Z975: f64 = 1.959963984540054;

    fn history(names: &[&str], rows: &[&[f64]]) -> SeriesFrame {
        let n = rows.len();
        let m = names.len();
        let d0: NaiveDate = "2020-03-25".parse().unwrap();
        let dates = (0..n)
            .map(|i| d0.checked_add_days(Days::new(i as u64)).unwrap())
            .collect();
        let mut values = DMatrix::zeros(n, m);
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                values[(r, c)] = *v;
            }
        }
        SeriesFrame::new(dates, names.iter().map(|s| s.to_string()).collect(), values).unwrap()
    }

    fn model(
        p: usize,
        names: &[&str],
        intercept: &[f64],
        coeffs: Vec<DMatrix<f64>>,
        resid_cov: DMatrix<f64>,
    ) -> VarModel {
        let m = names.len();
        VarModel {
            p,
            names: names.iter().map(|s| s.to_string()).collect(),
            intercept: DVector::from_column_slice(intercept),
            coeffs,
            resid_cov,
            residuals: DMatrix::zeros(1, m),
            n_obs: 50,
        }
    }

    #[test]
    fn band_quantile_matches_reference_value() {
        assert_abs_diff_eq!(band_quantile(0.95).unwrap(), Z975, epsilon = 1e-9);
        assert_abs_diff_eq!(band_quantile(0.95).unwrap(), 1.959964, epsilon = 1e-6);
    }

    #[test]
    fn psi_weights_vanish_without_dynamics() {
        let m = model(
            1,
            &["a", "b"],
            &[0.0, 0.0],
            vec![DMatrix::zeros(2, 2)],
            DMatrix::identity(2, 2),
        );
        let psi = psi_weights(&m, 5);
        assert_eq!(psi.len(), 5);
        assert_eq!(psi[0], DMatrix::identity(2, 2));
        for w in &psi[1..] {
            assert_eq!(w.amax(), 0.0);
        }
    }

    #[test]
    fn psi_weights_are_geometric_for_scalar_ar1() {
        let m = model(
            1,
            &["a"],
            &[0.0],
            vec![DMatrix::from_element(1, 1, 0.5)],
            DMatrix::identity(1, 1),
        );
        let psi = psi_weights(&m, 8);
        for (i, w) in psi.iter().enumerate() {
            assert_abs_diff_eq!(w[(0, 0)], 0.5f64.powi(i as i32), epsilon = 1e-15);
        }
    }

    #[test]
    fn psi_weights_match_series_inversion_oracle() {
        // The weights are the power-series inverse of the lag polynomial
        // A(z) = I - Phi_1 z - Phi_2 z^2. The oracle inverts from the other
        // side (left-multiplication recursion) and then verifies the
        // product A(z) * Psi(z) = I coefficient by coefficient.
        let phi1 = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.25]);
        let phi2 = DMatrix::from_row_slice(2, 2, &[0.15, 0.0, 0.05, 0.1]);
        let m = model(
            2,
            &["a", "b"],
            &[0.0, 0.0],
            vec![phi1.clone(), phi2.clone()],
            DMatrix::identity(2, 2),
        );
        let h = 7;
        let psi = psi_weights(&m, h);

        // Independent left-sided inversion: B_0 = I, B_i = sum_j Phi_j B_{i-j}.
        let mut oracle: Vec<DMatrix<f64>> = vec![DMatrix::identity(2, 2)];
        for i in 1..h {
            let mut next = DMatrix::zeros(2, 2);
            if i >= 1 {
                next += &phi1 * &oracle[i - 1];
            }
            if i >= 2 {
                next += &phi2 * &oracle[i - 2];
            }
            oracle.push(next);
        }
        for (w, o) in psi.iter().zip(&oracle) {
            assert!((w - o).amax() < 1e-12);
        }

        // Product check: coefficient k of A(z) * Psi(z) is
        // Psi_k - Phi_1 Psi_{k-1} - Phi_2 Psi_{k-2}; identity at k = 0,
        // zero for k >= 1.
        assert!((&psi[0] - DMatrix::identity(2, 2)).amax() < 1e-12);
        for k in 1..h {
            let mut c = psi[k].clone();
            c -= &phi1 * &psi[k - 1];
            if k >= 2 {
                c -= &phi2 * &psi[k - 2];
            }
            assert!(c.amax() < 1e-8, "coefficient {k} of the product is nonzero");
        }
    }

    #[test]
    fn white_noise_model_forecasts_its_mean_with_constant_bands() {
        let gamma = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let m = model(
            1,
            &["a", "b"],
            &[3.0, -1.0],
            vec![DMatrix::zeros(2, 2)],
            gamma,
        );
        let hist = history(&["a", "b"], &[&[9.0, 9.0], &[7.0, -4.0]]);
        let fc = forecast(&m, &hist, 4, 0.95).unwrap();
        for s in 0..4 {
            assert_abs_diff_eq!(fc.point[(s, 0)], 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(fc.point[(s, 1)], -1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(fc.upper[(s, 0)] - fc.point[(s, 0)], Z975 * 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(fc.upper[(s, 1)] - fc.point[(s, 1)], Z975 * 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn scalar_ar1_matches_geometric_sum_oracle() {
        // phi = 0.5, alpha = 0, sigma^2 = 1, last observation 8:
        // points 4, 2, 1, 0.5; step-s variance (1 - phi^(2s)) / (1 - phi^2).
        let m = model(
            1,
            &["a"],
            &[0.0],
            vec![DMatrix::from_element(1, 1, 0.5)],
            DMatrix::identity(1, 1),
        );
        let hist = history(&["a"], &[&[1.0], &[8.0]]);
        let fc = forecast(&m, &hist, 4, 0.95).unwrap();
        let expected_points = [4.0, 2.0, 1.0, 0.5];
        for (s, want) in expected_points.iter().enumerate() {
            assert_abs_diff_eq!(fc.point[(s, 0)], *want, epsilon = 1e-12);
            let var = (1.0 - 0.5f64.powi(2 * (s as i32 + 1))) / (1.0 - 0.25);
            let half = Z975 * var.sqrt();
            assert_abs_diff_eq!(fc.upper[(s, 0)] - fc.point[(s, 0)], half, epsilon = 1e-8);
            assert_abs_diff_eq!(fc.point[(s, 0)] - fc.lower[(s, 0)], half, epsilon = 1e-8);
        }
        // Step-2 variance is 1.25 exactly.
        let half2 = fc.upper[(1, 0)] - fc.point[(1, 0)];
        assert_abs_diff_eq!(half2, Z975 * 1.25f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn stable_model_forecast_converges_to_implied_mean() {
        let phi = DMatrix::from_row_slice(2, 2, &[0.6, 0.15, 0.1, 0.55]);
        let m = model(
            1,
            &["a", "b"],
            &[1.0, 2.0],
            vec![phi],
            DMatrix::identity(2, 2),
        );
        let mu = m.implied_mean().unwrap();
        let hist = history(&["a", "b"], &[&[30.0, -20.0]]);
        let fc = forecast(&m, &hist, 200, 0.95).unwrap();
        let dist = |s: usize| {
            ((fc.point[(s, 0)] - mu[0]).powi(2) + (fc.point[(s, 1)] - mu[1]).powi(2)).sqrt()
        };
        assert!(dist(199) < 0.01 * dist(0));
    }

    #[test]
    fn forecast_uses_only_the_trailing_lag_window() {
        let phi = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.2, 0.3]);
        let m = model(
            1,
            &["a", "b"],
            &[0.3, 0.7],
            vec![phi],
            DMatrix::identity(2, 2),
        );
        let h1 = history(&["a", "b"], &[&[100.0, -50.0], &[1.0, 2.0]]);
        let h2 = history(&["a", "b"], &[&[-7.0, 0.25], &[1.0, 2.0]]);
        let f1 = forecast(&m, &h1, 5, 0.95).unwrap();
        let f2 = forecast(&m, &h2, 5, 0.95).unwrap();
        assert_eq!(f1.point, f2.point);
        assert_eq!(f1.lower, f2.lower);
        assert_eq!(f1.upper, f2.upper);
    }

    #[test]
    fn target_dates_follow_the_origin() {
        let m = model(
            1,
            &["a"],
            &[0.0],
            vec![DMatrix::from_element(1, 1, 0.5)],
            DMatrix::identity(1, 1),
        );
        let hist = history(&["a"], &[&[1.0], &[2.0]]);
        let fc = forecast(&m, &hist, 3, 0.95).unwrap();
        assert_eq!(fc.origin_date, hist.last_date());
        let dates = fc.target_dates();
        assert_eq!(dates.len(), 3);
        assert_eq!(dates[0], "2020-03-27".parse::<NaiveDate>().unwrap());
        assert_eq!(dates[2], "2020-03-29".parse::<NaiveDate>().unwrap());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let m = model(
            1,
            &["a"],
            &[0.0],
            vec![DMatrix::from_element(1, 1, 0.5)],
            DMatrix::identity(1, 1),
        );
        let hist = history(&["a"], &[&[1.0], &[2.0]]);
        assert!(matches!(
            forecast(&m, &hist, 0, 0.95),
            Err(Error::InvalidHorizon { .. })
        ));
        assert!(matches!(
            forecast(&m, &hist, 3, 1.0),
            Err(Error::InvalidLevel { .. })
        ));
        assert!(matches!(
            forecast(&m, &hist, 3, 0.0),
            Err(Error::InvalidLevel { .. })
        ));
        let wrong = history(&["b"], &[&[1.0], &[2.0]]);
        assert!(matches!(
            forecast(&m, &wrong, 3, 0.95),
            Err(Error::NameMismatch { .. })
        ));
        let m2 = model(
            2,
            &["a"],
            &[0.0],
            vec![
                DMatrix::from_element(1, 1, 0.3),
                DMatrix::from_element(1, 1, 0.1),
            ],
            DMatrix::identity(1, 1),
        );
        let short = history(&["a"], &[&[1.0]]);
        assert!(matches!(
            forecast(&m2, &short, 3, 0.95),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn clip_floors_only_the_lower_band() {
        let m = model(
            1,
            &["a"],
            &[0.1],
            vec![DMatrix::from_element(1, 1, 0.5)],
            DMatrix::from_element(1, 1, 25.0),
        );
        let hist = history(&["a"], &[&[1.0], &[2.0]]);
        let mut fc = forecast(&m, &hist, 3, 0.95).unwrap();
        assert!(fc.lower[(0, 0)] < 0.0);
        let point_before = fc.point.clone();
        let upper_before = fc.upper.clone();
        fc.clip_lower_at_zero();
        assert!(fc.lower.iter().all(|&v| v >= 0.0));
        assert_eq!(fc.point, point_before);
        assert_eq!(fc.upper, upper_before);
    }

    #[test]
    fn csv_output_has_documented_shape() {
        let m = model(
            1,
            &["a", "b"],
            &[3.0, -1.0],
            vec![DMatrix::zeros(2, 2)],
            DMatrix::identity(2, 2),
        );
        let hist = history(&["a", "b"], &[&[1.0, 2.0]]);
        let fc = forecast(&m, &hist, 2, 0.95).unwrap();
        let mut buf = Vec::new();
        write_forecast_csv(&fc, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "date,variable,point,lower,upper,level");
        assert_eq!(lines.len(), 1 + 2 * 2);
        assert!(lines[1].starts_with("2020-03-26,a,3.00000,"));
        assert!(lines[1].ends_with(",0.950000"));
        assert!(lines[3].starts_with("2020-03-27,a,"));
    }

    proptest! {
        #[test]
        fn band_half_widths_never_shrink(
            entries in proptest::collection::vec(-0.45f64..0.45, 8),
            h in 2usize..9,
        ) {
            let phi1 = DMatrix::from_row_slice(2, 2, &entries[0..4]);
            let phi2 = DMatrix::from_row_slice(2, 2, &entries[4..8]);
            let m = model(
                2,
                &["a", "b"],
                &[0.5, -0.5],
                vec![phi1, phi2],
                DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            );
            let hist = history(&["a", "b"], &[&[1.0, 2.0], &[0.5, -1.0]]);
            let fc = forecast(&m, &hist, h, 0.95).unwrap();
            for v in 0..2 {
                for s in 1..h {
                    let prev = fc.upper[(s - 1, v)] - fc.point[(s - 1, v)];
                    let cur = fc.upper[(s, v)] - fc.point[(s, v)];
                    prop_assert!(cur >= prev - 1e-12);
                }
            }
            // Bands are symmetric and ordered.
            for v in 0..2 {
                for s in 0..h {
                    let up = fc.upper[(s, v)] - fc.point[(s, v)];
                    let down = fc.point[(s, v)] - fc.lower[(s, v)];
                    prop_assert!((up - down).abs() <= 1e-8);
                    prop_assert!(fc.lower[(s, v)] <= fc.point[(s, v)]);
                    prop_assert!(fc.point[(s, v)] <= fc.upper[(s, v)]);
                }
            }
        }
    }
}
