//! Approximate asymptotic p-values for Dickey-Fuller-type test statistics.
//!
//! The tail probabilities come from MacKinnon's response-surface regressions
//! (MacKinnon 1994, updated 2010), the same tabulated coefficients used by
//! the major econometrics packages: the test statistic is pushed through a
//! low-order polynomial and the standard normal CDF. Separate surfaces cover
//! the no-constant and constant regressions, and the residual-based
//! cointegration test with two variables (whose null distribution is *not*
//! the plain Dickey-Fuller one).
//!
//! Outside the tabulated range the p-value saturates at 0 or 1, matching the
//! published bounds.

use statrs::distribution::{ContinuousCDF, Normal};

/// Evaluation bounds and polynomial coefficients for one regression surface.
///
/// `small_p` is used for statistics at or below `tau_star` (cubic in the
/// statistic); `large_p` above it (quartic). Coefficients are ordered from
/// the constant term upward.
struct Surface {
    tau_min: f64,
    tau_max: f64,
    tau_star: f64,
    small_p: [f64; 3],
    large_p: [f64; 4],
}

/// Unit-root regression without deterministic terms.
const TAU_NONE: Surface = Surface {
    tau_min: -19.04,
    tau_max: f64::INFINITY,
    tau_star: -1.04,
    small_p: [0.6344, 1.2378, 3.2496e-2],
    large_p: [0.4797, 9.3557e-1, -6.999e-2, 3.3066e-3],
};

/// Unit-root regression with a constant.
const TAU_CONST: Surface = Surface {
    tau_min: -18.83,
    tau_max: 2.74,
    tau_star: -1.61,
    small_p: [2.1659, 1.4412, 3.8269e-2],
    large_p: [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2],
};

/// Residual-based cointegration statistic, two variables, constant included
/// in the cointegrating regression.
const TAU_COINT_2: Surface = Surface {
    tau_min: -18.86,
    tau_max: 0.92,
    tau_star: -2.62,
    small_p: [2.92, 1.5012, 3.9796e-2],
    large_p: [2.1945, 6.4695e-1, -2.9198e-1, -4.2377e-2],
};

fn polyval(coefs: &[f64], x: f64) -> f64 {
    coefs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn p_value(surface: &Surface, stat: f64) -> f64 {
    if stat > surface.tau_max {
        return 1.0;
    }
    if stat < surface.tau_min {
        return 0.0;
    }
    let arg = if stat <= surface.tau_star {
        polyval(&surface.small_p, stat)
    } else {
        polyval(&surface.large_p, stat)
    };
    let normal = Normal::standard();
    normal.cdf(arg).clamp(0.0, 1.0)
}

/// p-value for the no-constant unit-root t-statistic.
pub(crate) fn adf_pvalue_none(stat: f64) -> f64 {
    p_value(&TAU_NONE, stat)
}

/// p-value for the constant-included unit-root t-statistic.
pub(crate) fn adf_pvalue_constant(stat: f64) -> f64 {
    p_value(&TAU_CONST, stat)
}

/// p-value for the two-variable residual cointegration t-statistic.
pub(crate) fn coint_pvalue_two_vars(stat: f64) -> f64 {
    p_value(&TAU_COINT_2, stat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_percent_critical_points_map_near_005() {
        // Published asymptotic 5% critical values: about -1.95 (no constant),
        // -2.86 (constant), -3.34 (two-variable cointegration).
        assert!((adf_pvalue_none(-1.95) - 0.05).abs() < 0.01);
        assert!((adf_pvalue_constant(-2.86) - 0.05).abs() < 0.01);
        assert!((coint_pvalue_two_vars(-3.34) - 0.05).abs() < 0.01);
    }

    #[test]
    fn one_percent_critical_points_map_near_001() {
        // About -2.57, -3.43, -3.90 respectively.
        assert!((adf_pvalue_none(-2.57) - 0.01).abs() < 0.005);
        assert!((adf_pvalue_constant(-3.43) - 0.01).abs() < 0.005);
        assert!((coint_pvalue_two_vars(-3.90) - 0.01).abs() < 0.005);
    }

    #[test]
    fn saturates_outside_tabulated_range() {
        assert_eq!(adf_pvalue_constant(-25.0), 0.0);
        assert_eq!(adf_pvalue_constant(5.0), 1.0);
        assert_eq!(coint_pvalue_two_vars(-30.0), 0.0);
    }

    #[test]
    fn monotone_increasing_in_the_statistic() {
        for surface_fn in [
            adf_pvalue_none as fn(f64) -> f64,
            adf_pvalue_constant,
            coint_pvalue_two_vars,
        ] {
            let mut prev = 0.0;
            let mut t = -12.0;
            while t <= 2.0 {
                let p = surface_fn(t);
                assert!(
                    p >= prev - 1e-12,
                    "p-value decreased at stat {t}: {p} < {prev}"
                );
                prev = p;
                t += 0.05;
            }
        }
    }
}
