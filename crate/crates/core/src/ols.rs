//! Internal multiple-response least squares shared by the regression-based
//! estimators (unit-root regressions, cointegrating regressions, VAR fits).
//!
//! Solving goes through a column-pivoted QR factorization so that exact or
//! near-exact collinearity is detected — and the offending regressors named —
//! instead of silently producing garbage coefficients.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative tolerance on the pivoted `R` diagonal below which a regressor is
/// declared linearly dependent on its predecessors.
const RANK_TOL: f64 = 1e-10;

/// Output of [`least_squares`].
#[derive(Debug)]
pub(crate) struct OlsFit {
    /// `k x q` coefficient matrix (one column per response).
    pub coef: DMatrix<f64>,
    /// `n x q` residual matrix `Y - X * coef`.
    pub residuals: DMatrix<f64>,
    /// `(X'X)^{-1}`, for coefficient standard errors.
    pub xtx_inv: DMatrix<f64>,
}

/// Solves `min ||Y - X B||` column-wise for a full-column-rank `X`.
///
/// `column_name` renders a design-matrix column index into a caller-level
/// regressor name for error reporting.
///
/// # Errors
///
/// [`Error::Collinearity`] naming the linearly dependent regressors;
/// [`Error::InsufficientData`] when there are fewer rows than columns.
pub(crate) fn least_squares(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    column_name: impl Fn(usize) -> String,
) -> Result<OlsFit> {
    debug_assert_eq!(x.nrows(), y.nrows());
    let n = x.nrows();
    let k = x.ncols();
    if n < k {
        return Err(Error::InsufficientData {
            context: "least squares",
            needed: k,
            got: n,
        });
    }

    let qr = x.clone().col_piv_qr();
    if let Some(bad) = collinear_pivots(&qr, k) {
        return Err(Error::Collinearity {
            columns: bad.iter().map(|&i| column_name(i)).collect(),
        });
    }

    // X P = Q R  =>  B = P (R^{-1} Q' Y), applied via triangular solves.
    let r = qr.r();
    let mut coef = qr.q().transpose() * y;
    if !r.solve_upper_triangular_mut(&mut coef) {
        // The rank check above should have caught this; treat as collinear.
        return Err(Error::Collinearity {
            columns: vec!["unidentified regressor".to_string()],
        });
    }
    qr.p().inv_permute_rows(&mut coef);

    // (X'X)^{-1} = P R^{-1} R^{-T} P'.
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(Error::DegenerateCovariance)?;
    let mut xtx_inv = &r_inv * r_inv.transpose();
    qr.p().inv_permute_rows(&mut xtx_inv);
    qr.p().inv_permute_columns(&mut xtx_inv);

    let residuals = y - x * &coef;
    Ok(OlsFit {
        coef,
        residuals,
        xtx_inv,
    })
}

fn collinear_pivots(
    qr: &nalgebra::ColPivQR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    k: usize,
) -> Option<Vec<usize>> {
    let r = qr.r();
    let scale = r[(0, 0)].abs();
    if scale == 0.0 {
        return Some((0..k).collect());
    }
    // Columns of X in pivoted order: track the permutation by applying it to
    // an index row-vector exactly as it was applied to the columns of X.
    let mut order = DMatrix::from_fn(1, k, |_, c| c as f64);
    qr.p().permute_columns(&mut order);
    let mut bad: Vec<usize> = (0..k)
        .filter(|&i| r[(i, i)].abs() <= RANK_TOL * scale)
        .map(|i| order[(0, i)] as usize)
        .collect();
    if bad.is_empty() {
        None
    } else {
        bad.sort_unstable();
        Some(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn plain_name(i: usize) -> String {
        format!("column {i}")
    }

    /// Hand-solved 2x2 normal equations for a univariate regression of
    /// y on [1, x]: the reference every QR result must reproduce.
    fn normal_equations_2x2(x: &[f64], y: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        (intercept, slope)
    }

    #[test]
    fn matches_normal_equations_on_simple_regression() {
        let xs = [1.0, 2.0, 1.0, 3.0, 2.0];
        let ys = [2.0, 1.0, 3.0, 2.0, 4.0];
        let x = DMatrix::from_fn(5, 2, |r, c| if c == 0 { 1.0 } else { xs[r] });
        let y = DMatrix::from_column_slice(5, 1, &ys);
        let fit = least_squares(&x, &y, plain_name).unwrap();
        let (b0, b1) = normal_equations_2x2(&xs, &ys);
        assert_abs_diff_eq!(fit.coef[(0, 0)], b0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coef[(1, 0)], b1, epsilon = 1e-12);
        // Residuals orthogonal to the design.
        let xt_e = x.transpose() * &fit.residuals;
        assert!(xt_e.amax() < 1e-10);
        // (X'X)^{-1} agrees with a direct inverse.
        let direct = (x.transpose() * &x).try_inverse().unwrap();
        assert!((&fit.xtx_inv - direct).amax() < 1e-10);
    }

    #[test]
    fn detects_exact_collinearity_and_names_the_column() {
        // Column 2 = 2 * column 1.
        let x = DMatrix::from_fn(10, 3, |r, c| match c {
            0 => 1.0,
            1 => r as f64 + 1.0,
            _ => 2.0 * (r as f64 + 1.0),
        });
        let y = DMatrix::from_fn(10, 1, |r, _| r as f64);
        let err = least_squares(&x, &y, plain_name).unwrap_err();
        match err {
            Error::Collinearity { columns } => {
                // Pivoting may blame either member of the dependent pair,
                // but never the intercept.
                assert!(!columns.is_empty());
                assert!(!columns.contains(&"column 0".to_string()));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn consistent_noiseless_system_is_recovered_exactly() {
        let x = DMatrix::from_fn(20, 3, |r, c| ((r * (c + 1)) as f64 * 0.37).sin() + 2.0);
        let truth = DMatrix::from_column_slice(3, 2, &[1.5, -2.0, 0.25, 3.0, 0.5, -1.0]);
        let y = &x * &truth;
        let fit = least_squares(&x, &y, plain_name).unwrap();
        assert!((&fit.coef - &truth).amax() < 1e-10);
        assert!(fit.residuals.amax() < 1e-10);
    }
}
