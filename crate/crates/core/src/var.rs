//! VAR(p) estimation, stability analysis, information criteria, lag-order
//! selection, and residual diagnostics.
//!
//! The model in levels is
//!
//! ```text
//! X_t = c + Phi_1 X_{t-1} + ... + Phi_p X_{t-p} + a_t
//! ```
//!
//! estimated equation by equation with ordinary least squares on the shared
//! design `[1, X_{t-1}, ..., X_{t-p}]`. Stability is judged from the
//! companion-matrix eigenvalues, which is equivalent to all roots of
//! `det(I - Phi_1 z - ... - Phi_p z^p)` lying outside the unit circle.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ljung_box::{ljung_box, LjungBoxResult};
use crate::series::{acf, SeriesFrame};
use crate::{ols, sim};

/// Margin inside the unit circle required for a model to count as stable:
/// the largest companion eigenvalue modulus must be below `1 - STABILITY_TOL`.
pub const STABILITY_TOL: f64 = 1e-8;

/// A fitted VAR(p) model.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    /// Lag order.
    pub p: usize,
    /// Variable names, fixing the coordinate order of all matrices.
    pub names: Vec<String>,
    /// Intercept vector `c` (length `m`).
    pub intercept: DVector<f64>,
    /// Coefficient matrices `Phi_1..Phi_p`, each `m x m`; entry `(i, l)` is
    /// the loading of equation `i` on variable `l` lagged `j` steps.
    pub coeffs: Vec<DMatrix<f64>>,
    /// Residual covariance with the small-sample divisor
    /// `n_obs - (m p + 1)`.
    pub resid_cov: DMatrix<f64>,
    /// Estimation residuals, one row per used observation, one column per
    /// variable.
    pub residuals: DMatrix<f64>,
    /// Number of observations used in the regression.
    pub n_obs: usize,
}

impl VarModel {
    /// Number of variables `m`.
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// The stationary mean implied by the coefficients, when
    /// `I - Phi_1 - ... - Phi_p` is invertible: solves
    /// `(I - sum_j Phi_j) mu = c`.
    pub fn implied_mean(&self) -> Option<DVector<f64>> {
        let m = self.dim();
        let mut a = DMatrix::identity(m, m);
        for phi in &self.coeffs {
            a -= phi;
        }
        a.lu().solve(&self.intercept)
    }
}

/// Companion-matrix stability summary from [`check_stability`].
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Eigenvalue moduli of the companion matrix, sorted descending.
    pub eigenvalue_moduli: Vec<f64>,
    /// True when every modulus is below `1 - STABILITY_TOL`.
    pub is_stable: bool,
    /// `1 - max_modulus`; positive for stable models.
    pub margin: f64,
}

/// The four information criteria evaluated for one fitted model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationCriteria {
    pub aic: f64,
    pub hqc: f64,
    pub sc: f64,
    pub fpe: f64,
}

/// One row of a lag-selection table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagCriteria {
    pub lag: usize,
    pub aic: f64,
    pub hqc: f64,
    pub sc: f64,
    pub fpe: f64,
}

/// Which criterion to optimize when a single lag order must be chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Aic,
    Hqc,
    Sc,
    Fpe,
}

impl Criterion {
    /// All criteria, in table column order.
    pub const ALL: [Criterion; 4] = [Criterion::Aic, Criterion::Hqc, Criterion::Sc, Criterion::Fpe];

    /// Lower-case column label.
    pub fn label(self) -> &'static str {
        match self {
            Criterion::Aic => "aic",
            Criterion::Hqc => "hqc",
            Criterion::Sc => "sc",
            Criterion::Fpe => "fpe",
        }
    }
}

/// The lag order minimizing each criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChosenLags {
    pub aic: usize,
    pub hqc: usize,
    pub sc: usize,
    pub fpe: usize,
}

/// Criterion table over candidate lag orders, produced by [`select_lag`].
#[derive(Debug, Clone, PartialEq)]
pub struct LagSelectionTable {
    /// One row per candidate lag, ascending.
    pub rows: Vec<LagCriteria>,
    /// Argmin per criterion; ties resolved toward the smaller lag.
    pub chosen: ChosenLags,
    /// Common estimation sample size shared by all candidates.
    pub effective_sample: usize,
}

impl LagSelectionTable {
    /// Builds a table from externally supplied rows, computing the
    /// per-criterion argmins. Ties go to the smaller lag (rows must be in
    /// ascending lag order).
    ///
    /// # Errors
    ///
    /// [`Error::InsufficientData`] when `rows` is empty.
    pub fn from_rows(rows: Vec<LagCriteria>, effective_sample: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientData {
                context: "lag selection table",
                needed: 1,
                got: 0,
            });
        }
        let argmin = |get: fn(&LagCriteria) -> f64| -> usize {
            let mut best = &rows[0];
            for row in &rows[1..] {
                if get(row) < get(best) {
                    best = row;
                }
            }
            best.lag
        };
        let chosen = ChosenLags {
            aic: argmin(|r| r.aic),
            hqc: argmin(|r| r.hqc),
            sc: argmin(|r| r.sc),
            fpe: argmin(|r| r.fpe),
        };
        Ok(Self {
            rows,
            chosen,
            effective_sample,
        })
    }

    /// The chosen lag for `criterion`.
    pub fn chosen_by(&self, criterion: Criterion) -> usize {
        match criterion {
            Criterion::Aic => self.chosen.aic,
            Criterion::Hqc => self.chosen.hqc,
            Criterion::Sc => self.chosen.sc,
            Criterion::Fpe => self.chosen.fpe,
        }
    }
}

/// Builds the lagged design `Z` (rows `start..T`, columns
/// `[1, X_{t-1}, ..., X_{t-p}]`) and the response block `Y` (same rows).
pub(crate) fn build_design(
    values: &DMatrix<f64>,
    p: usize,
    start: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let t = values.nrows();
    let m = values.ncols();
    let rows = t - start;
    let mut z = DMatrix::zeros(rows, m * p + 1);
    let mut y = DMatrix::zeros(rows, m);
    for (row, tt) in (start..t).enumerate() {
        z[(row, 0)] = 1.0;
        for j in 1..=p {
            for l in 0..m {
                z[(row, 1 + (j - 1) * m + l)] = values[(tt - j, l)];
            }
        }
        for l in 0..m {
            y[(row, l)] = values[(tt, l)];
        }
    }
    (z, y)
}

/// Stacks the intercept and coefficient matrices back into the regression
/// layout used by [`build_design`]: row 0 is the intercept, followed by one
/// `m`-row block per lag holding `Phi_j` transposed.
pub(crate) fn assemble_beta(intercept: &DVector<f64>, coeffs: &[DMatrix<f64>]) -> DMatrix<f64> {
    let m = intercept.len();
    let p = coeffs.len();
    let mut beta = DMatrix::zeros(m * p + 1, m);
    beta.row_mut(0).copy_from(&intercept.transpose());
    for (j, phi) in coeffs.iter().enumerate() {
        beta.view_mut((1 + j * m, 0), (m, m)).copy_from(&phi.transpose());
    }
    beta
}

/// Human-readable name of design column `idx`: the intercept or
/// `"<variable>.l<j>"`.
fn regressor_name(names: &[String], idx: usize) -> String {
    if idx == 0 {
        return "const".to_string();
    }
    let m = names.len();
    let j = (idx - 1) / m + 1;
    let l = (idx - 1) % m;
    format!("{}.l{}", names[l], j)
}

/// Fits a VAR(`p`) to the frame by per-equation least squares on
/// `[1, X_{t-1}, ..., X_{t-p}]`, using observations `t = p..T`.
///
/// # Errors
///
/// * [`Error::InvalidLag`] — `p` is 0 or leaves no usable observations.
/// * [`Error::InsufficientData`] — fewer effective observations than
///   `m p + 2`, the minimum for a positive residual-covariance divisor.
/// * [`Error::Collinearity`] — linearly dependent regressors, named.
pub fn fit_var(frame: &SeriesFrame, p: usize) -> Result<VarModel> {
    fit_var_from(frame, p, p)
}

/// Fits a VAR(`p`) using only observations `t = start..T` as regression
/// targets (`start >= p`). Lag selection uses this to put candidates of
/// different orders on the common sample implied by the largest candidate.
pub(crate) fn fit_var_from(frame: &SeriesFrame, p: usize, start: usize) -> Result<VarModel> {
    let t = frame.len();
    let m = frame.width();
    if p == 0 || p > start {
        return Err(Error::InvalidLag {
            lag: p,
            limit: start,
            context: "VAR fit",
        });
    }
    if t <= start {
        return Err(Error::InsufficientData {
            context: "VAR fit",
            needed: start + 1,
            got: t,
        });
    }
    let n_eff = t - start;
    let k = m * p + 1;
    // n_eff - k must be at least 1 for the small-sample covariance divisor.
    if n_eff < k + 1 {
        return Err(Error::InsufficientData {
            context: "VAR fit",
            needed: start + k + 1,
            got: t,
        });
    }

    let (z, y) = build_design(frame.values(), p, start);
    let names = frame.names();
    let fit = ols::least_squares(&z, &y, |i| regressor_name(names, i))?;

    let intercept = fit.coef.row(0).transpose();
    let mut coeffs = Vec::with_capacity(p);
    for j in 0..p {
        coeffs.push(fit.coef.rows(1 + j * m, m).transpose());
    }
    let divisor = (n_eff - k) as f64;
    let resid_cov = fit.residuals.transpose() * &fit.residuals / divisor;

    Ok(VarModel {
        p,
        names: names.to_vec(),
        intercept,
        coeffs,
        resid_cov,
        residuals: fit.residuals,
        n_obs: n_eff,
    })
}

/// Builds the `mp x mp` companion matrix and summarizes its eigenvalue
/// moduli. The model is stable iff the largest modulus is below
/// `1 - STABILITY_TOL`, equivalently iff all roots of the reverse
/// characteristic polynomial lie outside the unit circle.
pub fn check_stability(model: &VarModel) -> StabilityReport {
    let m = model.dim();
    let p = model.p;
    let dim = m * p;
    let mut companion = DMatrix::zeros(dim, dim);
    for (j, phi) in model.coeffs.iter().enumerate() {
        companion.view_mut((0, j * m), (m, m)).copy_from(phi);
    }
    for r in m..dim {
        companion[(r, r - m)] = 1.0;
    }
    let mut moduli: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).expect("moduli are finite"));
    let max_modulus = moduli.first().copied().unwrap_or(0.0);
    StabilityReport {
        eigenvalue_moduli: moduli,
        is_stable: max_modulus < 1.0 - STABILITY_TOL,
        margin: 1.0 - max_modulus,
    }
}

/// Evaluates AIC, HQC, SC, and FPE for a fitted model.
///
/// All four use the maximum-likelihood residual covariance
/// `Sigma~ = E'E / n` (divisor `n = n_obs`, not the small-sample one):
///
/// ```text
/// aic = ln det Sigma~ + 2 p m^2 / n
/// hqc = ln det Sigma~ + 2 ln(ln n) p m^2 / n
/// sc  = ln det Sigma~ + ln(n) p m^2 / n
/// fpe = det Sigma~ * ((n + d) / (n - d))^m,   d = m p + 1
/// ```
///
/// # Errors
///
/// [`Error::DegenerateCovariance`] when `det Sigma~` is not strictly
/// positive (for example after an exact fit).
pub fn information_criteria(model: &VarModel) -> Result<InformationCriteria> {
    let n = model.n_obs as f64;
    let m = model.dim();
    let sigma_ml = model.residuals.transpose() * &model.residuals / n;
    let chol = sigma_ml.cholesky().ok_or(Error::DegenerateCovariance)?;
    let ln_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    if !ln_det.is_finite() {
        return Err(Error::DegenerateCovariance);
    }
    let pm2 = (model.p * m * m) as f64;
    let d = (m * model.p + 1) as f64;
    Ok(InformationCriteria {
        aic: ln_det + 2.0 * pm2 / n,
        hqc: ln_det + 2.0 * n.ln().ln() * pm2 / n,
        sc: ln_det + n.ln() * pm2 / n,
        fpe: ln_det.exp() * ((n + d) / (n - d)).powi(m as i32),
    })
}

/// Fits every candidate lag `1..=p_max` on the common sample `t = p_max..T`
/// and tabulates the four criteria.
///
/// Candidates are evaluated in parallel; the result is deterministic and
/// identical to sequential evaluation. A failure at any candidate is
/// annotated with that lag.
///
/// # Errors
///
/// * [`Error::InvalidLag`] — `p_max` is 0.
/// * [`Error::InsufficientData`] — the largest candidate cannot be fitted.
/// * [`Error::LagSelection`] — a candidate fit or criterion evaluation
///   failed; carries the offending lag.
pub fn select_lag(frame: &SeriesFrame, p_max: usize) -> Result<LagSelectionTable> {
    if p_max == 0 {
        return Err(Error::InvalidLag {
            lag: 0,
            limit: frame.len().saturating_sub(1),
            context: "lag selection",
        });
    }
    let t = frame.len();
    let m = frame.width();
    let k_max = m * p_max + 1;
    if t < p_max + k_max + 1 {
        return Err(Error::InsufficientData {
            context: "lag selection",
            needed: p_max + k_max + 1,
            got: t,
        });
    }

    let rows: Vec<LagCriteria> = (1..=p_max)
        .into_par_iter()
        .map(|p| {
            let model = fit_var_from(frame, p, p_max).map_err(|e| Error::LagSelection {
                lag: p,
                source: Box::new(e),
            })?;
            let ic = information_criteria(&model).map_err(|e| Error::LagSelection {
                lag: p,
                source: Box::new(e),
            })?;
            Ok(LagCriteria {
                lag: p,
                aic: ic.aic,
                hqc: ic.hqc,
                sc: ic.sc,
                fpe: ic.fpe,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    LagSelectionTable::from_rows(rows, t - p_max)
}

/// Per-column residual diagnostics from [`residual_diagnostics`].
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDiagnostics {
    /// Variable name.
    pub name: String,
    /// Residual sample mean (should be numerically zero: the regression
    /// includes an intercept).
    pub mean: f64,
    /// Whiteness assessment, or the exact-fit marker when the residual is
    /// numerically zero and autocorrelations are undefined.
    pub outcome: DiagnosticOutcome,
}

/// Either a computed whiteness test or the degenerate exact-fit case.
#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticOutcome {
    /// Residuals are numerically zero; autocorrelation is undefined.
    ExactFit,
    /// Autocorrelations and the Ljung-Box test at the requested lag count.
    Tested {
        acf: Vec<f64>,
        ljung_box: LjungBoxResult,
    },
}

/// Runs per-equation residual whiteness diagnostics: sample mean,
/// autocorrelations to `lb_lags`, and the Ljung-Box test with
/// `fitted_params = m * p` degrees-of-freedom correction.
///
/// Columns whose residuals are numerically zero (exact fit) are reported as
/// [`DiagnosticOutcome::ExactFit`] instead of surfacing the degenerate-series
/// error from the autocorrelation routine.
///
/// # Errors
///
/// * [`Error::InvalidDof`] — `lb_lags <= m * p`.
/// * [`Error::InvalidLag`] — residual sample not longer than `lb_lags`.
pub fn residual_diagnostics(model: &VarModel, lb_lags: usize) -> Result<Vec<ColumnDiagnostics>> {
    let m = model.dim();
    let fitted_params = m * model.p;
    if lb_lags <= fitted_params {
        return Err(Error::InvalidDof {
            lags: lb_lags,
            fitted_params,
        });
    }
    if model.n_obs <= lb_lags {
        return Err(Error::InvalidLag {
            lag: lb_lags,
            limit: model.n_obs.saturating_sub(1),
            context: "residual diagnostics",
        });
    }

    let mut out = Vec::with_capacity(m);
    for (idx, name) in model.names.iter().enumerate() {
        let col: Vec<f64> = model.residuals.column(idx).iter().copied().collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let amax = col.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let outcome = if amax <= 1e-10 {
            DiagnosticOutcome::ExactFit
        } else {
            match acf(&col, lb_lags) {
                Err(Error::DegenerateSeries { .. }) => DiagnosticOutcome::ExactFit,
                Err(other) => return Err(other),
                Ok(a) => DiagnosticOutcome::Tested {
                    acf: a,
                    ljung_box: ljung_box(&col, lb_lags, fitted_params)?,
                },
            }
        };
        out.push(ColumnDiagnostics {
            name: name.clone(),
            mean,
            outcome,
        });
    }
    Ok(out)
}

/// Simulates a trajectory from a fitted model's coefficients and residual
/// covariance (Cholesky of `resid_cov`), starting at the implied mean.
///
/// # Errors
///
/// [`Error::DegenerateCovariance`] when `resid_cov` has no Cholesky factor.
pub fn simulate_from_model(
    model: &VarModel,
    t: usize,
    burn_in: usize,
    rng: &mut impl rand::Rng,
) -> Result<DMatrix<f64>> {
    let chol = model
        .resid_cov
        .clone()
        .cholesky()
        .ok_or(Error::DegenerateCovariance)?;
    Ok(sim::simulate_var(
        &model.intercept,
        &model.coeffs,
        &chol.l(),
        t,
        burn_in,
        rng,
    ))
}
