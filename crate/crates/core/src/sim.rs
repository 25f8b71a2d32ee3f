//! Seeded simulation of autoregressive processes.
//!
//! Used by power studies and calibration tests; also handy for generating
//! synthetic panels. All functions draw from a caller-supplied RNG so runs
//! are reproducible.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Simulates `t` rows of the VAR(p) process
/// `X_t = intercept + sum_j coeffs[j] X_{t-j} + L e_t` with `e_t ~ N(0, I)`,
/// where `sigma_chol` is the lower Cholesky factor `L` of the innovation
/// covariance.
///
/// The recursion starts from zeros and the first `burn_in` rows are
/// discarded, so for a stable system the output is approximately a draw from
/// the stationary distribution.
///
/// # Panics
///
/// Panics on dimension mismatches between `intercept`, `coeffs`, and
/// `sigma_chol`; this is a test/support utility with programmer-controlled
/// shapes.
pub fn simulate_var(
    intercept: &DVector<f64>,
    coeffs: &[DMatrix<f64>],
    sigma_chol: &DMatrix<f64>,
    t: usize,
    burn_in: usize,
    rng: &mut impl Rng,
) -> DMatrix<f64> {
    let m = intercept.len();
    assert!(coeffs.iter().all(|c| c.nrows() == m && c.ncols() == m));
    assert_eq!(sigma_chol.nrows(), m);
    let p = coeffs.len();
    let total = t + burn_in;
    let mut history: Vec<DVector<f64>> = vec![DVector::zeros(m); p];
    let mut out = DMatrix::zeros(t, m);
    for step in 0..total {
        let mut x = intercept.clone();
        for (j, phi) in coeffs.iter().enumerate() {
            x += phi * &history[p - 1 - j];
        }
        let shock: DVector<f64> = DVector::from_fn(m, |_, _| rng.sample(StandardNormal));
        x += sigma_chol * shock;
        if p > 0 {
            history.remove(0);
            history.push(x.clone());
        }
        if step >= burn_in {
            out.row_mut(step - burn_in).copy_from(&x.transpose());
        }
    }
    out
}

/// Univariate AR(p) convenience wrapper over [`simulate_var`].
pub fn simulate_ar(
    intercept: f64,
    coeffs: &[f64],
    sigma: f64,
    t: usize,
    burn_in: usize,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let phi: Vec<DMatrix<f64>> = coeffs
        .iter()
        .map(|&c| DMatrix::from_element(1, 1, c))
        .collect();
    let sim = simulate_var(
        &DVector::from_element(1, intercept),
        &phi,
        &DMatrix::from_element(1, 1, sigma),
        t,
        burn_in,
        rng,
    );
    sim.column(0).iter().copied().collect()
}

/// A pure random walk: cumulative sum of `N(0, sigma^2)` increments.
pub fn simulate_random_walk(t: usize, sigma: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut out = Vec::with_capacity(t);
    let mut level = 0.0;
    for _ in 0..t {
        let e: f64 = rng.sample(StandardNormal);
        level += sigma * e;
        out.push(level);
    }
    out
}
