//! Method-of-moments estimation of the panel location-scale model
//!
//! ```text
//! y_it = alpha_i + x_it' beta + (delta_i + x_it' gamma) u_it,
//! ```
//!
//! with `delta_i + x_it' gamma > 0` everywhere. Quantile coefficients come
//! from three closed-form stages rather than per-quantile check-loss
//! optimization over all parameters:
//!
//! 1. location: within (unit-demeaned) least squares of `y` on `x`, then
//!    `alpha_i` recovered from unit means;
//! 2. scale: within least squares of |residuals| on the same regressors,
//!    rejected if any fitted scale is nonpositive;
//! 3. a quantile of the standardized residuals, taken per grid point.
//!
//! The per-quantile coefficient vector is then the affine combination
//! `beta + q(tau) * gamma`, and the quantile fixed effect of unit `i` is
//! `alpha_i + delta_i * q(tau)`.

use nalgebra::{DMatrix, DVector};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::{demean_matrix, demean_vector, LeastSquares};

/// Location stage: slopes, unit intercepts, and residuals.
#[derive(Debug, Clone)]
pub struct LocationFit {
    /// One slope per design column.
    pub beta: Vec<f64>,
    /// Per-unit intercepts, aligned with the design's unit order.
    pub alpha: Vec<f64>,
    /// `y_it - alpha_i - x_it' beta`, aligned with the design rows.
    pub residuals: DVector<f64>,
}

/// Scale stage: slopes and unit intercepts of the absolute-residual
/// regression, plus the fitted scale for every cell.
#[derive(Debug, Clone)]
pub struct ScaleFit {
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
    /// `delta_i + x_it' gamma`, strictly positive by construction.
    pub fitted_scale: DVector<f64>,
}

/// Full fit over a quantile grid.
#[derive(Debug, Clone)]
pub struct MmqrFit {
    pub location: LocationFit,
    pub scale: ScaleFit,
    /// The quantile grid, strictly increasing.
    pub taus: Vec<f64>,
    /// Standardized-residual quantile per grid point; nondecreasing.
    pub q: Vec<f64>,
    /// `coefficients[g][k] = beta[k] + q[g] * gamma[k]`.
    pub coefficients: Vec<Vec<f64>>,
    /// `fixed_effects_at_tau[g][i] = alpha[i] + delta[i] * q[g]`.
    pub fixed_effects_at_tau: Vec<Vec<f64>>,
    /// Design column names, for labeling output.
    pub columns: Vec<String>,
}

fn location_from_solution(
    design: &DesignMatrix,
    beta_vec: DVector<f64>,
    unit_mean_y: &[f64],
    unit_mean_x: &DMatrix<f64>,
) -> LocationFit {
    let n = design.n_units();
    let t = design.rows_per_unit();
    let k = design.n_columns();
    let mut alpha = Vec::with_capacity(n);
    for i in 0..n {
        let mut xb = 0.0;
        for j in 0..k {
            xb += unit_mean_x[(i, j)] * beta_vec[j];
        }
        alpha.push(unit_mean_y[i] - xb);
    }
    let mut residuals = DVector::zeros(design.n_rows());
    for i in 0..n {
        for r in 0..t {
            let row = i * t + r;
            let mut fit = alpha[i];
            for j in 0..k {
                fit += design.x[(row, j)] * beta_vec[j];
            }
            residuals[row] = design.y[row] - fit;
        }
    }
    LocationFit { beta: beta_vec.iter().copied().collect(), alpha, residuals }
}

fn scale_from_solution(
    design: &DesignMatrix,
    gamma_vec: DVector<f64>,
    unit_mean_abs: &[f64],
    unit_mean_x: &DMatrix<f64>,
) -> Result<ScaleFit> {
    let n = design.n_units();
    let t = design.rows_per_unit();
    let k = design.n_columns();
    let mut delta = Vec::with_capacity(n);
    for i in 0..n {
        let mut xg = 0.0;
        for j in 0..k {
            xg += unit_mean_x[(i, j)] * gamma_vec[j];
        }
        delta.push(unit_mean_abs[i] - xg);
    }
    let mut fitted = DVector::zeros(design.n_rows());
    let mut bad = 0usize;
    let mut min = f64::INFINITY;
    for i in 0..n {
        for r in 0..t {
            let row = i * t + r;
            let mut s = delta[i];
            for j in 0..k {
                s += design.x[(row, j)] * gamma_vec[j];
            }
            fitted[row] = s;
            min = min.min(s);
            if s <= 0.0 {
                bad += 1;
            }
        }
    }
    if bad > 0 {
        return Err(Error::ScalePositivity { count: bad, total: design.n_rows(), min });
    }
    Ok(ScaleFit { gamma: gamma_vec.iter().copied().collect(), delta, fitted_scale: fitted })
}

/// Within least squares of the outcome on the regressors; `alpha_i` from the
/// unit means and residuals as defined by the model.
pub fn fit_location(design: &DesignMatrix) -> Result<LocationFit> {
    let n = design.n_units();
    let t = design.rows_per_unit();
    let (x_dem, x_means) = demean_matrix(&design.x, n, t);
    let (y_dem, y_means) = demean_vector(&design.y, n, t);
    let ls = LeastSquares::new(x_dem, &design.columns)?;
    let beta = ls.solve(&y_dem);
    Ok(location_from_solution(design, beta, &y_means, &x_means))
}

/// Within least squares of |location residuals| on the regressors, with the
/// fitted scale required to be strictly positive at every cell.
pub fn fit_scale(design: &DesignMatrix, location: &LocationFit) -> Result<ScaleFit> {
    let n = design.n_units();
    let t = design.rows_per_unit();
    let abs_resid = location.residuals.map(f64::abs);
    let (x_dem, x_means) = demean_matrix(&design.x, n, t);
    let (a_dem, a_means) = demean_vector(&abs_resid, n, t);
    let ls = LeastSquares::new(x_dem, &design.columns)?;
    let gamma = ls.solve(&a_dem);
    scale_from_solution(design, gamma, &a_means, &x_means)
}

/// The tau-quantile of the standardized residuals `r / scale`, implemented as
/// the order statistic at (one-based) index `ceil(tau * M)` — the lower
/// endpoint of the check-loss minimizer set.
pub fn standardized_quantile(location: &LocationFit, scale: &ScaleFit, tau: f64) -> f64 {
    let mut standardized: Vec<f64> = location
        .residuals
        .iter()
        .zip(scale.fitted_scale.iter())
        .map(|(r, s)| r / s)
        .collect();
    standardized.sort_unstable_by(f64::total_cmp);
    quantile_of_sorted(&standardized, tau)
}

/// Order statistic at ceil(tau * M) of an ascending sample. Products that
/// land within 1e-9 of an integer are snapped to it so that exact grid
/// arithmetic (e.g. 0.4 * 5) selects the lower endpoint of the tie set.
pub(crate) fn quantile_of_sorted(sorted: &[f64], tau: f64) -> f64 {
    let m = sorted.len();
    assert!(m > 0, "empty sample");
    let r = tau * m as f64;
    let nearest = r.round();
    let idx = if (r - nearest).abs() <= 1e-9 { nearest } else { r.ceil() };
    let idx = (idx as usize).clamp(1, m);
    sorted[idx - 1]
}

/// Run all three stages over a quantile grid.
///
/// Stage composition is identical to calling [`fit_location`], [`fit_scale`]
/// and [`standardized_quantile`] in sequence; the within-demeaned regressors
/// are factored once and reused for both solves.
pub fn fit(design: &DesignMatrix, grid: &[f64]) -> Result<MmqrFit> {
    if grid.is_empty() {
        return Err(Error::schema("quantile grid is empty"));
    }
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::schema("quantile grid must be strictly increasing"));
        }
    }
    if grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::schema("quantiles must lie in (0,1)"));
    }

    let n = design.n_units();
    let t = design.rows_per_unit();
    let (x_dem, x_means) = demean_matrix(&design.x, n, t);
    let (y_dem, y_means) = demean_vector(&design.y, n, t);
    let ls = LeastSquares::new(x_dem, &design.columns)?;

    let beta = ls.solve(&y_dem);
    let location = location_from_solution(design, beta, &y_means, &x_means);

    let abs_resid = location.residuals.map(f64::abs);
    let (a_dem, a_means) = demean_vector(&abs_resid, n, t);
    let gamma = ls.solve(&a_dem);
    let scale = scale_from_solution(design, gamma, &a_means, &x_means)?;

    let mut standardized: Vec<f64> = location
        .residuals
        .iter()
        .zip(scale.fitted_scale.iter())
        .map(|(r, s)| r / s)
        .collect();
    standardized.sort_unstable_by(f64::total_cmp);

    let k = design.n_columns();
    let mut q = Vec::with_capacity(grid.len());
    let mut coefficients = Vec::with_capacity(grid.len());
    let mut fixed_effects = Vec::with_capacity(grid.len());
    for &tau in grid {
        let qt = quantile_of_sorted(&standardized, tau);
        q.push(qt);
        coefficients.push((0..k).map(|j| location.beta[j] + qt * scale.gamma[j]).collect());
        fixed_effects
            .push((0..n).map(|i| location.alpha[i] + scale.delta[i] * qt).collect());
    }

    Ok(MmqrFit {
        location,
        scale,
        taus: grid.to_vec(),
        q,
        coefficients,
        fixed_effects_at_tau: fixed_effects,
        columns: design.columns.clone(),
    })
}
