//! Oracles shared by the integration suites. These deliberately take
//! different computational routes from the library: explicit dummy-variable
//! normal equations instead of demeaned QR, exact integer check-loss
//! evaluation, and a rational approximation of the normal quantile.
#![allow(dead_code)] // each test binary uses its own subset

use mmqr::design::DesignMatrix;
use mmqr::time::QuarterId;
use nalgebra::{DMatrix, DVector};

/// Least squares of `rhs` on [X | one dummy per unit], solved through the
/// normal equations with an LU factorization. Returns (slopes, unit effects).
pub fn dummy_variable_ls(design: &DesignMatrix, rhs: &DVector<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = design.n_units();
    let t = design.rows_per_unit();
    let k = design.n_columns();
    let m = design.n_rows();
    let mut full = DMatrix::zeros(m, k + n);
    for r in 0..m {
        for j in 0..k {
            full[(r, j)] = design.x[(r, j)];
        }
        full[(r, k + r / t)] = 1.0;
    }
    let xtx = full.transpose() * &full;
    let xty = full.transpose() * rhs;
    let sol = xtx.lu().solve(&xty).expect("oracle system must be solvable");
    ((0..k).map(|j| sol[j]).collect(), (0..n).map(|i| sol[k + i]).collect())
}

/// Exact check loss for dyadic samples. With sample values `n_i / 1024` and
/// `tau = k / denom`, the loss of candidate `m / 1024` equals the returned
/// integer divided by `denom * 1024`; ties are therefore decided exactly.
pub fn check_loss_scaled(sample: &[i64], k: i64, denom: i64, m: i64) -> i128 {
    sample
        .iter()
        .map(|&n| {
            let d = (n - m) as i128;
            if d >= 0 {
                k as i128 * d
            } else {
                (k - denom) as i128 * d
            }
        })
        .sum()
}

/// Standard normal quantile via the Acklam rational approximation
/// (relative error below 1.2e-9), an independent route to the analytic
/// per-quantile truth.
#[allow(clippy::excessive_precision)] // published approximation coefficients
pub fn inverse_normal_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "p must be in (0,1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |p: f64| -> f64 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    if p < P_LOW {
        tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(1.0 - p)
    }
}

/// Hand-rolled design matrix over explicit column vectors.
pub fn design_from_columns(
    n: usize,
    t: usize,
    y: Vec<f64>,
    columns: Vec<(String, Vec<f64>)>,
) -> DesignMatrix {
    let first = QuarterId::new(2000, 1).unwrap();
    let k = columns.len();
    DesignMatrix {
        units: (0..n).map(|i| format!("U{i}")).collect(),
        times: (0..t as i64).map(|j| first.offset(j)).collect(),
        columns: columns.iter().map(|(name, _)| name.clone()).collect(),
        y: DVector::from_vec(y),
        x: DMatrix::from_fn(n * t, k, |r, j| columns[j].1[r]),
    }
}
