//! Dense least squares on the within-demeaned design.
//!
//! Solves use a column-pivoted QR so that rank deficiency is detected from
//! the diagonal of R with a relative tolerance, and the offending columns can
//! be reported by name.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance on |r_kk| / |r_00| below which a pivoted column is
/// treated as dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Column-pivoted QR of a tall matrix, reusable for several right-hand sides.
#[derive(Debug)]
pub struct LeastSquares {
    qr: nalgebra::linalg::ColPivQR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n_rows: usize,
    n_cols: usize,
}

impl LeastSquares {
    /// Factor `x` (rows >= cols) and fail if the pivoted R diagonal reveals a
    /// rank below the column count. `column_names` is used for the error.
    pub fn new(x: DMatrix<f64>, column_names: &[String]) -> Result<Self> {
        let (n_rows, n_cols) = (x.nrows(), x.ncols());
        if n_cols == 0 || n_rows < n_cols {
            return Err(Error::schema(format!(
                "least squares needs at least as many rows ({n_rows}) as columns ({n_cols})"
            )));
        }
        let qr = x.col_piv_qr();
        let r = qr.r();
        let lead = r[(0, 0)].abs();
        let rank = (0..n_cols)
            .take_while(|&k| r[(k, k)].abs() > RANK_TOLERANCE * lead && lead > 0.0)
            .count();
        if rank < n_cols {
            // Recover which original columns were pivoted into the deficient
            // trailing positions.
            let mut order = DMatrix::<f64>::from_fn(1, n_cols, |_, j| j as f64);
            qr.p().permute_columns(&mut order);
            let mut columns: Vec<String> = (rank..n_cols)
                .map(|k| column_names[order[(0, k)] as usize].clone())
                .collect();
            columns.sort();
            return Err(Error::RankDeficient { columns });
        }
        Ok(LeastSquares { qr, n_rows, n_cols })
    }

    /// Minimum-norm-residual solution of `x * b ~ y`.
    pub fn solve(&self, y: &DVector<f64>) -> DVector<f64> {
        assert_eq!(y.len(), self.n_rows, "rhs length mismatch");
        // x P = Q R  =>  b = P (R^-1 Q^T y)
        let mut w = self.qr.q().transpose() * y;
        let solved = self
            .qr
            .r()
            .view((0, 0), (self.n_cols, self.n_cols))
            .solve_upper_triangular_mut(&mut w);
        debug_assert!(solved, "full-rank R must be invertible");
        self.qr.p().inv_permute_rows(&mut w);
        w
    }
}

/// Per-unit means of contiguous equal-sized row blocks, one row block per
/// unit. Returns (demeaned, unit_means) with `unit_means` of length n_units.
pub fn demean_vector(values: &DVector<f64>, n_units: usize, rows_per_unit: usize) -> (DVector<f64>, Vec<f64>) {
    let mut demeaned = values.clone();
    let mut means = Vec::with_capacity(n_units);
    for u in 0..n_units {
        let lo = u * rows_per_unit;
        let mut sum = 0.0;
        for r in lo..lo + rows_per_unit {
            sum += values[r];
        }
        let mean = sum / rows_per_unit as f64;
        means.push(mean);
        for r in lo..lo + rows_per_unit {
            demeaned[r] -= mean;
        }
    }
    (demeaned, means)
}

/// Column-wise version of [`demean_vector`]; `unit_means` is n_units x K.
pub fn demean_matrix(x: &DMatrix<f64>, n_units: usize, rows_per_unit: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = x.ncols();
    let mut demeaned = x.clone();
    let mut means = DMatrix::zeros(n_units, k);
    for u in 0..n_units {
        let lo = u * rows_per_unit;
        for j in 0..k {
            let mut sum = 0.0;
            for r in lo..lo + rows_per_unit {
                sum += x[(r, j)];
            }
            let mean = sum / rows_per_unit as f64;
            means[(u, j)] = mean;
            for r in lo..lo + rows_per_unit {
                demeaned[(r, j)] -= mean;
            }
        }
    }
    (demeaned, means)
}
