//! Cluster (unit-level) bootstrap standard errors, p-values, and
//! significance stars for the per-quantile coefficients.
//!
//! Whole units are resampled with replacement so that arbitrary serial
//! dependence within a unit (e.g. from overlapping year-over-year
//! transforms) survives into every replicate. Each replicate owns a private
//! RNG stream derived from `(seed, replicate index)`, so the table is
//! identical no matter how many worker threads run.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::design::{build_design, DesignMatrix, ModelSpec};
use crate::error::{Error, Result};
use crate::estimator::fit;
use crate::panel::PanelDataset;

/// Significance stars for a p-value: `***` below 0.01, `**` below 0.05,
/// `*` below 0.10, empty otherwise.
pub fn star(p: f64) -> Result<&'static str> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::schema(format!("p-value {p} outside [0,1]")));
    }
    Ok(if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    })
}

/// One row of the coefficient table. Standard error, p-value and stars are
/// absent when the bootstrap is disabled.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub tau: f64,
    pub column: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub p_value: Option<f64>,
    pub stars: Option<&'static str>,
}

/// Per-quantile, per-regressor estimates with bootstrap inference.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    /// Rows ordered by quantile, then by design column.
    pub rows: Vec<CoefficientRow>,
    /// Replicates requested.
    pub requested_reps: usize,
    /// Replicates that refit successfully and entered the standard errors.
    pub effective_reps: usize,
    /// Replicates discarded because the refit failed.
    pub discarded_reps: usize,
}

/// Largest tolerated share of discarded replicates.
const MAX_DISCARD_SHARE: f64 = 0.20;

/// Fit the full sample, then bootstrap whole units to attach standard
/// errors, normal-approximation p-values, and stars.
pub fn cluster_bootstrap(panel: &PanelDataset, spec: &ModelSpec) -> Result<CoefficientTable> {
    let design = build_design(panel, spec)?;
    cluster_bootstrap_design(&design, spec)
}

/// Bootstrap over a prebuilt design. Resampling unit blocks of the design is
/// exactly equivalent to resampling panel units and rebuilding: every
/// transform is within-unit and the trim is uniform.
pub fn cluster_bootstrap_design(design: &DesignMatrix, spec: &ModelSpec) -> Result<CoefficientTable> {
    spec.validate()?;
    let grid = &spec.quantile_grid;
    let full = fit(design, grid)?;
    let b = spec.bootstrap_reps;

    if b == 0 {
        let mut rows = Vec::new();
        for (g, &tau) in grid.iter().enumerate() {
            for (j, column) in full.columns.iter().enumerate() {
                rows.push(CoefficientRow {
                    tau,
                    column: column.clone(),
                    estimate: full.coefficients[g][j],
                    std_error: None,
                    p_value: None,
                    stars: None,
                });
            }
        }
        return Ok(CoefficientTable {
            rows,
            requested_reps: 0,
            effective_reps: 0,
            discarded_reps: 0,
        });
    }

    let n = design.n_units();
    if n < 3 {
        return Err(Error::Inference(format!(
            "unit bootstrap needs at least 3 units, panel has {n}"
        )));
    }

    // Replicate r is a pure function of (seed, r); collecting into a vector
    // indexed by r keeps aggregation independent of scheduling.
    let replicates: Vec<Option<Vec<Vec<f64>>>> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
            rng.set_stream(1 + r as u64);
            let draw: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let resampled = design.resample_units(&draw);
            fit(&resampled, grid).ok().map(|f| f.coefficients)
        })
        .collect();

    let successes: Vec<&Vec<Vec<f64>>> = replicates.iter().flatten().collect();
    let effective = successes.len();
    let discarded = b - effective;
    if (discarded as f64) > MAX_DISCARD_SHARE * b as f64 {
        return Err(Error::Inference(format!(
            "{discarded} of {b} bootstrap replicates failed to refit (more than {:.0}%)",
            MAX_DISCARD_SHARE * 100.0
        )));
    }
    if effective < 2 {
        return Err(Error::Inference(format!(
            "only {effective} bootstrap replicates succeeded; cannot estimate a standard error"
        )));
    }

    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut rows = Vec::new();
    for (g, &tau) in grid.iter().enumerate() {
        for (j, column) in full.columns.iter().enumerate() {
            let estimate = full.coefficients[g][j];
            let mean = successes.iter().map(|c| c[g][j]).sum::<f64>() / effective as f64;
            let ss = successes
                .iter()
                .map(|c| (c[g][j] - mean) * (c[g][j] - mean))
                .sum::<f64>();
            let se = (ss / (effective - 1) as f64).sqrt();
            let p = if se > 0.0 {
                2.0 * (1.0 - normal.cdf((estimate / se).abs()))
            } else if estimate == 0.0 {
                1.0
            } else {
                0.0
            };
            rows.push(CoefficientRow {
                tau,
                column: column.clone(),
                estimate,
                std_error: Some(se),
                p_value: Some(p),
                stars: Some(star(p)?),
            });
        }
    }

    Ok(CoefficientTable {
        rows,
        requested_reps: b,
        effective_reps: effective,
        discarded_reps: discarded,
    })
}
