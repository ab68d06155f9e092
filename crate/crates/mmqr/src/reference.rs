//! Embedded reference descriptive statistics for the assembled analysis
//! panel (34 states, 1990Q1-2017Q2), a drift guard for rebuilt public
//! inputs, and a calibrated synthetic panel that reproduces the reference
//! rows for end-to-end exercises.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::design::{VAR_DFFR, VAR_DGTE, VAR_INFLATION, VAR_UNEXPECTED};
use crate::error::{Error, Result};
use crate::panel::PanelDataset;
use crate::time::QuarterId;

/// Published summary row of one analysis variable.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceRow {
    pub variable: &'static str,
    /// mean, std-dev, min, max over all cells.
    pub overall: (f64, f64, f64, f64),
    /// std-dev, min, max of unit means.
    pub between: (f64, f64, f64),
    /// std-dev, min, max of deviations from unit means, grand mean re-added.
    pub within: (f64, f64, f64),
    pub n_obs: usize,
    pub n_units: usize,
    pub t_bar: f64,
}

/// Reference rows for the 34-state, 110-quarter analysis panel.
#[allow(clippy::approx_constant)] // published std-devs, not truncated constants
pub const REFERENCE_ROWS: &[ReferenceRow] = &[
    ReferenceRow {
        variable: "ineqgrowth",
        overall: (0.56, 3.14, -11.07, 12.35),
        between: (0.19, 0.10, 1.00),
        within: (3.13, -11.26, 12.32),
        n_obs: 3740,
        n_units: 34,
        t_bar: 110.0,
    },
    ReferenceRow {
        variable: "pi",
        overall: (2.28, 1.38, -4.03, 9.35),
        between: (0.23, 1.82, 2.90),
        within: (1.36, -3.72, 9.21),
        n_obs: 3740,
        n_units: 34,
        t_bar: 110.0,
    },
    ReferenceRow {
        variable: "incgrowth",
        overall: (3.63, 2.90, -105.82, 12.08),
        between: (0.27, 2.77, 4.20),
        within: (2.89, -104.95, 11.63),
        n_obs: 3740,
        n_units: 34,
        t_bar: 110.0,
    },
    ReferenceRow {
        variable: "dffr",
        overall: (-0.31, 1.40, -4.34, 2.59),
        between: (0.0, -0.31, -0.31),
        within: (1.40, -4.34, 2.59),
        n_obs: 3740,
        n_units: 34,
        t_bar: 110.0,
    },
    ReferenceRow {
        variable: "dgte",
        overall: (4.60, 2.63, -1.38, 11.98),
        between: (0.0, 4.60, 4.60),
        within: (2.63, -1.38, 11.98),
        n_obs: 3740,
        n_units: 34,
        t_bar: 110.0,
    },
    ReferenceRow {
        variable: "unexpinfl",
        overall: (-0.34, 1.42, -6.27, 5.49),
        between: (0.23, -0.80, 0.28),
        within: (1.40, -5.83, 5.45),
        n_obs: 3740,
        n_units: 34,
        t_bar: 110.0,
    },
    ReferenceRow {
        variable: "union",
        overall: (0.47, 0.50, 0.0, 1.0),
        between: (0.51, 0.0, 1.0),
        within: (0.0, 0.47, 0.47),
        n_obs: 3740,
        n_units: 34,
        t_bar: 110.0,
    },
];

/// Absolute tolerance of the strict comparison.
pub const REFERENCE_TOLERANCE: f64 = 0.01;

pub fn reference_row(variable: &str) -> Option<&'static ReferenceRow> {
    REFERENCE_ROWS.iter().find(|r| r.variable == variable)
}

/// One statistic that strayed from its reference value.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDeviation {
    pub variable: String,
    pub statistic: String,
    pub reference: f64,
    pub actual: f64,
}

impl std::fmt::Display for ReferenceDeviation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: expected {} within {REFERENCE_TOLERANCE}, got {}",
            self.variable, self.statistic, self.reference, self.actual
        )
    }
}

/// Compare every panel variable that has a reference row against it at
/// +-0.01. A reference between std-dev of zero (a national series) must be
/// matched exactly, not approximately. Returns all deviations found.
pub fn check_against_reference(panel: &PanelDataset) -> Result<Vec<ReferenceDeviation>> {
    let mut deviations = Vec::new();
    for row in REFERENCE_ROWS {
        if !panel.has_variable(row.variable) {
            continue;
        }
        let stats = panel.describe(row.variable)?;
        let mut push = |statistic: &str, reference: f64, actual: f64| {
            let ok = if statistic == "between_sd" && reference == 0.0 {
                actual == 0.0
            } else {
                (actual - reference).abs() <= REFERENCE_TOLERANCE + 1e-12
            };
            if !ok {
                deviations.push(ReferenceDeviation {
                    variable: row.variable.to_string(),
                    statistic: statistic.to_string(),
                    reference,
                    actual,
                });
            }
        };
        push("overall_mean", row.overall.0, stats.overall.mean.unwrap_or(f64::NAN));
        push("overall_sd", row.overall.1, stats.overall.std_dev);
        push("overall_min", row.overall.2, stats.overall.min);
        push("overall_max", row.overall.3, stats.overall.max);
        push("between_sd", row.between.0, stats.between.std_dev);
        push("between_min", row.between.1, stats.between.min);
        push("between_max", row.between.2, stats.between.max);
        push("within_sd", row.within.0, stats.within.std_dev);
        push("within_min", row.within.1, stats.within.min);
        push("within_max", row.within.2, stats.within.max);
        push("n_obs", row.n_obs as f64, stats.n_obs as f64);
        push("n_units", row.n_units as f64, stats.n_units as f64);
        push("t_bar", row.t_bar, stats.t_bar);
    }
    Ok(deviations)
}

const N_UNITS: usize = 34;
const N_QUARTERS: usize = 110;

/// Interior values `c + d*z` solved so that {pinned + interior} hits an
/// exact sum and an exact sum of squared deviations about `mu`.
fn solve_interior(
    rng: &mut ChaCha8Rng,
    count: usize,
    mu: f64,
    total_sum: f64,
    total_ssd: f64,
    pinned: &[f64],
) -> Vec<f64> {
    let s_pin: f64 = pinned.iter().sum();
    let q_pin: f64 = pinned.iter().map(|p| (p - mu) * (p - mu)).sum();
    let s = total_sum - s_pin;
    let q = total_ssd - q_pin;
    let m = count as f64;
    let z: Vec<f64> = (0..count).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
    let s1: f64 = z.iter().sum();
    let s2: f64 = z.iter().map(|v| v * v).sum();
    let a = s - m * mu;
    let d2 = (q - a * a / m) / (s2 - s1 * s1 / m);
    assert!(d2 > 0.0, "interior dispersion target not attainable");
    let d = d2.sqrt();
    let c = (s - d * s1) / m;
    z.iter().map(|v| c + d * v).collect()
}

/// Cells of a state-varying series, built as unit mean + zero-mean deviation
/// so that every scope of the summary hits its reference.
fn state_varying_series(rng: &mut ChaCha8Rng, row: &ReferenceRow) -> Vec<Option<f64>> {
    let (mean, sd, min, max) = row.overall;
    let (b_sd, b_min, b_max) = row.between;
    let (_, w_min_target, w_max_target) = row.within;
    let n = N_UNITS as f64;
    let n_obs = (N_UNITS * N_QUARTERS) as f64;

    // Deviation extremes and the unit means that host them, so that both the
    // overall and the within extremes land exactly.
    let w_min = w_min_target - mean;
    let w_max = w_max_target - mean;
    let host_min_mean = min - w_min;
    let host_max_mean = max - w_max;
    assert!(b_min < host_min_mean && host_min_mean < b_max);
    assert!(b_min < host_max_mean && host_max_mean < b_max);

    // Unit means: pinned between extremes and the two hosts, interior solved.
    let pinned_means = [b_min, b_max, host_min_mean, host_max_mean];
    let ss_between = (n - 1.0) * b_sd * b_sd;
    let interior =
        solve_interior(rng, N_UNITS - 4, mean, n * mean, ss_between, &pinned_means);
    for v in &interior {
        assert!(*v > b_min && *v < b_max);
    }
    let mut unit_means = pinned_means.to_vec();
    unit_means.extend(interior);

    // Per-unit deviations: zero sum, equal share of the within sum of
    // squares, the two hosts carrying one pinned extreme each.
    let ss_within_total = (n_obs - 1.0) * sd * sd - N_QUARTERS as f64 * ss_between;
    let ss_per_unit = ss_within_total / n;
    let mut cells = Vec::with_capacity(N_UNITS * N_QUARTERS);
    for (i, unit_mean) in unit_means.iter().enumerate() {
        let pinned: &[f64] = match i {
            2 => &[w_min],
            3 => &[w_max],
            _ => &[],
        };
        let interior =
            solve_interior(rng, N_QUARTERS - pinned.len(), 0.0, 0.0, ss_per_unit, pinned);
        for v in &interior {
            assert!(v.abs() < w_max.min(-w_min), "interior deviation exceeds hosts");
        }
        let mut w: Vec<f64> = pinned.to_vec();
        w.extend(interior);
        cells.extend(w.iter().map(|v| Some(unit_mean + v)));
    }
    cells
}

/// Cells of a national series: one quarterly vector replicated across units,
/// giving an exactly-zero between std-dev.
fn national_series(rng: &mut ChaCha8Rng, row: &ReferenceRow) -> Vec<Option<f64>> {
    let (mean, sd, min, max) = row.overall;
    let n_obs = (N_UNITS * N_QUARTERS) as f64;
    // Cell-level sum of squares carried by the T-vector alone.
    let ss_t = (n_obs - 1.0) * sd * sd / N_UNITS as f64;
    let pinned = [min, max];
    let interior = solve_interior(
        rng,
        N_QUARTERS - 2,
        mean,
        N_QUARTERS as f64 * mean,
        ss_t,
        &pinned,
    );
    for v in &interior {
        assert!(*v > min && *v < max);
    }
    let mut series = pinned.to_vec();
    series.extend(interior);
    let mut cells = Vec::with_capacity(N_UNITS * N_QUARTERS);
    for _ in 0..N_UNITS {
        cells.extend(series.iter().map(|&v| Some(v)));
    }
    cells
}

/// A synthetic 34-state, 110-quarter panel whose pi, dffr, dgte, and
/// unexpinfl series reproduce their reference rows to well within the strict
/// tolerance. Series are calibrated marginally; cross-series relationships
/// are not preserved.
pub fn calibrated_panel(seed: u64) -> Result<PanelDataset> {
    let first = QuarterId::new(1990, 1)?;
    let times: Vec<QuarterId> = (0..N_QUARTERS as i64).map(|k| first.offset(k)).collect();
    let units: Vec<String> = (0..N_UNITS).map(|i| format!("S{i:02}")).collect();
    let mut panel = PanelDataset::new(units, times)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for variable in [VAR_INFLATION, VAR_UNEXPECTED] {
        let row = reference_row(variable).ok_or_else(|| {
            Error::schema(format!("no reference row for '{variable}'"))
        })?;
        panel.insert_series(variable, state_varying_series(&mut rng, row))?;
    }
    for variable in [VAR_DFFR, VAR_DGTE] {
        let row = reference_row(variable).ok_or_else(|| {
            Error::schema(format!("no reference row for '{variable}'"))
        })?;
        panel.insert_series(variable, national_series(&mut rng, row))?;
    }
    Ok(panel)
}
