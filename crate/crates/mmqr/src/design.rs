//! Regression specification and design-matrix construction.
//!
//! A [`ModelSpec`] describes which inflation series enters (actual or
//! unexpected), which lags of it are free, whether the policy controls are
//! included, the quantile grid, and the bootstrap settings. [`build_design`]
//! turns a panel plus a spec into aligned outcome/regressor arrays: inflation
//! lags in ascending order, then income growth, then (optionally) the federal
//! funds rate and government expenditure controls. Excluded lags are
//! hard-constrained to zero by omitting their columns.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::panel::{GrowthMethod, MonthlyData, PanelDataset};
use crate::time::QuarterId;

/// Outcome variable of every regression.
pub const VAR_OUTCOME: &str = "ineqgrowth";
/// Quarterly averages of 12-month inflation rates.
pub const VAR_INFLATION: &str = "pi";
/// Year-over-year growth of income per capita.
pub const VAR_INCOME_GROWTH: &str = "incgrowth";
/// Year-over-year change of the federal funds rate, percentage points.
pub const VAR_DFFR: &str = "dffr";
/// Year-over-year growth of state and local government expenditure.
pub const VAR_DGTE: &str = "dgte";
/// Actual inflation minus the year-ahead forecast made four quarters earlier.
pub const VAR_UNEXPECTED: &str = "unexpinfl";

/// Which inflation measure enters the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InflationKind {
    #[default]
    Actual,
    Unexpected,
}

impl InflationKind {
    pub fn variable(&self) -> &'static str {
        match self {
            InflationKind::Actual => VAR_INFLATION,
            InflationKind::Unexpected => VAR_UNEXPECTED,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "actual" => Ok(InflationKind::Actual),
            "unexpected" => Ok(InflationKind::Unexpected),
            other => Err(Error::schema(format!(
                "inflation kind must be 'actual' or 'unexpected', got '{other}'"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InflationKind::Actual => "actual",
            InflationKind::Unexpected => "unexpected",
        }
    }
}

/// Figure presets: which inflation measure and whether the policy controls
/// enter. All use lags 0..4 jointly and the every-fifth-quantile grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl Figure {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fig5" => Ok(Figure::Fig5),
            "fig6" => Ok(Figure::Fig6),
            "fig7" => Ok(Figure::Fig7),
            "fig8" => Ok(Figure::Fig8),
            other => Err(Error::schema(format!(
                "preset must be one of fig5..fig8, got '{other}'"
            ))),
        }
    }
}

/// Declarative regression specification.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub inflation_kind: InflationKind,
    /// Lag positions of inflation whose coefficients are free; a subset of
    /// {0,..,4}, nonempty, kept sorted and deduplicated.
    pub lag_set: Vec<usize>,
    /// Adds the dffr and dGTE controls; income growth is always included.
    pub include_controls: bool,
    /// Strictly increasing quantiles in (0,1).
    pub quantile_grid: Vec<f64>,
    pub bootstrap_reps: usize,
    pub rng_seed: u64,
}

pub const MAX_INFLATION_LAG: usize = 4;
pub const DEFAULT_BOOTSTRAP_REPS: usize = 500;
pub const DEFAULT_SEED: u64 = 1;

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            inflation_kind: InflationKind::Actual,
            lag_set: (0..=MAX_INFLATION_LAG).collect(),
            include_controls: false,
            quantile_grid: default_quantile_grid(),
            bootstrap_reps: DEFAULT_BOOTSTRAP_REPS,
            rng_seed: DEFAULT_SEED,
        }
    }
}

/// Every fifth quantile: 0.05, 0.10, ..., 0.95.
pub fn default_quantile_grid() -> Vec<f64> {
    (1..=19).map(|k| round10(k as f64 * 0.05)).collect()
}

/// Snap to 10 decimal digits so grids built from text or arithmetic print
/// cleanly and compare exactly.
fn round10(x: f64) -> f64 {
    (x * 1e10).round() / 1e10
}

/// Parse a `start:stop:step` quantile grid.
pub fn parse_quantile_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::schema(format!("grid must be START:STOP:STEP, got '{text}'")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::schema(format!("bad grid number '{p}': {e}")))
        })
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 || stop < start {
        return Err(Error::schema(format!("grid '{text}' must have step > 0 and stop >= start")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|k| round10(start + k as f64 * step)).collect();
    validate_grid(&grid)?;
    Ok(grid)
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::schema("quantile grid is empty"));
    }
    for &tau in grid {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::schema(format!("quantile {tau} is outside (0,1)")));
        }
    }
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::schema("quantile grid must be strictly increasing"));
        }
    }
    Ok(())
}

impl ModelSpec {
    /// The spec behind one of the four result figures.
    pub fn preset(figure: Figure) -> ModelSpec {
        let (kind, controls) = match figure {
            Figure::Fig5 => (InflationKind::Actual, false),
            Figure::Fig6 => (InflationKind::Actual, true),
            Figure::Fig7 => (InflationKind::Unexpected, false),
            Figure::Fig8 => (InflationKind::Unexpected, true),
        };
        ModelSpec {
            inflation_kind: kind,
            include_controls: controls,
            ..ModelSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lag_set.is_empty() {
            return Err(Error::schema("lag set must be nonempty"));
        }
        for w in self.lag_set.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::schema("lag set must be sorted and deduplicated"));
            }
        }
        if *self.lag_set.last().unwrap() > MAX_INFLATION_LAG {
            return Err(Error::schema(format!(
                "lags are limited to 0..={MAX_INFLATION_LAG}, got {:?}",
                self.lag_set
            )));
        }
        validate_grid(&self.quantile_grid)
    }

    pub fn max_lag(&self) -> usize {
        self.lag_set.iter().copied().max().unwrap_or(0)
    }

    /// Leading quarters dropped by [`build_design`]: enough for the deepest
    /// inflation lag and for the year-ago transforms behind the variables.
    pub fn trim_quarters(&self) -> usize {
        self.max_lag().max(4)
    }

    /// Design column names in their fixed order.
    pub fn column_names(&self) -> Vec<String> {
        let var = self.inflation_kind.variable();
        let mut names: Vec<String> =
            self.lag_set.iter().map(|j| format!("{var}_l{j}")).collect();
        names.push(VAR_INCOME_GROWTH.to_string());
        if self.include_controls {
            names.push(VAR_DFFR.to_string());
            names.push(VAR_DGTE.to_string());
        }
        names
    }

    /// Variables the panel must contain for this spec.
    pub fn required_variables(&self) -> Vec<&'static str> {
        let mut vars = vec![VAR_OUTCOME, self.inflation_kind.variable(), VAR_INCOME_GROWTH];
        if self.include_controls {
            vars.push(VAR_DFFR);
            vars.push(VAR_DGTE);
        }
        vars
    }

    /// Serialize as `key = value` lines.
    pub fn to_config_string(&self) -> String {
        let lags: Vec<String> = self.lag_set.iter().map(|j| j.to_string()).collect();
        let grid: Vec<String> = self.quantile_grid.iter().map(|t| t.to_string()).collect();
        format!(
            "inflation = {}\nlags = {}\ncontrols = {}\ngrid = {}\nbootstrap = {}\nseed = {}\n",
            self.inflation_kind.name(),
            lags.join(","),
            if self.include_controls { "on" } else { "off" },
            grid.join(","),
            self.bootstrap_reps,
            self.rng_seed
        )
    }

    /// Apply `key = value` lines on top of `self`. Unknown keys error.
    pub fn apply_config_str(&mut self, text: &str, source: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let loc = format!("{source}:{}", lineno + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(&loc, "expected 'key = value'"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "inflation" => self.inflation_kind = InflationKind::parse(value)?,
                "lags" => self.lag_set = parse_lag_set(value)?,
                "controls" => self.include_controls = parse_on_off(value)?,
                "grid" => {
                    self.quantile_grid = if value.contains(':') {
                        parse_quantile_grid(value)?
                    } else {
                        let grid: Vec<f64> = value
                            .split(',')
                            .map(|p| {
                                p.trim().parse::<f64>().map(round10).map_err(|e| {
                                    Error::parse(&loc, format!("bad quantile '{p}': {e}"))
                                })
                            })
                            .collect::<Result<_>>()?;
                        validate_grid(&grid)?;
                        grid
                    }
                }
                "bootstrap" => {
                    self.bootstrap_reps = value
                        .parse()
                        .map_err(|e| Error::parse(&loc, format!("bad bootstrap count: {e}")))?
                }
                "seed" => {
                    self.rng_seed = value
                        .parse()
                        .map_err(|e| Error::parse(&loc, format!("bad seed: {e}")))?
                }
                other => return Err(Error::parse(&loc, format!("unknown key '{other}'"))),
            }
        }
        self.validate()
    }
}

/// Parse a comma-separated lag list, e.g. `0,1,2,3,4`.
pub fn parse_lag_set(text: &str) -> Result<Vec<usize>> {
    let mut lags: Vec<usize> = text
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| Error::schema(format!("bad lag '{p}': {e}")))
        })
        .collect::<Result<_>>()?;
    lags.sort_unstable();
    lags.dedup();
    Ok(lags)
}

fn parse_on_off(s: &str) -> Result<bool> {
    match s {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        other => Err(Error::schema(format!("expected on|off, got '{other}'"))),
    }
}

/// National one-year-ahead inflation forecasts, one value per origin quarter.
#[derive(Debug, Clone, Default)]
pub struct ForecastSeries {
    values: BTreeMap<QuarterId, f64>,
}

impl ForecastSeries {
    pub fn new(rows: impl IntoIterator<Item = (QuarterId, f64)>) -> Self {
        ForecastSeries { values: rows.into_iter().collect() }
    }

    pub fn get(&self, origin: &QuarterId) -> Option<f64> {
        self.values.get(origin).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&QuarterId, &f64)> {
        self.values.iter()
    }
}

/// Actual inflation minus the national forecast made four quarters earlier:
/// `u_it = pi_it - F_{t-4 -> t}`. Missing inflation propagates; a missing
/// forecast for a needed origin quarter is an error.
pub fn unexpected_inflation(
    panel: &PanelDataset,
    inflation_var: &str,
    forecast: &ForecastSeries,
) -> Result<Vec<Option<f64>>> {
    let values = panel.series(inflation_var)?;
    let t_len = panel.n_times();
    let mut out = vec![None; values.len()];
    for i in 0..panel.n_units() {
        for t in 0..t_len {
            let Some(actual) = values[i * t_len + t] else { continue };
            let target = panel.times()[t];
            let origin = target.offset(-4);
            let Some(f) = forecast.get(&origin) else {
                return Err(Error::schema(format!(
                    "no one-year-ahead forecast for origin quarter {origin} \
                     (needed for target {target})"
                )));
            };
            out[i * t_len + t] = Some(actual - f);
        }
    }
    Ok(out)
}

/// Raw inputs that [`assemble_variables`] may derive regression variables
/// from when they are not already present in the panel.
#[derive(Debug, Clone, Default)]
pub struct AssemblyInputs {
    pub monthly_inflation: Option<MonthlyData>,
    pub forecast: Option<ForecastSeries>,
    pub growth_method: GrowthMethod,
}

/// Name of the raw level series a derived variable comes from.
const RAW_GINI: &str = "gini";
const RAW_INCOME: &str = "income";
const RAW_FFR: &str = "ffr";
const RAW_GTE: &str = "gte";

/// Fill in the standard regression variables that are missing from `panel`:
/// growth of inequality and income from their levels, the fourth difference
/// of the funds rate, government-expenditure growth, quarterly inflation from
/// monthly rates, and unexpected inflation from the forecast file. Variables
/// already present pass through untouched.
pub fn assemble_variables(panel: &PanelDataset, inputs: &AssemblyInputs) -> Result<PanelDataset> {
    let mut out = panel.clone();
    if !out.has_variable(VAR_OUTCOME) && out.has_variable(RAW_GINI) {
        let g = out.yoy_growth(RAW_GINI, inputs.growth_method)?;
        out.insert_series(VAR_OUTCOME, g)?;
    }
    if !out.has_variable(VAR_INCOME_GROWTH) && out.has_variable(RAW_INCOME) {
        let g = out.yoy_growth(RAW_INCOME, inputs.growth_method)?;
        out.insert_series(VAR_INCOME_GROWTH, g)?;
    }
    if !out.has_variable(VAR_DFFR) && out.has_variable(RAW_FFR) {
        let d = out.diff4(RAW_FFR)?;
        out.insert_series(VAR_DFFR, d)?;
    }
    if !out.has_variable(VAR_DGTE) && out.has_variable(RAW_GTE) {
        let g = out.yoy_growth(RAW_GTE, inputs.growth_method)?;
        out.insert_series(VAR_DGTE, g)?;
    }
    if !out.has_variable(VAR_INFLATION) {
        if let Some(monthly) = &inputs.monthly_inflation {
            let q = monthly.quarterly_average(&out)?;
            out.insert_series(VAR_INFLATION, q)?;
        }
    }
    if !out.has_variable(VAR_UNEXPECTED) && out.has_variable(VAR_INFLATION) {
        if let Some(forecast) = &inputs.forecast {
            let u = unexpected_inflation(&out, VAR_INFLATION, forecast)?;
            out.insert_series(VAR_UNEXPECTED, u)?;
        }
    }
    Ok(out)
}

/// Aligned outcome vector and regressor matrix for the estimator.
///
/// Rows are grouped by unit and time-ordered within unit; every unit spans
/// the same `times`, so row `r` belongs to unit `r / times.len()` at time
/// `r % times.len()`. Neither `y` nor `x` contains missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub units: Vec<String>,
    pub times: Vec<QuarterId>,
    pub columns: Vec<String>,
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn rows_per_unit(&self) -> usize {
        self.times.len()
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn unit_of_row(&self, row: usize) -> usize {
        row / self.rows_per_unit()
    }

    /// New design with the unit blocks listed in `unit_indices` (duplicates
    /// allowed), exactly as if the corresponding units had been resampled in
    /// the panel and the design rebuilt.
    pub fn resample_units(&self, unit_indices: &[usize]) -> DesignMatrix {
        let t = self.rows_per_unit();
        let k = self.n_columns();
        let mut y = DVector::zeros(unit_indices.len() * t);
        let mut x = DMatrix::zeros(unit_indices.len() * t, k);
        let mut units = Vec::with_capacity(unit_indices.len());
        for (slot, &u) in unit_indices.iter().enumerate() {
            units.push(self.units[u].clone());
            for r in 0..t {
                y[slot * t + r] = self.y[u * t + r];
                for j in 0..k {
                    x[(slot * t + r, j)] = self.x[(u * t + r, j)];
                }
            }
        }
        DesignMatrix { units, times: self.times.clone(), columns: self.columns.clone(), y, x }
    }
}

/// Build the design for `spec` from an assembled panel.
///
/// The first `max(4, max lag)` quarters are trimmed uniformly across units so
/// the panel stays balanced. Errors if a required variable is absent, if any
/// cell in the kept window is missing, or if a column has no within-unit
/// variation (singular design).
pub fn build_design(panel: &PanelDataset, spec: &ModelSpec) -> Result<DesignMatrix> {
    spec.validate()?;
    for var in spec.required_variables() {
        if !panel.has_variable(var) {
            return Err(Error::schema(format!(
                "panel is missing variable '{var}' required by the specification"
            )));
        }
    }

    let trim = spec.trim_quarters();
    let t_full = panel.n_times();
    if t_full <= trim {
        return Err(Error::schema(format!(
            "panel has {t_full} quarters; need more than the {trim} trimmed for lags \
             and year-ago transforms"
        )));
    }
    let t_kept = t_full - trim;
    let n = panel.n_units();
    let times = panel.times()[trim..].to_vec();

    let infl_var = spec.inflation_kind.variable();
    let mut columns: Vec<(String, Vec<Option<f64>>)> = Vec::new();
    for &j in &spec.lag_set {
        columns.push((format!("{infl_var}_l{j}"), panel.lag(infl_var, j)?));
    }
    columns.push((VAR_INCOME_GROWTH.to_string(), panel.series(VAR_INCOME_GROWTH)?.to_vec()));
    if spec.include_controls {
        columns.push((VAR_DFFR.to_string(), panel.series(VAR_DFFR)?.to_vec()));
        columns.push((VAR_DGTE.to_string(), panel.series(VAR_DGTE)?.to_vec()));
    }

    let outcome = panel.series(VAR_OUTCOME)?;
    let mut y = DVector::zeros(n * t_kept);
    let mut x = DMatrix::zeros(n * t_kept, columns.len());
    for i in 0..n {
        for t in 0..t_kept {
            let src = i * t_full + trim + t;
            let row = i * t_kept + t;
            y[row] = outcome[src].ok_or_else(|| {
                Error::schema(format!(
                    "outcome '{VAR_OUTCOME}' is missing for unit '{}' at {}",
                    panel.units()[i],
                    times[t]
                ))
            })?;
            for (j, (name, values)) in columns.iter().enumerate() {
                x[(row, j)] = values[src].ok_or_else(|| {
                    Error::schema(format!(
                        "regressor '{name}' is missing for unit '{}' at {}",
                        panel.units()[i],
                        times[t]
                    ))
                })?;
            }
        }
    }

    // Zero within-unit variance makes the within estimator singular; report
    // the column now with its name rather than from the QR.
    for (j, (name, _)) in columns.iter().enumerate() {
        let mut ss_raw = 0.0;
        let mut ss_dem = 0.0;
        for i in 0..n {
            let mut mean = 0.0;
            for t in 0..t_kept {
                mean += x[(i * t_kept + t, j)];
            }
            mean /= t_kept as f64;
            for t in 0..t_kept {
                let v = x[(i * t_kept + t, j)];
                ss_raw += v * v;
                ss_dem += (v - mean) * (v - mean);
            }
        }
        if ss_dem <= 1e-20 * ss_raw.max(1e-300) {
            return Err(Error::RankDeficient { columns: vec![name.clone()] });
        }
    }

    Ok(DesignMatrix {
        units: panel.units().to_vec(),
        times,
        columns: columns.into_iter().map(|(name, _)| name).collect(),
        y,
        x,
    })
}
