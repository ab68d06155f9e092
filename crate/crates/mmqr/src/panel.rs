//! Balanced-panel data model and the series transformations that build the
//! regression variables: year-over-year growth, fourth differences, lags,
//! quarterly averaging of monthly rates, and panel summary statistics.
//!
//! All values are `Option<f64>`; `None` is an explicit missing marker and
//! every transform propagates it. Types are immutable after construction.

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::time::{MonthId, QuarterId};

/// How a year-over-year growth rate is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GrowthMethod {
    /// `100 * (ln x_t - ln x_{t-4})`. The default.
    #[default]
    LogDiff,
    /// `100 * (x_t - x_{t-4}) / x_{t-4}`.
    PercentChange,
}

/// A balanced unit-by-quarter panel of named numeric series.
///
/// Cells are stored unit-major: series `s`, unit `i`, time `t` lives at
/// `s[i * n_times + t]`. The time axis is consecutive quarters with no gaps
/// and unit identifiers are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    units: Vec<String>,
    times: Vec<QuarterId>,
    series: IndexMap<String, Vec<Option<f64>>>,
}

impl PanelDataset {
    pub fn new(units: Vec<String>, times: Vec<QuarterId>) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::schema("panel needs at least one unit"));
        }
        if times.is_empty() {
            return Err(Error::schema("panel needs at least one quarter"));
        }
        let mut seen = std::collections::HashSet::new();
        for u in &units {
            if !seen.insert(u.clone()) {
                return Err(Error::schema(format!("duplicate unit identifier '{u}'")));
            }
        }
        for w in times.windows(2) {
            if w[0].quarters_until(&w[1]) != 1 {
                return Err(Error::schema(format!(
                    "time axis must be consecutive quarters; gap between {} and {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(PanelDataset { units, times, series: IndexMap::new() })
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn times(&self) -> &[QuarterId] {
        &self.times
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn variable_names(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(|s| s.as_str())
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.series.contains_key(name)
    }

    /// Insert a series; the grid must have exactly `n_units * n_times` cells.
    pub fn insert_series(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Result<()> {
        let name = name.into();
        let expect = self.n_units() * self.n_times();
        if values.len() != expect {
            return Err(Error::schema(format!(
                "series '{name}' has {} cells, panel is {}x{} = {expect}",
                values.len(),
                self.n_units(),
                self.n_times()
            )));
        }
        self.series.insert(name, values);
        Ok(())
    }

    pub fn series(&self, name: &str) -> Result<&[Option<f64>]> {
        self.series
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::schema(format!("unknown variable '{name}'")))
    }

    pub fn cell(&self, name: &str, unit: usize, time: usize) -> Result<Option<f64>> {
        Ok(self.series(name)?[unit * self.n_times() + time])
    }

    /// Index of a quarter on this panel's time axis.
    pub fn time_offset(&self, q: &QuarterId) -> Option<usize> {
        let d = self.times[0].quarters_until(q);
        if d >= 0 && (d as usize) < self.times.len() {
            Some(d as usize)
        } else {
            None
        }
    }

    /// Year-over-year growth of `name`. The first four quarters of every unit
    /// are missing; missing inputs propagate.
    pub fn yoy_growth(&self, name: &str, method: GrowthMethod) -> Result<Vec<Option<f64>>> {
        let values = self.series(name)?;
        let t_len = self.n_times();
        let mut out = vec![None; values.len()];
        for (i, unit) in self.units.iter().enumerate() {
            for t in 4..t_len {
                let (cur, base) = (values[i * t_len + t], values[i * t_len + t - 4]);
                let (Some(cur), Some(base)) = (cur, base) else { continue };
                out[i * t_len + t] = Some(match method {
                    GrowthMethod::LogDiff => {
                        if cur <= 0.0 || base <= 0.0 {
                            return Err(Error::schema(format!(
                                "log-diff growth of '{name}' needs positive values; \
                                 unit '{unit}' has {} at {} and {} at {}",
                                base,
                                self.times[t - 4],
                                cur,
                                self.times[t]
                            )));
                        }
                        100.0 * (cur.ln() - base.ln())
                    }
                    GrowthMethod::PercentChange => {
                        if base == 0.0 {
                            return Err(Error::schema(format!(
                                "percent-change growth of '{name}' has zero base; \
                                 unit '{unit}' at {}",
                                self.times[t - 4]
                            )));
                        }
                        100.0 * (cur - base) / base
                    }
                });
            }
        }
        Ok(out)
    }

    /// Fourth difference `x_t - x_{t-4}` in the units of the series
    /// (percentage points for a rate). First four quarters missing.
    pub fn diff4(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let values = self.series(name)?;
        let t_len = self.n_times();
        let mut out = vec![None; values.len()];
        for i in 0..self.n_units() {
            for t in 4..t_len {
                if let (Some(cur), Some(base)) = (values[i * t_len + t], values[i * t_len + t - 4])
                {
                    out[i * t_len + t] = Some(cur - base);
                }
            }
        }
        Ok(out)
    }

    /// Shift a series back by `j` quarters; the first `j` periods of each unit
    /// become missing. `lag(s, 0)` is the identity.
    pub fn lag(&self, name: &str, j: usize) -> Result<Vec<Option<f64>>> {
        let values = self.series(name)?;
        let t_len = self.n_times();
        if j > t_len - 1 {
            return Err(Error::schema(format!(
                "lag {j} of '{name}' exceeds the panel span of {t_len} quarters"
            )));
        }
        let mut out = vec![None; values.len()];
        for i in 0..self.n_units() {
            for t in j..t_len {
                out[i * t_len + t] = values[i * t_len + t - j];
            }
        }
        Ok(out)
    }

    /// Drop leading and trailing quarters in which any of `variables` has a
    /// missing cell, keeping the interior window. Errors if a listed variable
    /// still has holes inside the kept window.
    pub fn trim_to_observed(&self, variables: &[&str]) -> Result<PanelDataset> {
        let t_len = self.n_times();
        let mut complete = vec![true; t_len];
        for name in variables {
            let values = self.series(name)?;
            for t in 0..t_len {
                for i in 0..self.n_units() {
                    if values[i * t_len + t].is_none() {
                        complete[t] = false;
                        break;
                    }
                }
            }
        }
        let first = complete.iter().position(|&c| c);
        let last = complete.iter().rposition(|&c| c);
        let (Some(first), Some(last)) = (first, last) else {
            return Err(Error::schema(format!(
                "no quarter is fully observed for variables {variables:?}"
            )));
        };
        if complete[first..=last].iter().any(|&c| !c) {
            return Err(Error::schema(format!(
                "variables {variables:?} have missing cells inside the observed window"
            )));
        }
        let mut out = PanelDataset::new(self.units.clone(), self.times[first..=last].to_vec())?;
        for (name, values) in &self.series {
            let mut kept = Vec::with_capacity(self.n_units() * (last - first + 1));
            for i in 0..self.n_units() {
                kept.extend_from_slice(&values[i * t_len + first..=i * t_len + last]);
            }
            out.insert_series(name.clone(), kept)?;
        }
        Ok(out)
    }

    /// Panel summary statistics for one variable in the overall / between /
    /// within layout.
    pub fn describe(&self, name: &str) -> Result<SeriesStats> {
        let values = self.series(name)?;
        let t_len = self.n_times();

        // Unit means over the non-missing cells of each unit.
        let mut unit_means = Vec::new();
        let mut n_obs = 0usize;
        for i in 0..self.n_units() {
            let cells: Vec<f64> =
                (0..t_len).filter_map(|t| values[i * t_len + t]).collect();
            if !cells.is_empty() {
                n_obs += cells.len();
                unit_means.push(cells.iter().sum::<f64>() / cells.len() as f64);
            }
        }
        if n_obs == 0 {
            return Err(Error::schema(format!("variable '{name}' has no observations")));
        }
        let n_units = unit_means.len();

        let observed: Vec<f64> = values.iter().filter_map(|v| *v).collect();
        let grand_mean = observed.iter().sum::<f64>() / n_obs as f64;

        let overall = ScopeStats {
            mean: Some(grand_mean),
            std_dev: std_dev_about(&observed, grand_mean, n_obs.saturating_sub(1)),
            min: fold_min(&observed),
            max: fold_max(&observed),
        };

        // Between: dispersion of unit means. Deviations are taken against the
        // first unit's mean first so that a series identical across units
        // yields exactly zero.
        let between = if n_units <= 1 {
            ScopeStats {
                mean: None,
                std_dev: 0.0,
                min: fold_min(&unit_means),
                max: fold_max(&unit_means),
            }
        } else {
            let shifted: Vec<f64> = unit_means.iter().map(|m| m - unit_means[0]).collect();
            let shifted_mean = shifted.iter().sum::<f64>() / n_units as f64;
            ScopeStats {
                mean: None,
                std_dev: std_dev_about(&shifted, shifted_mean, n_units - 1),
                min: fold_min(&unit_means),
                max: fold_max(&unit_means),
            }
        };

        // Within: x_it - x̄_i + x̄ (grand mean re-added).
        let mut within_vals = Vec::with_capacity(n_obs);
        let mut mean_iter = unit_means.iter();
        for i in 0..self.n_units() {
            let cells: Vec<f64> =
                (0..t_len).filter_map(|t| values[i * t_len + t]).collect();
            if cells.is_empty() {
                continue;
            }
            let m = *mean_iter.next().expect("unit mean exists for observed unit");
            within_vals.extend(cells.iter().map(|x| x - m + grand_mean));
        }
        let within_mean = within_vals.iter().sum::<f64>() / n_obs as f64;
        let within = ScopeStats {
            mean: None,
            std_dev: std_dev_about(&within_vals, within_mean, n_obs.saturating_sub(1)),
            min: fold_min(&within_vals),
            max: fold_max(&within_vals),
        };

        Ok(SeriesStats {
            name: name.to_string(),
            overall,
            between,
            within,
            n_obs,
            n_units,
            t_bar: n_obs as f64 / n_units as f64,
        })
    }
}

fn fold_min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

fn fold_max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn std_dev_about(xs: &[f64], mean: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 0.0;
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / dof as f64).sqrt()
}

/// Statistics for one scope (overall, between, or within) of a series.
/// The mean is reported for the overall scope only.
#[derive(Debug, Clone, PartialEq)]
pub struct ScopeStats {
    pub mean: Option<f64>,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

/// Panel summary of a variable: overall stats over all non-missing cells,
/// between stats over unit means, within stats over deviations from unit
/// means with the grand mean re-added. Between uses the n-1 denominator,
/// overall and within use N-1.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStats {
    pub name: String,
    pub overall: ScopeStats,
    pub between: ScopeStats,
    pub within: ScopeStats,
    /// Non-missing observations.
    pub n_obs: usize,
    /// Units contributing at least one observation.
    pub n_units: usize,
    /// Average periods per unit.
    pub t_bar: f64,
}

/// Monthly 12-month inflation observations for a set of units, used only to
/// build the quarterly inflation series.
#[derive(Debug, Clone)]
pub struct MonthlyData {
    rows: Vec<(String, MonthId, f64)>,
}

impl MonthlyData {
    pub fn new(rows: Vec<(String, MonthId, f64)>) -> Self {
        MonthlyData { rows }
    }

    /// Quarterly averages of the monthly rates, aligned to `panel`'s units
    /// and time axis. Quarters wholly absent stay missing; a quarter with one
    /// or two months is an error.
    pub fn quarterly_average(&self, panel: &PanelDataset) -> Result<Vec<Option<f64>>> {
        let t_len = panel.n_times();
        let unit_of: std::collections::HashMap<&str, usize> = panel
            .units()
            .iter()
            .enumerate()
            .map(|(i, u)| (u.as_str(), i))
            .collect();

        let mut sums = vec![0.0; panel.n_units() * t_len];
        let mut counts = vec![0u8; panel.n_units() * t_len];
        for (unit, month, rate) in &self.rows {
            let Some(&i) = unit_of.get(unit.as_str()) else { continue };
            let Some(t) = panel.time_offset(&month.quarter()) else { continue };
            sums[i * t_len + t] += rate;
            counts[i * t_len + t] += 1;
        }

        let mut out = vec![None; panel.n_units() * t_len];
        for i in 0..panel.n_units() {
            for t in 0..t_len {
                match counts[i * t_len + t] {
                    0 => {}
                    3 => out[i * t_len + t] = Some(sums[i * t_len + t] / 3.0),
                    k => {
                        return Err(Error::schema(format!(
                            "quarter {} of unit '{}' has {k} monthly inflation observations, \
                             expected 3",
                            panel.times()[t],
                            panel.units()[i]
                        )))
                    }
                }
            }
        }
        Ok(out)
    }
}
