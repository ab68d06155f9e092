//! Synthetic panels from the location-scale model with known parameters, and
//! estimator-recovery experiments against the analytic per-quantile truth.
//!
//! A [`DgpSpec`] fixes the panel shape, which design columns exist (inflation
//! lags, income growth, optional controls), the true slope vectors, the unit
//! effect rules, the regressor support, and the innovation law. Simulated
//! panels carry the standard variable names, so they flow through
//! `build_design` and `fit` exactly like ingested data.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT as StudentTSampler};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::design::{
    build_design, InflationKind, ModelSpec, VAR_DFFR, VAR_DGTE, VAR_INCOME_GROWTH, VAR_INFLATION,
    VAR_OUTCOME,
};
use crate::error::{Error, Result};
use crate::estimator::fit;
use crate::panel::PanelDataset;
use crate::time::QuarterId;

/// Distribution of the latent innovation `u_it`. All three laws have unit
/// variance so the scale is carried entirely by `delta_i + x' gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnovationLaw {
    /// Standard normal.
    Normal,
    /// Uniform on (-sqrt(3), sqrt(3)).
    Uniform,
    /// Student-t with `dof` degrees of freedom, standardized to unit
    /// variance; requires `dof > 2`.
    StudentT { dof: f64 },
}

impl InnovationLaw {
    pub fn validate(&self) -> Result<()> {
        if let InnovationLaw::StudentT { dof } = self {
            if dof.is_nan() || *dof <= 2.0 {
                return Err(Error::schema(format!(
                    "student-t innovations need dof > 2 for unit variance, got {dof}"
                )));
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            InnovationLaw::Normal => StandardNormal.sample(rng),
            InnovationLaw::Uniform => rng.gen_range(-SQRT3..SQRT3),
            InnovationLaw::StudentT { dof } => {
                let t: f64 = StudentTSampler::new(*dof).expect("validated dof").sample(rng);
                t / (dof / (dof - 2.0)).sqrt()
            }
        }
    }

    /// Analytic quantile of the (standardized) innovation law.
    pub fn quantile(&self, tau: f64) -> f64 {
        match self {
            InnovationLaw::Normal => {
                Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(tau)
            }
            InnovationLaw::Uniform => -SQRT3 + tau * 2.0 * SQRT3,
            InnovationLaw::StudentT { dof } => {
                let t = StudentsT::new(0.0, 1.0, *dof).expect("validated dof").inverse_cdf(tau);
                t / (dof / (dof - 2.0)).sqrt()
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            InnovationLaw::Normal => "normal".to_string(),
            InnovationLaw::Uniform => "uniform".to_string(),
            InnovationLaw::StudentT { dof } => format!("t:{dof}"),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "normal" => Ok(InnovationLaw::Normal),
            "uniform" => Ok(InnovationLaw::Uniform),
            other => {
                if let Some(dof) = other.strip_prefix("t:") {
                    let dof: f64 = dof
                        .parse()
                        .map_err(|e| Error::schema(format!("bad student-t dof '{dof}': {e}")))?;
                    let law = InnovationLaw::StudentT { dof };
                    law.validate()?;
                    Ok(law)
                } else {
                    Err(Error::schema(format!(
                        "innovation law must be normal, uniform, or t:<dof>, got '{other}'"
                    )))
                }
            }
        }
    }
}

const SQRT3: f64 = 1.7320508075688772;

/// Rule for generating per-unit effects.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectRule {
    /// One value per unit, in unit order.
    Fixed(Vec<f64>),
    /// Independent uniform draws on [low, high].
    Uniform { low: f64, high: f64 },
}

impl EffectRule {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match self {
            EffectRule::Fixed(values) => {
                if values.len() != n {
                    return Err(Error::schema(format!(
                        "fixed effect list has {} entries for {n} units",
                        values.len()
                    )));
                }
                Ok(values.clone())
            }
            EffectRule::Uniform { low, high } => {
                Ok((0..n).map(|_| rng.gen_range(*low..*high)).collect())
            }
        }
    }

    fn lower_bound(&self) -> f64 {
        match self {
            EffectRule::Fixed(values) => values.iter().copied().fold(f64::INFINITY, f64::min),
            EffectRule::Uniform { low, .. } => *low,
        }
    }
}

/// Data-generating process for `y = alpha_i + x'beta + (delta_i + x'gamma) u`.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    pub n_units: usize,
    pub n_periods: usize,
    /// Which inflation lags appear as design columns.
    pub lag_set: Vec<usize>,
    pub include_controls: bool,
    /// True location slopes, one per design column.
    pub beta: Vec<f64>,
    /// True scale slopes, one per design column.
    pub gamma: Vec<f64>,
    pub alpha: EffectRule,
    /// Scale intercepts; must be bounded below by a positive constant.
    pub delta: EffectRule,
    /// Regressor series are iid uniform on [low, high].
    pub regressor_low: f64,
    pub regressor_high: f64,
    pub innovation: InnovationLaw,
    pub rng_seed: u64,
}

impl DgpSpec {
    /// The model specification that matches this process (no bootstrap).
    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            inflation_kind: InflationKind::Actual,
            lag_set: self.lag_set.clone(),
            include_controls: self.include_controls,
            bootstrap_reps: 0,
            rng_seed: self.rng_seed,
            ..ModelSpec::default()
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        self.model_spec().column_names()
    }

    pub fn validate(&self) -> Result<()> {
        self.model_spec().validate()?;
        self.innovation.validate()?;
        let k = self.column_names().len();
        if self.beta.len() != k || self.gamma.len() != k {
            return Err(Error::schema(format!(
                "beta and gamma must have one entry per design column ({k}); \
                 got {} and {}",
                self.beta.len(),
                self.gamma.len()
            )));
        }
        if self.n_units == 0 || self.n_periods <= self.model_spec().trim_quarters() {
            return Err(Error::schema(
                "panel too small for the requested lags and year-ago transforms",
            ));
        }
        let delta_floor = self.delta.lower_bound();
        if delta_floor.is_nan() || delta_floor <= 0.0 {
            return Err(Error::schema(
                "delta must be bounded below by a positive constant",
            ));
        }
        let width = self.regressor_high - self.regressor_low;
        if width.is_nan() || width <= 0.0 {
            return Err(Error::schema("regressor support must have positive width"));
        }
        Ok(())
    }
}

impl DgpSpec {
    /// Parse a `key = value` process description. Keys: units, periods,
    /// lags, controls, beta, gamma, alpha, delta, xrange, innovation, seed.
    /// Effect rules are `fixed:v1,v2,...` or `uniform:low,high`; xrange is
    /// `low:high`.
    pub fn from_config_str(text: &str, source: &str) -> Result<DgpSpec> {
        let mut units = None;
        let mut periods = None;
        let mut lag_set = vec![0];
        let mut include_controls = false;
        let mut beta = None;
        let mut gamma = None;
        let mut alpha = EffectRule::Uniform { low: -1.0, high: 1.0 };
        let mut delta = None;
        let mut xrange = (0.0, 1.0);
        let mut innovation = InnovationLaw::Normal;
        let mut seed = 1u64;

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
            let bad = |what: &str, e: &dyn std::fmt::Display| {
                Error::parse(&loc, format!("bad {what} '{value}': {e}"))
            };
            match key {
                "units" => units = Some(value.parse().map_err(|e| bad("units", &e))?),
                "periods" => periods = Some(value.parse().map_err(|e| bad("periods", &e))?),
                "lags" => lag_set = crate::design::parse_lag_set(value)?,
                "controls" => {
                    include_controls = matches!(value, "on" | "true" | "yes");
                    if !include_controls && !matches!(value, "off" | "false" | "no") {
                        return Err(Error::parse(&loc, format!("expected on|off, got '{value}'")));
                    }
                }
                "beta" => beta = Some(parse_f64_list(value, &loc)?),
                "gamma" => gamma = Some(parse_f64_list(value, &loc)?),
                "alpha" => alpha = parse_effect_rule(value, &loc)?,
                "delta" => delta = Some(parse_effect_rule(value, &loc)?),
                "xrange" => {
                    let (lo, hi) = value
                        .split_once(':')
                        .ok_or_else(|| Error::parse(&loc, "xrange must be low:high"))?;
                    xrange = (
                        lo.trim().parse().map_err(|e| bad("xrange low", &e))?,
                        hi.trim().parse().map_err(|e| bad("xrange high", &e))?,
                    );
                }
                "innovation" => innovation = InnovationLaw::parse(value)?,
                "seed" => seed = value.parse().map_err(|e| bad("seed", &e))?,
                other => return Err(Error::parse(&loc, format!("unknown key '{other}'"))),
            }
        }

        let n_units: usize =
            units.ok_or_else(|| Error::schema(format!("{source}: missing 'units'")))?;
        let dgp = DgpSpec {
            n_units,
            n_periods: periods
                .ok_or_else(|| Error::schema(format!("{source}: missing 'periods'")))?,
            lag_set,
            include_controls,
            beta: beta.ok_or_else(|| Error::schema(format!("{source}: missing 'beta'")))?,
            gamma: gamma.ok_or_else(|| Error::schema(format!("{source}: missing 'gamma'")))?,
            alpha,
            delta: delta.unwrap_or(EffectRule::Uniform { low: 0.5, high: 1.5 }),
            regressor_low: xrange.0,
            regressor_high: xrange.1,
            innovation,
            rng_seed: seed,
        };
        dgp.validate()?;
        Ok(dgp)
    }
}

fn parse_f64_list(text: &str, loc: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(loc, format!("bad number '{p}': {e}")))
        })
        .collect()
}

fn parse_effect_rule(text: &str, loc: &str) -> Result<EffectRule> {
    if let Some(rest) = text.strip_prefix("fixed:") {
        Ok(EffectRule::Fixed(parse_f64_list(rest, loc)?))
    } else if let Some(rest) = text.strip_prefix("uniform:") {
        let values = parse_f64_list(rest, loc)?;
        if values.len() != 2 {
            return Err(Error::parse(loc, "uniform rule needs 'uniform:low,high'"));
        }
        Ok(EffectRule::Uniform { low: values[0], high: values[1] })
    } else {
        Err(Error::parse(
            loc,
            format!("effect rule must start with fixed: or uniform:, got '{text}'"),
        ))
    }
}

/// True parameters behind a simulated panel.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub columns: Vec<String>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub delta: Vec<f64>,
    pub innovation: InnovationLaw,
    pub rng_seed: u64,
}

impl TruthRecord {
    /// The coefficient the estimator should recover at quantile `tau`.
    pub fn coefficient_at(&self, column: usize, tau: f64) -> f64 {
        self.beta[column] + self.innovation.quantile(tau) * self.gamma[column]
    }
}

/// A simulated panel plus everything needed to audit it.
#[derive(Debug, Clone)]
pub struct SimulatedPanel {
    pub panel: PanelDataset,
    pub truth: TruthRecord,
    /// Drawn innovations, unit-major like panel cells; missing where the
    /// outcome is undefined (leading lag window).
    pub innovations: Vec<Option<f64>>,
}

const MAX_POSITIVITY_ATTEMPTS: usize = 100;
const FIRST_QUARTER: (i32, u8) = (1990, 1);

/// Generate one panel from the process, cell by cell from a deterministic
/// stream. Redraws everything if the fitted scale would not be strictly
/// positive, and errors after a bounded number of attempts.
pub fn simulate(dgp: &DgpSpec) -> Result<SimulatedPanel> {
    simulate_with_stream(dgp, 0)
}

/// As [`simulate`], on RNG stream `stream` of the seed. Replications of an
/// experiment use distinct streams of one seed.
pub fn simulate_with_stream(dgp: &DgpSpec, stream: u64) -> Result<SimulatedPanel> {
    dgp.validate()?;
    let n = dgp.n_units;
    let t = dgp.n_periods;
    let spec = dgp.model_spec();
    let column_names = dgp.column_names();
    let k = column_names.len();
    let max_lag = spec.max_lag();

    let mut rng = ChaCha8Rng::seed_from_u64(dgp.rng_seed);
    rng.set_stream(stream);

    for _attempt in 0..MAX_POSITIVITY_ATTEMPTS {
        let alpha = dgp.alpha.draw(n, &mut rng)?;
        let delta = dgp.delta.draw(n, &mut rng)?;

        let draw_series =
            |rng: &mut ChaCha8Rng| -> Vec<Option<f64>> {
                (0..n * t)
                    .map(|_| Some(rng.gen_range(dgp.regressor_low..dgp.regressor_high)))
                    .collect()
            };
        let pi = draw_series(&mut rng);
        let inc = draw_series(&mut rng);
        let controls = if dgp.include_controls {
            Some((draw_series(&mut rng), draw_series(&mut rng)))
        } else {
            None
        };

        // Design row for unit i at period tt (lags ascending, inc, controls).
        let x_row = |i: usize, tt: usize| -> Vec<f64> {
            let mut row = Vec::with_capacity(k);
            for &j in &dgp.lag_set {
                row.push(pi[i * t + tt - j].unwrap());
            }
            row.push(inc[i * t + tt].unwrap());
            if let Some((dffr, dgte)) = &controls {
                row.push(dffr[i * t + tt].unwrap());
                row.push(dgte[i * t + tt].unwrap());
            }
            row
        };

        let mut y = vec![None; n * t];
        let mut innovations = vec![None; n * t];
        let mut positive = true;
        'outer: for i in 0..n {
            for tt in max_lag..t {
                let row = x_row(i, tt);
                let mut loc = alpha[i];
                let mut scale = delta[i];
                for j in 0..k {
                    loc += row[j] * dgp.beta[j];
                    scale += row[j] * dgp.gamma[j];
                }
                if scale <= 0.0 {
                    positive = false;
                    break 'outer;
                }
                let u = dgp.innovation.sample(&mut rng);
                innovations[i * t + tt] = Some(u);
                y[i * t + tt] = Some(loc + scale * u);
            }
        }
        if !positive {
            continue;
        }

        let first = QuarterId::new(FIRST_QUARTER.0, FIRST_QUARTER.1).expect("valid quarter");
        let times: Vec<QuarterId> = (0..t as i64).map(|j| first.offset(j)).collect();
        let units: Vec<String> = (0..n).map(|i| format!("S{i:02}")).collect();
        let mut panel = PanelDataset::new(units, times)?;
        panel.insert_series(VAR_OUTCOME, y)?;
        panel.insert_series(VAR_INFLATION, pi)?;
        panel.insert_series(VAR_INCOME_GROWTH, inc)?;
        if let Some((dffr, dgte)) = controls {
            panel.insert_series(VAR_DFFR, dffr)?;
            panel.insert_series(VAR_DGTE, dgte)?;
        }

        let truth = TruthRecord {
            columns: column_names,
            beta: dgp.beta.clone(),
            gamma: dgp.gamma.clone(),
            alpha,
            delta,
            innovation: dgp.innovation,
            rng_seed: dgp.rng_seed,
        };
        return Ok(SimulatedPanel { panel, truth, innovations });
    }

    Err(Error::schema(format!(
        "could not satisfy scale positivity after {MAX_POSITIVITY_ATTEMPTS} attempts; \
         shrink gamma or raise delta"
    )))
}

/// One cell of a recovery report.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryCell {
    pub tau: f64,
    pub column: String,
    pub truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    /// Monte Carlo standard error of the mean estimate.
    pub mc_std_error: f64,
    pub rmse: f64,
}

/// Recovery experiment summary across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub cells: Vec<RecoveryCell>,
    pub replications: usize,
    pub failures: usize,
}

/// Simulate `replications` panels, fit each, and summarize bias and RMSE of
/// the per-quantile coefficients against the analytic truth
/// `beta + q_u(tau) * gamma`.
pub fn recovery_experiment(
    dgp: &DgpSpec,
    replications: usize,
    grid: &[f64],
) -> Result<RecoveryReport> {
    if replications == 0 {
        return Err(Error::schema("recovery experiment needs at least 1 replication"));
    }
    dgp.validate()?;
    let spec = ModelSpec { quantile_grid: grid.to_vec(), ..dgp.model_spec() };
    spec.validate()?;

    let estimates: Vec<Option<Vec<Vec<f64>>>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let sim = simulate_with_stream(dgp, r as u64).ok()?;
            let design = build_design(&sim.panel, &spec).ok()?;
            fit(&design, grid).ok().map(|f| f.coefficients)
        })
        .collect();

    let successes: Vec<&Vec<Vec<f64>>> = estimates.iter().flatten().collect();
    let n_ok = successes.len();
    let failures = replications - n_ok;
    if n_ok == 0 {
        return Err(Error::schema("every replication failed to fit"));
    }

    let columns = dgp.column_names();
    let mut cells = Vec::new();
    for (g, &tau) in grid.iter().enumerate() {
        for (j, column) in columns.iter().enumerate() {
            let truth = dgp.beta[j] + dgp.innovation.quantile(tau) * dgp.gamma[j];
            let mean = successes.iter().map(|c| c[g][j]).sum::<f64>() / n_ok as f64;
            let var = if n_ok > 1 {
                successes
                    .iter()
                    .map(|c| (c[g][j] - mean) * (c[g][j] - mean))
                    .sum::<f64>()
                    / (n_ok - 1) as f64
            } else {
                0.0
            };
            let mse = successes
                .iter()
                .map(|c| (c[g][j] - truth) * (c[g][j] - truth))
                .sum::<f64>()
                / n_ok as f64;
            cells.push(RecoveryCell {
                tau,
                column: column.clone(),
                truth,
                mean_estimate: mean,
                bias: mean - truth,
                mc_std_error: (var / n_ok as f64).sqrt(),
                rmse: mse.sqrt(),
            });
        }
    }
    Ok(RecoveryReport { cells, replications, failures })
}
