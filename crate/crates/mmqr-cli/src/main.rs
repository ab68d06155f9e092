//! Command-line front end: ingest the panel and auxiliary files, run the
//! describe/fit/simulate/recover pipelines, and write delimited-text outputs.
//!
//! Every failure prints one machine-readable line to stderr,
//! `error[<class>]: <message>`, and exits with the class's stable code
//! (io 1, parse 2, schema 3, rank 4, positivity 5, inference 6).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmqr::design::{
    assemble_variables, build_design, AssemblyInputs, Figure, ModelSpec, VAR_DFFR, VAR_DGTE,
    VAR_INCOME_GROWTH, VAR_INFLATION, VAR_OUTCOME, VAR_UNEXPECTED,
};
use mmqr::inference::cluster_bootstrap_design;
use mmqr::panel::PanelDataset;
use mmqr::reference::check_against_reference;
use mmqr::simulate::{recovery_experiment, simulate, DgpSpec};
use mmqr::{io as mio, Error, InflationKind, Result};

#[derive(Parser)]
#[command(
    name = "mmqr",
    about = "Panel quantile regression via location-scale moments: data ingestion, \
             descriptive statistics, per-quantile coefficient estimation with unit \
             bootstrap, and Monte Carlo validation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Panel file: state,year,quarter + variable columns (missing = empty).
    #[arg(long)]
    panel: PathBuf,
    /// Monthly 12-month inflation rates (state,year,month,rate), averaged to
    /// quarters when the panel has no inflation column.
    #[arg(long)]
    monthly: Option<PathBuf>,
    /// One-year-ahead national forecasts (year,quarter,forecast) keyed by
    /// origin quarter; enables the unexpected-inflation variable.
    #[arg(long)]
    forecast: Option<PathBuf>,
}

#[derive(Args)]
struct SpecArgs {
    /// Figure preset: fig5 | fig6 | fig7 | fig8.
    #[arg(long)]
    preset: Option<String>,
    /// Key-value specification file; applied on top of the preset.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Inflation measure: actual | unexpected.
    #[arg(long)]
    inflation: Option<String>,
    /// Comma-separated inflation lags, e.g. 0,1,2,3,4.
    #[arg(long)]
    lags: Option<String>,
    /// Include the dffr and dGTE controls: on | off.
    #[arg(long)]
    controls: Option<String>,
    /// Quantile grid START:STOP:STEP, e.g. 0.05:0.95:0.05.
    #[arg(long)]
    grid: Option<String>,
    /// Bootstrap replicates (0 disables inference).
    #[arg(long)]
    bootstrap: Option<usize>,
    /// RNG seed for the bootstrap.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize the analysis variables (overall/between/within).
    Describe {
        #[command(flatten)]
        input: InputArgs,
        /// Compare the summary against the embedded reference values at
        /// +-0.01 and fail on any deviation.
        #[arg(long = "strict-table2")]
        strict_table2: bool,
        /// Output directory.
        #[arg(long, env = "MMQR_OUT", default_value = ".")]
        out: PathBuf,
    },
    /// Estimate per-quantile coefficients and bootstrap inference.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        spec: SpecArgs,
        /// What to write: any of coefficients,plotdata,fit-dump,stats.
        #[arg(long, default_value = "coefficients,plotdata")]
        emit: String,
        #[arg(long, env = "MMQR_OUT", default_value = ".")]
        out: PathBuf,
    },
    /// Draw one synthetic panel from a configured process.
    Simulate {
        /// Process description file (key = value).
        #[arg(long)]
        dgp: PathBuf,
        /// Override the seed in the file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "MMQR_OUT", default_value = ".")]
        out: PathBuf,
    },
    /// Replicate simulate+fit and report bias/RMSE against the truth.
    Recover {
        #[arg(long)]
        dgp: PathBuf,
        /// Monte Carlo replications.
        #[arg(long, default_value_t = 100)]
        reps: usize,
        /// Quantile grid START:STOP:STEP.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "MMQR_OUT", default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error[{}]: {err}", err.class().name());
            ExitCode::from(err.class().exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Describe { input, strict_table2, out } => cmd_describe(input, strict_table2, &out),
        Command::Fit { input, spec, emit, out } => cmd_fit(input, spec, &emit, &out),
        Command::Simulate { dgp, seed, out } => cmd_simulate(&dgp, seed, &out),
        Command::Recover { dgp, reps, grid, seed, out } => {
            cmd_recover(&dgp, reps, grid.as_deref(), seed, &out)
        }
    }
}

/// Analysis variables in their published order.
const CANONICAL_VARIABLES: [&str; 7] = [
    VAR_OUTCOME,
    VAR_INFLATION,
    VAR_INCOME_GROWTH,
    VAR_DFFR,
    VAR_DGTE,
    VAR_UNEXPECTED,
    "union",
];

fn load_assembled(input: &InputArgs) -> Result<PanelDataset> {
    let panel = mio::read_panel_csv(&input.panel)?;
    let assembly = AssemblyInputs {
        monthly_inflation: input.monthly.as_deref().map(mio::read_monthly_csv).transpose()?,
        forecast: input.forecast.as_deref().map(mio::read_forecast_csv).transpose()?,
        growth_method: Default::default(),
    };
    assemble_variables(&panel, &assembly)
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(Error::Io)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(Error::Io)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn describe_canonical(panel: &PanelDataset) -> Result<Vec<mmqr::SeriesStats>> {
    let present: Vec<&str> = CANONICAL_VARIABLES
        .iter()
        .copied()
        .filter(|v| panel.has_variable(v))
        .collect();
    if present.is_empty() {
        return Err(Error::Schema(
            "no analysis variables present; expected at least one of \
             ineqgrowth, pi, incgrowth, dffr, dgte, unexpinfl, union"
                .into(),
        ));
    }
    let trimmed = panel.trim_to_observed(&present)?;
    present.iter().map(|v| trimmed.describe(v)).collect()
}

fn cmd_describe(input: InputArgs, strict: bool, out: &Path) -> Result<()> {
    let assembled = load_assembled(&input)?;
    let stats = describe_canonical(&assembled)?;
    ensure_out_dir(out)?;
    write_text(&out.join("describe.csv"), &mio::format_describe(&stats))?;

    if strict {
        let present: Vec<&str> = CANONICAL_VARIABLES
            .iter()
            .copied()
            .filter(|v| assembled.has_variable(v))
            .collect();
        let trimmed = assembled.trim_to_observed(&present)?;
        let deviations = check_against_reference(&trimmed)?;
        if deviations.is_empty() {
            println!("strict reference check: ok");
        } else {
            for d in &deviations {
                eprintln!("reference deviation: {d}");
            }
            return Err(Error::Schema(format!(
                "{} descriptive statistics deviate from the reference by more than 0.01",
                deviations.len()
            )));
        }
    }
    Ok(())
}

fn resolve_spec(args: &SpecArgs) -> Result<ModelSpec> {
    let mut spec = match &args.preset {
        Some(name) => ModelSpec::preset(Figure::parse(name)?),
        None => ModelSpec::default(),
    };
    if let Some(path) = &args.spec {
        let text = std::fs::read_to_string(path).map_err(Error::Io)?;
        spec.apply_config_str(&text, &path.display().to_string())?;
    }
    let mut overrides = String::new();
    if let Some(v) = &args.inflation {
        overrides.push_str(&format!("inflation = {v}\n"));
    }
    if let Some(v) = &args.lags {
        overrides.push_str(&format!("lags = {v}\n"));
    }
    if let Some(v) = &args.controls {
        overrides.push_str(&format!("controls = {v}\n"));
    }
    if let Some(v) = &args.grid {
        overrides.push_str(&format!("grid = {v}\n"));
    }
    if let Some(v) = args.bootstrap {
        overrides.push_str(&format!("bootstrap = {v}\n"));
    }
    if let Some(v) = args.seed {
        overrides.push_str(&format!("seed = {v}\n"));
    }
    spec.apply_config_str(&overrides, "command line")?;
    Ok(spec)
}

fn cmd_fit(input: InputArgs, spec_args: SpecArgs, emit: &str, out: &Path) -> Result<()> {
    let spec = resolve_spec(&spec_args)?;
    if spec.inflation_kind == InflationKind::Unexpected && input.forecast.is_none() {
        // Tolerated when the panel already ships the derived column.
        let panel = mio::read_panel_csv(&input.panel)?;
        if !panel.has_variable(VAR_UNEXPECTED) {
            return Err(Error::Schema(
                "unexpected-inflation specifications need --forecast (or a panel that \
                 already contains the unexpinfl column)"
                    .into(),
            ));
        }
    }
    let assembled = load_assembled(&input)?;
    let design = build_design(&assembled, &spec)?;
    let table = cluster_bootstrap_design(&design, &spec)?;

    ensure_out_dir(out)?;
    let mut emitted = false;
    for what in emit.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        emitted = true;
        match what {
            "coefficients" => write_text(
                &out.join("coefficients.csv"),
                &mio::format_coefficient_table(&table),
            )?,
            "plotdata" => {
                write_text(&out.join("plotdata.csv"), &mio::format_plot_data(&table))?
            }
            "fit-dump" => {
                let fit = mmqr::fit(&design, &spec.quantile_grid)?;
                write_text(&out.join("fit.csv"), &mio::format_fit_dump(&fit, &design.units))?;
            }
            "stats" => {
                let stats = describe_canonical(&assembled)?;
                write_text(&out.join("describe.csv"), &mio::format_describe(&stats))?;
            }
            other => {
                return Err(Error::Schema(format!(
                    "unknown emit target '{other}'; expected coefficients, plotdata, \
                     fit-dump, or stats"
                )))
            }
        }
    }
    if !emitted {
        return Err(Error::Schema("--emit selected nothing to write".into()));
    }
    println!(
        "fit: {} columns x {} quantiles, {} design rows, {} of {} bootstrap replicates used",
        design.n_columns(),
        spec.quantile_grid.len(),
        design.n_rows(),
        table.effective_reps,
        table.requested_reps,
    );
    Ok(())
}

fn cmd_simulate(dgp_path: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(dgp_path).map_err(Error::Io)?;
    let mut dgp = DgpSpec::from_config_str(&text, &dgp_path.display().to_string())?;
    if let Some(seed) = seed {
        dgp.rng_seed = seed;
    }
    let sim = simulate(&dgp)?;
    ensure_out_dir(out)?;
    mio::write_panel_csv(&sim.panel, &out.join("panel.csv"))?;
    println!("wrote {}", out.join("panel.csv").display());
    write_text(&out.join("truth.csv"), &mio::format_truth(&sim.truth))?;
    Ok(())
}

fn cmd_recover(
    dgp_path: &Path,
    reps: usize,
    grid: Option<&str>,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let text = std::fs::read_to_string(dgp_path).map_err(Error::Io)?;
    let mut dgp = DgpSpec::from_config_str(&text, &dgp_path.display().to_string())?;
    if let Some(seed) = seed {
        dgp.rng_seed = seed;
    }
    let grid = match grid {
        Some(text) => mmqr::design::parse_quantile_grid(text)?,
        None => mmqr::default_quantile_grid(),
    };
    let report = recovery_experiment(&dgp, reps, &grid)?;
    ensure_out_dir(out)?;
    write_text(&out.join("recovery.csv"), &mio::format_recovery(&report))?;
    println!(
        "recovery: {} replications, {} failures",
        report.replications, report.failures
    );
    Ok(())
}
