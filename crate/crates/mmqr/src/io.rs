//! Delimited-text input and output.
//!
//! Inputs are comma-separated with a header row; numbers use a `.` radix and
//! missing cells are empty fields. Outputs print floats with Rust's shortest
//! round-trip formatting, so rereading a written panel reproduces every cell
//! bit for bit.
//!
//! Formats:
//! - panel: `state,year,quarter,<variable...>`, one row per state-quarter;
//! - monthly inflation: `state,year,month,rate`;
//! - forecast: `year,quarter,forecast` (one-year-ahead, by origin quarter);
//! - descriptive statistics: variable blocks with overall/between/within rows;
//! - coefficient table, plot data, fit dump, truth record, recovery report:
//!   flat tables described by their headers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::design::ForecastSeries;
use crate::error::{Error, Result};
use crate::estimator::MmqrFit;
use crate::inference::CoefficientTable;
use crate::panel::{MonthlyData, PanelDataset, SeriesStats};
use crate::simulate::{RecoveryReport, TruthRecord};
use crate::time::{MonthId, QuarterId};

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(Error::Io)
}

fn parse_field<T: std::str::FromStr>(
    field: &str,
    what: &str,
    location: &str,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    field.trim().parse::<T>().map_err(|e| {
        Error::parse(location, format!("bad {what} '{}': {e}", field.trim()))
    })
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn record_location(path: &Path, record: &csv::StringRecord) -> String {
    let line = record.position().map(|p| p.line()).unwrap_or(0);
    format!("{}:{line}", path.display())
}

/// Read a long-format panel file: `state,year,quarter` key columns followed
/// by one column per variable (header names are lowercased). Units keep
/// first-appearance order; the time axis spans the observed range.
pub fn read_panel_csv(path: &Path) -> Result<PanelDataset> {
    let text = read_to_string(path)?;
    let mut reader = csv_reader(&text);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?
        .iter()
        .map(|h| h.trim().to_lowercase())
        .collect();
    if headers.len() < 4 || headers[0] != "state" || headers[1] != "year" || headers[2] != "quarter"
    {
        return Err(Error::schema(format!(
            "panel header must start with state,year,quarter and have at least one \
             variable column; got {headers:?} in {}",
            path.display()
        )));
    }
    let variables = headers[3..].to_vec();

    struct Row {
        unit: String,
        quarter: QuarterId,
        values: Vec<Option<f64>>,
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut units: Vec<String> = Vec::new();
    let mut seen_units = std::collections::HashSet::new();
    let mut seen_keys = std::collections::HashSet::new();
    let (mut min_q, mut max_q): (Option<QuarterId>, Option<QuarterId>) = (None, None);

    for record in reader.records() {
        let record =
            record.map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        let loc = record_location(path, &record);
        if record.len() != headers.len() {
            return Err(Error::parse(
                &loc,
                format!("expected {} fields, got {}", headers.len(), record.len()),
            ));
        }
        let unit = record[0].trim().to_string();
        let year: i32 = parse_field(&record[1], "year", &loc)?;
        let quarter_num: u8 = parse_field(&record[2], "quarter", &loc)?;
        let quarter = QuarterId::new(year, quarter_num)?;
        if !seen_keys.insert((unit.clone(), quarter)) {
            return Err(Error::parse(
                &loc,
                format!("duplicate row for state '{unit}' at {quarter}"),
            ));
        }
        if seen_units.insert(unit.clone()) {
            units.push(unit.clone());
        }
        min_q = Some(min_q.map_or(quarter, |q| q.min(quarter)));
        max_q = Some(max_q.map_or(quarter, |q| q.max(quarter)));
        let mut values = Vec::with_capacity(variables.len());
        for (j, _) in variables.iter().enumerate() {
            let field = record[3 + j].trim();
            if field.is_empty() {
                values.push(None);
            } else {
                values.push(Some(parse_field(field, "number", &loc)?));
            }
        }
        rows.push(Row { unit, quarter, values });
    }

    let (Some(min_q), Some(max_q)) = (min_q, max_q) else {
        return Err(Error::schema(format!("panel file {} has no data rows", path.display())));
    };
    let times = QuarterId::range(min_q, max_q);
    let mut panel = PanelDataset::new(units, times)?;
    let n_times = panel.n_times();
    let unit_of: std::collections::HashMap<String, usize> = panel
        .units()
        .iter()
        .enumerate()
        .map(|(i, u)| (u.clone(), i))
        .collect();

    let mut grids: Vec<Vec<Option<f64>>> =
        vec![vec![None; panel.n_units() * n_times]; variables.len()];
    for row in rows {
        let i = unit_of[&row.unit];
        let t = panel.time_offset(&row.quarter).expect("quarter within range");
        for (j, v) in row.values.into_iter().enumerate() {
            grids[j][i * n_times + t] = v;
        }
    }
    for (name, grid) in variables.into_iter().zip(grids) {
        panel.insert_series(name, grid)?;
    }
    Ok(panel)
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write a panel in the long format accepted by [`read_panel_csv`].
pub fn write_panel_csv(panel: &PanelDataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    let variables: Vec<&str> = panel.variable_names().collect();
    writeln!(out, "state,year,quarter,{}", variables.join(",")).unwrap();
    for (i, unit) in panel.units().iter().enumerate() {
        for (t, q) in panel.times().iter().enumerate() {
            write!(out, "{unit},{},{}", q.year(), q.quarter()).unwrap();
            for var in &variables {
                let v = panel.series(var).expect("listed variable")[i * panel.n_times() + t];
                write!(out, ",{}", fmt_cell(v)).unwrap();
            }
            out.push('\n');
        }
    }
    std::fs::write(path, out).map_err(Error::Io)
}

/// Read `state,year,month,rate` rows of 12-month inflation.
pub fn read_monthly_csv(path: &Path) -> Result<MonthlyData> {
    let text = read_to_string(path)?;
    let mut reader = csv_reader(&text);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?
        .clone();
    if headers.len() != 4 {
        return Err(Error::schema(format!(
            "monthly inflation header must be state,year,month,rate; got {headers:?}"
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        let loc = record_location(path, &record);
        let unit = record[0].trim().to_string();
        let year: i32 = parse_field(&record[1], "year", &loc)?;
        let month: u8 = parse_field(&record[2], "month", &loc)?;
        let rate: f64 = parse_field(&record[3], "rate", &loc)?;
        rows.push((unit, MonthId::new(year, month)?, rate));
    }
    Ok(MonthlyData::new(rows))
}

/// Read `year,quarter,forecast` rows of one-year-ahead forecasts, keyed by
/// the origin quarter the forecast was made in.
pub fn read_forecast_csv(path: &Path) -> Result<ForecastSeries> {
    let text = read_to_string(path)?;
    let mut reader = csv_reader(&text);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?
        .clone();
    if headers.len() != 3 {
        return Err(Error::schema(format!(
            "forecast header must be year,quarter,forecast; got {headers:?}"
        )));
    }
    let mut rows: BTreeMap<QuarterId, f64> = BTreeMap::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        let loc = record_location(path, &record);
        let year: i32 = parse_field(&record[0], "year", &loc)?;
        let quarter: u8 = parse_field(&record[1], "quarter", &loc)?;
        let value: f64 = parse_field(&record[2], "forecast", &loc)?;
        let q = QuarterId::new(year, quarter)?;
        if rows.insert(q, value).is_some() {
            return Err(Error::parse(&loc, format!("duplicate forecast for {q}")));
        }
    }
    Ok(ForecastSeries::new(rows))
}

/// Render descriptive statistics in the overall/between/within layout:
/// `variable,scope,mean,std_dev,min,max,count` with N on the overall row,
/// n on the between row, and T-bar on the within row.
pub fn format_describe(stats: &[SeriesStats]) -> String {
    let mut out = String::from("variable,scope,mean,std_dev,min,max,count\n");
    for s in stats {
        writeln!(
            out,
            "{},overall,{},{},{},{},{}",
            s.name,
            fmt_cell(s.overall.mean),
            s.overall.std_dev,
            s.overall.min,
            s.overall.max,
            s.n_obs
        )
        .unwrap();
        writeln!(
            out,
            "{},between,,{},{},{},{}",
            s.name, s.between.std_dev, s.between.min, s.between.max, s.n_units
        )
        .unwrap();
        writeln!(
            out,
            "{},within,,{},{},{},{}",
            s.name, s.within.std_dev, s.within.min, s.within.max, s.t_bar
        )
        .unwrap();
    }
    out
}

/// Coefficient table: fixed column order, literal asterisks in the star
/// column, inference columns empty when the bootstrap is off.
pub fn format_coefficient_table(table: &CoefficientTable) -> String {
    let mut out = String::from("tau,column,estimate,std_error,p_value,stars,b_effective\n");
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.tau,
            row.column,
            row.estimate,
            fmt_cell(row.std_error),
            fmt_cell(row.p_value),
            row.stars.unwrap_or(""),
            table.effective_reps
        )
        .unwrap();
    }
    out
}

/// Plot-ready grouped-bar data: one row per (quantile, design column) with
/// the bar height and its significance annotation.
pub fn format_plot_data(table: &CoefficientTable) -> String {
    let mut out = String::from("tau,column,estimate,stars\n");
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.tau,
            row.column,
            row.estimate,
            row.stars.unwrap_or("")
        )
        .unwrap();
    }
    out
}

/// Full fit dump: location and scale parameters by name, the standardized
/// quantile by tau, and the per-tau coefficients and fixed effects.
/// Sections: location_beta, alpha, scale_gamma, delta, q, coefficient,
/// fixed_effect.
pub fn format_fit_dump(fit: &MmqrFit, units: &[String]) -> String {
    let mut out = String::from("section,tau,name,value\n");
    for (name, value) in fit.columns.iter().zip(&fit.location.beta) {
        writeln!(out, "location_beta,,{name},{value}").unwrap();
    }
    for (unit, value) in units.iter().zip(&fit.location.alpha) {
        writeln!(out, "alpha,,{unit},{value}").unwrap();
    }
    for (name, value) in fit.columns.iter().zip(&fit.scale.gamma) {
        writeln!(out, "scale_gamma,,{name},{value}").unwrap();
    }
    for (unit, value) in units.iter().zip(&fit.scale.delta) {
        writeln!(out, "delta,,{unit},{value}").unwrap();
    }
    for (g, tau) in fit.taus.iter().enumerate() {
        writeln!(out, "q,{tau},,{}", fit.q[g]).unwrap();
    }
    for (g, tau) in fit.taus.iter().enumerate() {
        for (name, value) in fit.columns.iter().zip(&fit.coefficients[g]) {
            writeln!(out, "coefficient,{tau},{name},{value}").unwrap();
        }
    }
    for (g, tau) in fit.taus.iter().enumerate() {
        for (unit, value) in units.iter().zip(&fit.fixed_effects_at_tau[g]) {
            writeln!(out, "fixed_effect,{tau},{unit},{value}").unwrap();
        }
    }
    out
}

/// True parameters behind a simulated panel, one named value per row.
pub fn format_truth(truth: &TruthRecord) -> String {
    let mut out = String::from("section,name,value\n");
    writeln!(out, "innovation,,{}", truth.innovation.name()).unwrap();
    writeln!(out, "seed,,{}", truth.rng_seed).unwrap();
    for (name, value) in truth.columns.iter().zip(&truth.beta) {
        writeln!(out, "beta,{name},{value}").unwrap();
    }
    for (name, value) in truth.columns.iter().zip(&truth.gamma) {
        writeln!(out, "gamma,{name},{value}").unwrap();
    }
    for (i, value) in truth.alpha.iter().enumerate() {
        writeln!(out, "alpha,S{i:02},{value}").unwrap();
    }
    for (i, value) in truth.delta.iter().enumerate() {
        writeln!(out, "delta,S{i:02},{value}").unwrap();
    }
    out
}

/// Recovery report across replications.
pub fn format_recovery(report: &RecoveryReport) -> String {
    let mut out =
        String::from("tau,column,truth,mean_estimate,bias,mc_std_error,rmse,failures\n");
    for c in &report.cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.tau, c.column, c.truth, c.mean_estimate, c.bias, c.mc_std_error, c.rmse,
            report.failures
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn panel_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = write(
            dir.path(),
            "panel.csv",
            "state,year,quarter,pi,Gini\n\
             AL,1990,1,2.5,0.43\n\
             AL,1990,2,,0.44\n\
             AK,1990,1,0.1,0.47\n\
             AK,1990,2,3.25,\n",
        );
        let panel = read_panel_csv(&path).unwrap();
        assert_eq!(panel.units(), &["AL".to_string(), "AK".to_string()]);
        assert_eq!(panel.n_times(), 2);
        // Header names are lowercased.
        assert!(panel.has_variable("gini"));
        assert_eq!(panel.cell("pi", 0, 1).unwrap(), None);
        assert_eq!(panel.cell("pi", 1, 1).unwrap(), Some(3.25));

        let out = dir.path().join("roundtrip.csv");
        write_panel_csv(&panel, &out).unwrap();
        let back = read_panel_csv(&out).unwrap();
        assert_eq!(panel, back);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempdir().unwrap();
        let path = write(
            dir.path(),
            "panel.csv",
            "state,year,quarter,pi\nAL,1990,1,2.5\nAL,1990,oops,2.6\n",
        );
        let err = read_panel_csv(&path).unwrap_err();
        assert!(err.to_string().contains(":3"), "{err}");
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn duplicate_panel_rows_are_rejected() {
        let dir = tempdir().unwrap();
        let path = write(
            dir.path(),
            "panel.csv",
            "state,year,quarter,pi\nAL,1990,1,2.5\nAL,1990,1,2.6\n",
        );
        let err = read_panel_csv(&path).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn wrong_header_is_a_schema_error() {
        let dir = tempdir().unwrap();
        let path = write(dir.path(), "panel.csv", "id,year,quarter,pi\nAL,1990,1,2.5\n");
        assert!(matches!(read_panel_csv(&path).unwrap_err(), Error::Schema(_)));
    }

    #[test]
    fn forecast_and_monthly_files_parse() {
        let dir = tempdir().unwrap();
        let fpath = write(
            dir.path(),
            "forecast.csv",
            "year,quarter,forecast\n1989,1,4.4\n1989,2,4.5\n",
        );
        let f = read_forecast_csv(&fpath).unwrap();
        assert_eq!(f.get(&QuarterId::new(1989, 1).unwrap()), Some(4.4));
        assert_eq!(f.get(&QuarterId::new(1990, 1).unwrap()), None);

        let mpath = write(
            dir.path(),
            "monthly.csv",
            "state,year,month,rate\nAL,2004,1,2\nAL,2004,2,3\nAL,2004,3,4\n",
        );
        let monthly = read_monthly_csv(&mpath).unwrap();
        let mut panel =
            PanelDataset::new(vec!["AL".into()], vec![QuarterId::new(2004, 1).unwrap()]).unwrap();
        panel.insert_series("x", vec![Some(0.0)]).unwrap();
        assert_eq!(monthly.quarterly_average(&panel).unwrap(), vec![Some(3.0)]);
    }

    #[test]
    fn describe_layout_has_three_rows_per_variable() {
        let mut panel = PanelDataset::new(
            vec!["A".into(), "B".into()],
            QuarterId::range(QuarterId::new(2000, 1).unwrap(), QuarterId::new(2000, 2).unwrap()),
        )
        .unwrap();
        panel
            .insert_series("x", vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)])
            .unwrap();
        let text = format_describe(&[panel.describe("x").unwrap()]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("x,overall,"));
        assert!(lines[2].starts_with("x,between,,"));
        assert!(lines[3].starts_with("x,within,,"));
        assert!(lines[1].ends_with(",4")); // N
        assert!(lines[2].ends_with(",2")); // n
        assert!(lines[3].ends_with(",2")); // T-bar
    }
}
