//! What each subcommand does, independent of argument parsing.

use std::io;
use std::path::{Path, PathBuf};

use catbeam_core::observables::TrajectoryRecord;
use catbeam_core::oracle::{ideal_evolution, IdealOptions};
use catbeam_core::protocol::{effective_rates, run_protocol, Regime};
use catbeam_core::{Space, StateVector};
use rayon::prelude::*;

use crate::checks::{run_checks, CheckOutcome};
use crate::config::{ConfigError, RawConfig, RunConfig};
use crate::output::{format_number, render_comments, render_trajectory, write_atomic};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] catbeam_core::Error),
    #[error("failed checks: {}", .0.join(", "))]
    ChecksFailed(Vec<String>),
    #[error("bad sweep: {0}")]
    Sweep(String),
    #[error("sweep point {key} = {value}: {source}")]
    SweepPoint { key: String, value: String, source: Box<CliError> },
}

pub type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn read_raw(path: &Path) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(RawConfig::parse(&text)?)
}

/// Resolve the raw config, applying a `--seed` override first.
pub fn resolve(raw: &RawConfig, seed: Option<u64>) -> Result<RunConfig> {
    let mut raw = raw.clone();
    if let Some(s) = seed {
        raw.set("seed", &s.to_string())?;
    }
    Ok(raw.resolve()?)
}

fn config_comments(config: &RunConfig, command: &str) -> Vec<String> {
    let mut out = vec![format!("command = {command}")];
    out.extend(config.resolved().into_iter().map(|(k, v)| format!("{k} = {v}")));
    for q in config.inequalities() {
        if q.regime() == Regime::Marginal {
            out.push(format!("marginal: {} (value {})", q.description, format_number(q.value)));
        }
    }
    out
}

fn record_comments(rec: &TrajectoryRecord) -> Vec<String> {
    let mut out = vec![
        format!("events_applied = {}", rec.events_applied),
        format!("events_dropped = {}", rec.events_dropped),
        format!("max_event_trace_change = {}", format_number(rec.max_event_trace_change)),
        format!("max_event_parity_change = {}", format_number(rec.max_event_parity_change)),
    ];
    out.extend(rec.warnings.iter().map(|w| format!("warning: {w}")));
    out
}

/// CSV text of one protocol run.
pub fn simulate_csv(config: &RunConfig) -> Result<(String, TrajectoryRecord)> {
    let rec = run_protocol(&config.protocol)?;
    let mut comments = config_comments(config, "simulate");
    comments.extend(record_comments(&rec));
    Ok((render_trajectory(&comments, &rec.samples), rec))
}

pub fn simulate(config: &RunConfig, out: &Path) -> Result<TrajectoryRecord> {
    let (text, rec) = simulate_csv(config)?;
    write_atomic(out, &text).map_err(io_err(out))?;
    Ok(rec)
}

/// CSV text of the ideal master equation with the config's effective rates.
pub fn ideal_csv(config: &RunConfig) -> Result<(String, TrajectoryRecord)> {
    let p = &config.protocol;
    let rates = effective_rates(&p.l1, &p.l2, &p.tau_distribution)?;
    let vacuum = StateVector::basis(Space::Product(p.field()?), 0)?.projector();
    let opts = IdealOptions { dt: None, sample_interval: p.sample_interval };
    let rec = ideal_evolution(config.alpha(), rates.gamma1, rates.gamma2, p.kappa, &vacuum, p.horizon, opts)?;
    let mut comments = config_comments(config, "ideal");
    comments.push(format!("gamma1 = {}", format_number(rates.gamma1)));
    comments.push(format!("gamma2 = {}", format_number(rates.gamma2)));
    comments.extend(rec.warnings.iter().map(|w| format!("warning: {w}")));
    Ok((render_trajectory(&comments, &rec.samples), rec))
}

pub fn ideal(config: &RunConfig, out: &Path) -> Result<TrajectoryRecord> {
    let (text, rec) = ideal_csv(config)?;
    write_atomic(out, &text).map_err(io_err(out))?;
    Ok(rec)
}

/// Run the invariant suite; failing checks become an error naming them.
pub fn check(config: &RunConfig) -> (Vec<CheckOutcome>, Result<()>) {
    let outcomes = run_checks(config);
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name.to_string()).collect();
    let status = if failed.is_empty() { Ok(()) } else { Err(CliError::ChecksFailed(failed)) };
    (outcomes, status)
}

/// `key = v1,v2,...`
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub key: String,
    pub values: Vec<String>,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (key, values) = text.split_once('=').ok_or_else(|| CliError::Sweep(format!("expected `key=v1,v2,...`, got `{text}`")))?;
        let key = key.trim().to_string();
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if key.is_empty() || values.iter().any(String::is_empty) {
            return Err(CliError::Sweep(format!("empty key or value in `{text}`")));
        }
        Ok(Self { key, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub peak_fidelity: f64,
    pub peak_time: f64,
    pub final_fidelity: f64,
    pub file: PathBuf,
}

pub const SUMMARY_HEADER: &str = "key,value,peak_fidelity,peak_time,final_fidelity";
pub const SUMMARY_FILE: &str = "summary.csv";

fn point_file(dir: &Path, key: &str, value: &str) -> PathBuf {
    let clean: String = value.chars().map(|c| if c.is_ascii_alphanumeric() || "+-.".contains(c) { c } else { '_' }).collect();
    dir.join(format!("{key}_{clean}.csv"))
}

/// One protocol run per value, at most `workers` at a time, plus a summary
/// ordered by value (numerically when every value is a number).
pub fn sweep(raw: &RawConfig, seed: Option<u64>, spec: &SweepSpec, dir: &Path, workers: usize) -> Result<Vec<SweepRow>> {
    let mut points = Vec::with_capacity(spec.values.len());
    for value in &spec.values {
        let mut r = raw.clone();
        r.set(&spec.key, value)?;
        let config =
            resolve(&r, seed).map_err(|e| CliError::SweepPoint { key: spec.key.clone(), value: value.clone(), source: Box::new(e) })?;
        points.push((value.clone(), config));
    }
    let numeric: Option<Vec<f64>> = spec.values.iter().map(|v| v.parse::<f64>().ok()).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    if let Some(xs) = &numeric {
        order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    }

    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().map_err(|e| CliError::Sweep(e.to_string()))?;
    let results: Vec<Result<SweepRow>> = pool.install(|| {
        points
            .par_iter()
            .map(|(value, config)| {
                let file = point_file(dir, &spec.key, value);
                let point = || -> Result<SweepRow> {
                    let rec = simulate(config, &file)?;
                    let peak = rec.peak().ok_or_else(|| CliError::Sweep("run produced no samples".into()))?;
                    let last = rec.last().ok_or_else(|| CliError::Sweep("run produced no samples".into()))?;
                    Ok(SweepRow {
                        value: value.clone(),
                        peak_fidelity: peak.fidelity,
                        peak_time: peak.time,
                        final_fidelity: last.fidelity,
                        file: file.clone(),
                    })
                };
                point().map_err(|e| CliError::SweepPoint { key: spec.key.clone(), value: value.clone(), source: Box::new(e) })
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    let rows: Vec<SweepRow> = order.iter().map(|&i| rows[i].clone()).collect();

    let mut comments =
        vec!["command = sweep".to_string(), format!("sweep_key = {}", spec.key), format!("sweep_values = {}", spec.values.join(","))];
    comments.extend(points[0].1.resolved().into_iter().filter(|(k, _)| *k != spec.key).map(|(k, v)| format!("base {k} = {v}")));
    let mut text = render_comments(&comments);
    text.push_str(SUMMARY_HEADER);
    text.push('\n');
    for row in &rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            spec.key,
            row.value,
            format_number(row.peak_fidelity),
            format_number(row.peak_time),
            format_number(row.final_fidelity)
        ));
    }
    let summary = dir.join(SUMMARY_FILE);
    write_atomic(&summary, &text).map_err(io_err(&summary))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spec_forms() {
        let s = SweepSpec::parse("kappa_over_r = 1e-5, 1e-4,1e-3").unwrap();
        assert_eq!(s.key, "kappa_over_r");
        assert_eq!(s.values, ["1e-5", "1e-4", "1e-3"]);
        assert!(SweepSpec::parse("kappa_over_r").is_err());
        assert!(SweepSpec::parse("seed=1,,2").is_err());
    }

    #[test]
    fn point_files_are_filesystem_safe() {
        assert_eq!(point_file(Path::new("d"), "phi", "pi/4"), Path::new("d/phi_pi_4.csv"));
    }
}
