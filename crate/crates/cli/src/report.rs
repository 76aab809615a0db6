//! Parameter sweeps over the equivalence experiment, tabulated in
//! `sweep.csv`.

use std::path::Path;

use rayon::prelude::*;

use crate::commands::{check_gap, run_equivalence};
use crate::config::RunConfig;
use crate::error::{CliError, EXIT_CONFIG};
use crate::output::{num, Table};
use cnlse_core::experiment::self_convergence;
use cnlse_core::solver::{SimState, SystemTag};

/// Summary metrics of one verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMetrics {
    /// Largest relative norm drift of the original system at the final time.
    pub final_norm_drift: f64,
    /// Largest density gap between the two systems at the final time.
    pub final_equivalence_gap: f64,
    /// Self-convergence order of the original system.
    pub observed_order: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// Metrics when the run got far enough to produce them.
    pub metrics: Option<SweepMetrics>,
    /// Failure with its exit code, if any.
    pub error: Option<CliError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// `key=v1,v2,...`.
pub fn parse_sweep(arg: &str) -> Result<(String, Vec<f64>), CliError> {
    let (key, list) = arg
        .split_once('=')
        .ok_or_else(|| CliError::new(EXIT_CONFIG, format!("sweep `{arg}` must look like key=v1,v2,...")))?;
    let values = list
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::new(EXIT_CONFIG, format!("sweep value `{v}` is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if key.trim().is_empty() || values.is_empty() {
        return Err(CliError::new(EXIT_CONFIG, format!("sweep `{arg}` needs a key and at least one value")));
    }
    Ok((key.trim().to_string(), values))
}

fn slot<'a>(root: &'a mut toml::Value, key: &str) -> Result<&'a mut toml::Value, CliError> {
    let missing = || CliError::config_key(key, "is not a numeric entry of the config");
    let mut cur = root;
    for part in key.split('.') {
        cur = match cur {
            toml::Value::Table(t) => t.get_mut(part).ok_or_else(missing)?,
            toml::Value::Array(a) => {
                let i: usize = part.parse().map_err(|_| missing())?;
                a.get_mut(i).ok_or_else(missing)?
            }
            _ => return Err(missing()),
        };
    }
    match cur {
        toml::Value::Float(_) | toml::Value::Integer(_) => Ok(cur),
        _ => Err(missing()),
    }
}

/// Sets the numeric entry at the dotted `key`; array elements are addressed
/// by index, e.g. `nonlinearity.delta.0.1`.
pub fn set_numeric(root: &mut toml::Value, key: &str, value: f64) -> Result<(), CliError> {
    let target = slot(root, key)?;
    *target = match target {
        toml::Value::Integer(_) if value.fract() == 0.0 && value.abs() < i64::MAX as f64 => toml::Value::Integer(value as i64),
        toml::Value::Integer(_) => {
            return Err(CliError::config_key(key, &format!("takes integers, got {value}")));
        }
        _ => toml::Value::Float(value),
    };
    Ok(())
}

fn run_row(base: &toml::Value, axis: &str, value: f64, tolerance: f64) -> SweepRow {
    let attempt = || -> Result<SweepMetrics, (Option<SweepMetrics>, CliError)> {
        let mut v = base.clone();
        set_numeric(&mut v, axis, value).map_err(|e| (None, e))?;
        let config = RunConfig::from_value(v).map_err(|e| (None, e))?;
        let report = run_equivalence(&config).map_err(|e| (None, e))?;
        let psi = SimState::new(
            0.0,
            config.initial_fields().map_err(|e| (None, e))?,
            SystemTag::Psi,
            config.spec().map_err(|e| (None, e))?,
            config.dispersion(),
        )
        .map_err(|e| (None, e.into()))?;
        let order = self_convergence(&psi, config.time.dt, config.time.t_end)
            .map(|r| r.order)
            .map_err(|e| (None, e.into()))?;
        let metrics = SweepMetrics {
            final_norm_drift: report.max_norm_drift(),
            final_equivalence_gap: report.final_density_diff(),
            observed_order: order,
        };
        check_gap(&report, tolerance).map_err(|e| (Some(metrics.clone()), e))?;
        Ok(metrics)
    };
    match attempt() {
        Ok(m) => SweepRow {
            value,
            metrics: Some(m),
            error: None,
        },
        Err((metrics, e)) => SweepRow {
            value,
            metrics,
            error: Some(e),
        },
    }
}

/// Runs the verification experiment once per value. Rows run in parallel and
/// come back in input order; failures are recorded, never fatal.
pub fn sweep(base: &RunConfig, axis: &str, values: &[f64]) -> Result<SweepResult, CliError> {
    let value = toml::Value::try_from(base).map_err(|e| CliError::runtime(format!("cannot encode config: {e}")))?;
    let mut probe = value.clone();
    slot(&mut probe, axis)?;
    let tolerance = base.verify.tolerance;
    let rows = values.par_iter().map(|&v| run_row(&value, axis, v, tolerance)).collect();
    Ok(SweepResult {
        axis: axis.to_string(),
        rows,
    })
}

pub fn write_sweep(dir: &Path, result: &SweepResult) -> Result<(), CliError> {
    let header: Vec<String> = [
        result.axis.as_str(),
        "status",
        "exit_code",
        "final_norm_drift",
        "final_equivalence_gap",
        "observed_order",
        "message",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut table = Table::create(dir, "sweep.csv", &header)?;
    for r in &result.rows {
        let (status, code, message) = match &r.error {
            None => ("ok", 0, String::new()),
            Some(e) => ("failed", e.code, e.message.clone()),
        };
        let metrics = match &r.metrics {
            Some(m) => [num(m.final_norm_drift), num(m.final_equivalence_gap), num(m.observed_order)],
            None => Default::default(),
        };
        table.row(
            [num(r.value), status.to_string(), code.to_string()]
                .into_iter()
                .chain(metrics)
                .chain(std::iter::once(message)),
        )?;
    }
    table.finish()?;
    Ok(())
}
