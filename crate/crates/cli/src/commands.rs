//! Subcommand implementations. Each returns the lines to print on success
//! and a [`CliError`] carrying the exit code otherwise.

use std::path::Path;

use cnlse_core::classify::{classify_q1, SpecialCaseLabels};
use cnlse_core::experiment::{gauge_equivalence, self_convergence, ConvergenceReport, EquivalenceReport, Schedule};
use cnlse_core::fields::{to_hydro, DEFAULT_DENSITY_FLOOR};
use cnlse_core::gauge::{apply_gauge, compute_generator, transformed_spec, TransformedSpec};
use cnlse_core::solver::{evolve_observed, stability_limit, DiagnosticsRecord, SimState, SystemTag};
use cnlse_core::NonlinearitySpec;

use crate::config::{Perturbation, RunConfig, Snapshots};
use crate::error::{CliError, EXIT_RUNTIME};
use crate::output::{columns, ensure_dir, num, write_snapshot, Table};

/// Observed order below which a convergence study fails.
pub const MIN_ORDER: f64 = 3.5;

fn psi_state(config: &RunConfig) -> Result<SimState, CliError> {
    let spec = config.spec()?;
    Ok(SimState::new(0.0, config.initial_fields()?, SystemTag::Psi, spec, config.dispersion())?)
}

fn warn_if_unstable(config: &RunConfig, out: &mut Vec<String>) -> bool {
    let limit = stability_limit(&config.grid(), &config.dispersion());
    if config.time.dt > limit {
        let msg = format!("warning: dt = {} exceeds the RK4 stability limit {limit:.6e}", config.time.dt);
        log::warn!("{msg}");
        out.push(msg);
        return true;
    }
    false
}

fn write_diagnostics(dir: &Path, q: usize, records: &[DiagnosticsRecord]) -> Result<(), CliError> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(columns("N", q))
        .chain(columns("drift", q))
        .chain(columns("cont_res", q))
        .collect();
    let mut table = Table::create(dir, "diagnostics.csv", &header)?;
    for r in records {
        table.row(
            std::iter::once(num(r.t))
                .chain(r.norms.iter().map(|&v| num(v)))
                .chain(r.norm_drift.iter().map(|&v| num(v)))
                .chain(r.continuity_residual.iter().map(|&v| num(v))),
        )?;
    }
    table.finish()?;
    Ok(())
}

/// Evolves the original system, writing `diagnostics.csv` and snapshots.
pub fn simulate(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    let initial = psi_state(config)?;
    warn_if_unstable(config, &mut out);
    let dir = &config.output.dir;
    ensure_dir(dir)?;
    let every = config.time.sample_every;
    let mode = config.output.snapshots;
    let mut kept: Vec<(usize, SimState)> = Vec::new();
    let mut index = 0usize;
    let result = evolve_observed(&initial, config.time.dt, config.time.t_end, every, |s| {
        if mode == Snapshots::Samples && index % every == 0 {
            kept.push((index, s.clone()));
        }
        index += 1;
    });
    let q = initial.fields().species();
    let evolution = match result {
        Ok(e) => e,
        Err(failure) => {
            write_diagnostics(dir, q, &failure.diagnostics)?;
            return Err(CliError::new(EXIT_RUNTIME, format!("evolution failed: {failure}")));
        }
    };
    write_diagnostics(dir, q, &evolution.diagnostics)?;
    let final_index = index - 1;
    match mode {
        Snapshots::None => {}
        Snapshots::Ends => {
            kept.push((0, initial.clone()));
            kept.push((final_index, evolution.state.clone()));
        }
        Snapshots::Samples => {
            if kept.last().map(|(i, _)| *i) != Some(final_index) {
                kept.push((final_index, evolution.state.clone()));
            }
        }
    }
    for (i, s) in &kept {
        write_snapshot(dir, &format!("psi_step{i:08}"), s.fields(), s.t(), "psi")?;
    }
    let last = evolution.diagnostics.last().expect("final record");
    out.push(format!(
        "simulated {} species to t = {} in {} steps; {} diagnostics rows, final max |drift| = {:e}",
        q,
        evolution.state.t(),
        final_index,
        evolution.diagnostics.len(),
        last.norm_drift.iter().map(|d| d.abs()).fold(0.0, f64::max)
    ));
    Ok(out)
}

fn coefficient_rows(t: &TransformedSpec) -> Vec<(String, Vec<usize>, f64)> {
    let q = t.species();
    let mut rows = Vec::new();
    for (name, m) in [("drift_self", t.drift_self()), ("drift_cross", t.drift_cross()), ("cubic", t.cubic())] {
        for ((k, j), &v) in m.indexed_iter() {
            rows.push((name.to_string(), vec![k, j], v));
        }
    }
    for ((k, j, i), &v) in t.quartic().indexed_iter() {
        rows.push(("quartic".to_string(), vec![k, j, i], v));
    }
    for k in 0..q {
        rows.push(("const_shift".to_string(), vec![k], t.const_shift()[k]));
    }
    rows
}

pub fn write_coefficients(dir: &Path, t: &TransformedSpec) -> Result<(), CliError> {
    let header: Vec<String> = ["entry", "k", "j", "i", "value"].iter().map(|s| s.to_string()).collect();
    let mut table = Table::create(dir, "transformed_coefficients.csv", &header)?;
    for (name, idx, v) in coefficient_rows(t) {
        let mut fields = vec![name];
        for slot in 0..3 {
            fields.push(idx.get(slot).map(|i| i.to_string()).unwrap_or_default());
        }
        fields.push(num(v));
        table.row(fields)?;
    }
    table.finish()?;
    Ok(())
}

/// Writes the transformed coefficients and, given an initial condition, the
/// gauge-transformed initial fields.
pub fn transform(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    let spec = config.spec()?;
    let a = config.dispersion();
    let t = transformed_spec(&spec, &a)?;
    let dir = &config.output.dir;
    ensure_dir(dir)?;
    write_coefficients(dir, &t)?;
    out.push(format!(
        "{} family, {} species: largest transformed coefficient {:e}",
        config.family_name(),
        t.species(),
        t.max_abs()
    ));
    if config.initial.is_some() {
        let psi0 = config.initial_fields()?;
        let h = to_hydro(&psi0, DEFAULT_DENSITY_FLOOR)?;
        let gen = compute_generator(&spec, &h, &a, config.verify.anchor)?;
        for k in gen.non_periodic_species() {
            eprintln!(
                "warning: species {} generator ramp winds {} times per period; not periodic",
                k + 1,
                gen.winding(k)
            );
        }
        gen.require_periodic()?;
        let phi = apply_gauge(&psi0, &gen)?.fields;
        write_snapshot(dir, "phi_initial", &phi, 0.0, "phi")?;
        out.push("wrote phi_initial snapshot".to_string());
    }
    Ok(out)
}

pub fn classify(beta: f64, gamma: f64, delta: f64, lambda: f64, tol: f64) -> SpecialCaseLabels {
    classify_q1(beta, gamma, delta, lambda, tol)
}

fn apply_perturbation(t: &mut TransformedSpec, p: &Perturbation) -> Result<(), CliError> {
    let q = t.species();
    let key = "verify.perturb";
    if p.index.iter().any(|&i| i >= q) {
        return Err(CliError::config_key(&format!("{key}.index"), &format!("entries must be below {q}")));
    }
    let want = match p.entry.as_str() {
        "drift_self" | "drift_cross" | "cubic" => 2,
        "quartic" => 3,
        "const_shift" => 1,
        other => return Err(CliError::config_key(&format!("{key}.entry"), &format!("unknown coefficient `{other}`"))),
    };
    if p.index.len() != want {
        return Err(CliError::config_key(&format!("{key}.index"), &format!("`{}` takes {want} indices", p.entry)));
    }
    let i = &p.index;
    match p.entry.as_str() {
        "drift_self" => t.drift_self_mut()[[i[0], i[1]]] += p.by,
        "drift_cross" => t.drift_cross_mut()[[i[0], i[1]]] += p.by,
        "cubic" => t.cubic_mut()[[i[0], i[1]]] += p.by,
        "quartic" => t.quartic_mut()[[i[0], i[1], i[2]]] += p.by,
        _ => t.const_shift_mut()[i[0]] += p.by,
    }
    Ok(())
}

/// Runs both systems from gauge-related initial data.
pub fn run_equivalence(config: &RunConfig) -> Result<EquivalenceReport, CliError> {
    let spec = config.spec()?;
    let a = config.dispersion();
    let psi0 = config.initial_fields()?;
    let mut t = transformed_spec(&spec, &a)?;
    if let Some(p) = &config.verify.perturb {
        apply_perturbation(&mut t, p)?;
    }
    let schedule = Schedule::new(config.time.dt, config.time.t_end, config.time.sample_every)
        .map_err(|e| CliError::config_key("time", &e.to_string()))?;
    Ok(gauge_equivalence(&psi0, &spec, &a, Some(t), schedule, config.verify.anchor)?)
}

pub fn write_equivalence(dir: &Path, report: &EquivalenceReport) -> Result<(), CliError> {
    let q = report.transformed.species();
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(columns("density_diff", q))
        .chain(columns("phase_residual", q))
        .collect();
    let mut table = Table::create(dir, "equivalence.csv", &header)?;
    for s in &report.samples {
        table.row(
            std::iter::once(num(s.t))
                .chain(s.density_diff.iter().map(|&v| num(v)))
                .chain(s.phase_residual.iter().map(|&v| num(v))),
        )?;
    }
    table.finish()?;
    Ok(())
}

/// Fails with exit code 2 when the final density gap reaches the tolerance.
pub fn check_gap(report: &EquivalenceReport, tolerance: f64) -> Result<(), CliError> {
    let gap = report.final_density_diff();
    if !(gap < tolerance) {
        return Err(CliError::runtime(format!(
            "equivalence gap {gap:e} at t = {} is not below the tolerance {tolerance:e}",
            report.samples.last().map(|s| s.t).unwrap_or(0.0)
        )));
    }
    Ok(())
}

pub fn verify(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    warn_if_unstable(config, &mut out);
    let report = run_equivalence(config)?;
    ensure_dir(&config.output.dir)?;
    write_equivalence(&config.output.dir, &report)?;
    check_gap(&report, config.verify.tolerance)?;
    out.push(format!(
        "equivalent: final density gap {:e}, phase residual {:e} (tolerance {:e})",
        report.final_density_diff(),
        report.final_phase_residual(),
        config.verify.tolerance
    ));
    Ok(out)
}

/// Self-convergence of the original system and, when the gauge is
/// periodic, of the transformed one.
pub fn run_convergence(config: &RunConfig) -> Result<Vec<(&'static str, ConvergenceReport)>, CliError> {
    let psi = psi_state(config)?;
    let dt = config.time.dt;
    let t_end = config.time.t_end;
    let mut reports = vec![("psi", self_convergence(&psi, dt, t_end)?)];
    let spec = psi.spec();
    if !matches!(spec, NonlinearitySpec::Linear { .. }) {
        let a = psi.dispersion();
        let h = to_hydro(psi.fields(), DEFAULT_DENSITY_FLOOR)?;
        let gen = compute_generator(spec, &h, a, config.verify.anchor)?;
        if gen.non_periodic_species().is_empty() {
            let phi0 = apply_gauge(psi.fields(), &gen)?.fields;
            let t = NonlinearitySpec::RealCoefficient(transformed_spec(spec, a)?);
            let phi = SimState::new(0.0, phi0, SystemTag::Phi, t, a.clone())?;
            reports.push(("phi", self_convergence(&phi, dt, t_end)?));
        } else {
            log::warn!("gauge is not periodic; skipping the transformed system");
        }
    }
    Ok(reports)
}

pub fn convergence(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    if warn_if_unstable(config, &mut out) {
        return Err(CliError::runtime(format!(
            "{}; convergence study not attempted",
            out.pop().unwrap_or_default()
        )));
    }
    let reports = run_convergence(config)?;
    ensure_dir(&config.output.dir)?;
    let header: Vec<String> = ["system", "dt_0", "dt_1", "dt_2", "difference_01", "difference_12", "observed_order"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut table = Table::create(&config.output.dir, "convergence.csv", &header)?;
    for (system, r) in &reports {
        table.row(
            std::iter::once(system.to_string())
                .chain(r.dts.iter().map(|&v| num(v)))
                .chain(r.differences.iter().map(|&v| num(v)))
                .chain(std::iter::once(num(r.order))),
        )?;
        out.push(format!("{system}: observed order {:.4}", r.order));
    }
    table.finish()?;
    if let Some((system, r)) = reports.iter().find(|(_, r)| !(r.order >= MIN_ORDER)) {
        return Err(CliError::runtime(format!(
            "{system}: observed order {:.4} is below {MIN_ORDER}",
            r.order
        )));
    }
    Ok(out)
}
