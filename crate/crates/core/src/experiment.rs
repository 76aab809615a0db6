//! End-to-end runs: gauge equivalence of the two systems and RK4
//! self-convergence.

use crate::error::{Error, Result};
use crate::fields::{field_norms, to_hydro, ComplexFieldSet, DispersionMatrix, DEFAULT_DENSITY_FLOOR};
use crate::gauge::{anchor_phase_rate, apply_gauge, compute_generator, phase_relation_residual, transformed_spec, TransformedSpec};
use crate::nonlinearity::NonlinearitySpec;
use crate::solver::{step, step_plan, SimState, SystemTag, BLOW_UP_FACTOR};

/// Time stepping shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
}

impl Schedule {
    pub fn new(dt: f64, t_end: f64, sample_every: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("t_end must be positive, got {t_end}")));
        }
        if sample_every == 0 {
            return Err(Error::InvalidArgument("sample_every must be >= 1".into()));
        }
        Ok(Self { dt, t_end, sample_every })
    }
}

/// One row of an equivalence run.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceSample {
    pub t: f64,
    /// `sup |rho_psi - rho_phi|` per species.
    pub density_diff: Vec<f64>,
    /// Phase relation residual modulo `2 pi` per species.
    pub phase_residual: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub transformed: TransformedSpec,
    pub samples: Vec<EquivalenceSample>,
    /// Relative norm drift of the original system at the final time.
    pub final_norm_drift: Vec<f64>,
}

impl EquivalenceReport {
    fn last(&self) -> &EquivalenceSample {
        self.samples.last().expect("at least the initial sample")
    }

    pub fn final_density_diff(&self) -> f64 {
        self.last().density_diff.iter().cloned().fold(0.0, f64::max)
    }

    pub fn final_phase_residual(&self) -> f64 {
        self.last().phase_residual.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.final_norm_drift.iter().map(|d| d.abs()).fold(0.0, f64::max)
    }
}

fn compare(
    psi: &ComplexFieldSet,
    phi: &ComplexFieldSet,
    spec: &NonlinearitySpec,
    a: &DispersionMatrix,
    anchor: usize,
    global_phase: &[f64],
    t: f64,
) -> Result<EquivalenceSample> {
    let density_diff = (psi.densities() - phi.densities())
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).fold(0.0, f64::max))
        .collect();
    let h_psi = to_hydro(psi, DEFAULT_DENSITY_FLOOR)?;
    let h_phi = to_hydro(phi, DEFAULT_DENSITY_FLOOR)?;
    let gen = compute_generator(spec, &h_psi, a, anchor)?.with_global_phase(global_phase.to_vec())?;
    Ok(EquivalenceSample {
        t,
        density_diff,
        phase_residual: phase_relation_residual(&h_psi, &h_phi, &gen)?,
    })
}

fn blown_up(state: &SimState, max0: f64) -> bool {
    max0 > 0.0 && state.fields().max_abs() > BLOW_UP_FACTOR * max0
}

/// Evolves `psi0` under `spec` and its gauge image under the coefficient-form
/// transformed system in lockstep, comparing densities and phases at every
/// sample.
///
/// `transformed` overrides the coefficients of the second system, which is
/// how deliberately mismatched runs are set up. The spatially constant phase
/// rate dropped by the coefficient form is integrated alongside (trapezoid
/// rule) so the phase relation is checked against the gauge actually
/// realised.
pub fn gauge_equivalence(
    psi0: &ComplexFieldSet,
    spec: &NonlinearitySpec,
    a: &DispersionMatrix,
    transformed: Option<TransformedSpec>,
    schedule: Schedule,
    anchor: usize,
) -> Result<EquivalenceReport> {
    let h0 = to_hydro(psi0, DEFAULT_DENSITY_FLOOR)?;
    let gen0 = compute_generator(spec, &h0, a, anchor)?;
    gen0.require_periodic()?;
    let phi0 = apply_gauge(psi0, &gen0)?.fields;
    let transformed = match transformed {
        Some(t) => t,
        None => transformed_spec(spec, a)?,
    };
    let mut psi = SimState::new(0.0, psi0.clone(), SystemTag::Psi, spec.clone(), a.clone())?;
    let mut phi = SimState::new(
        0.0,
        phi0,
        SystemTag::Phi,
        NonlinearitySpec::RealCoefficient(transformed.clone()),
        a.clone(),
    )?;
    let q = psi0.species();
    let norms0 = field_norms(psi0);
    let max0 = psi0.max_abs().max(phi.fields().max_abs());
    let mut theta = vec![0.0; q];
    let mut rate = anchor_phase_rate(spec, psi.fields(), a, anchor)?;
    let mut samples = vec![compare(psi.fields(), phi.fields(), spec, a, anchor, &theta, 0.0)?];

    let (n_steps, h) = step_plan(schedule.t_end, schedule.dt);
    for i in 0..n_steps {
        psi = step(&psi, h)?;
        phi = step(&phi, h)?;
        if blown_up(&psi, max0) || blown_up(&phi, max0) {
            return Err(Error::BlowUp { t: psi.t() });
        }
        let next_rate = anchor_phase_rate(spec, psi.fields(), a, anchor)?;
        for k in 0..q {
            theta[k] -= 0.5 * h * (rate[k] + next_rate[k]);
        }
        rate = next_rate;
        if (i + 1) % schedule.sample_every == 0 || i + 1 == n_steps {
            samples.push(compare(psi.fields(), phi.fields(), spec, a, anchor, &theta, psi.t())?);
        }
    }
    let final_norm_drift = field_norms(psi.fields())
        .iter()
        .zip(&norms0)
        .map(|(n, n0)| if *n0 > 0.0 { (n - n0) / n0 } else { n - n0 })
        .collect();
    Ok(EquivalenceReport {
        transformed,
        samples,
        final_norm_drift,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// `dt0, dt0/2, dt0/4`.
    pub dts: [f64; 3],
    /// Sup differences between the solutions at successive step sizes.
    pub differences: [f64; 2],
    /// `log2(differences[0] / differences[1])`.
    pub order: f64,
}

/// Advances `initial` to `t_end` with a fixed step count.
pub fn integrate(initial: &SimState, dt: f64, t_end: f64) -> Result<SimState> {
    let span = t_end - initial.t();
    if !(span > 0.0) {
        return Err(Error::InvalidArgument(format!("t_end = {t_end} must exceed t = {}", initial.t())));
    }
    let (n_steps, h) = step_plan(span, dt);
    let max0 = initial.fields().max_abs();
    let mut s = initial.clone();
    for _ in 0..n_steps {
        s = step(&s, h)?;
        if blown_up(&s, max0) {
            return Err(Error::BlowUp { t: s.t() });
        }
    }
    Ok(s)
}

fn sup_difference(a: &SimState, b: &SimState) -> f64 {
    a.fields()
        .data()
        .iter()
        .zip(b.fields().data())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Self-convergence study over `dt0, dt0/2, dt0/4`.
pub fn self_convergence(initial: &SimState, dt0: f64, t_end: f64) -> Result<ConvergenceReport> {
    let dts = [dt0, 0.5 * dt0, 0.25 * dt0];
    let runs = dts
        .iter()
        .map(|&dt| integrate(initial, dt, t_end))
        .collect::<Result<Vec<_>>>()?;
    let differences = [sup_difference(&runs[0], &runs[1]), sup_difference(&runs[1], &runs[2])];
    let order = (differences[0] / differences[1]).log2();
    Ok(ConvergenceReport { dts, differences, order })
}
