//! Method-of-lines time evolution with spectral derivatives and classical
//! fourth-order Runge-Kutta, plus currents and conservation diagnostics.
//!
//! Both systems share one right-hand side,
//! `d psi_k/dt = i (A_k psi_k'' + (W_k + i Wim_k) psi_k)`; the transformed
//! system simply carries a real coefficient-form nonlinearity.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{ComplexFieldSet, DispersionMatrix, HydroFields, HydroGradients, DEFAULT_DENSITY_FLOOR};
use crate::grid::Grid1D;
use crate::nonlinearity::{flux, imaginary_part, real_part, NonlinearitySpec};

/// Growth factor of the largest amplitude that counts as blow-up.
pub const BLOW_UP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemTag {
    /// Original system with a complex nonlinearity.
    Psi,
    /// Gauge-transformed system with a purely real nonlinearity.
    Phi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    t: f64,
    fields: ComplexFieldSet,
    system: SystemTag,
    spec: NonlinearitySpec,
    dispersion: DispersionMatrix,
}

impl SimState {
    pub fn new(
        t: f64,
        fields: ComplexFieldSet,
        system: SystemTag,
        spec: NonlinearitySpec,
        dispersion: DispersionMatrix,
    ) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
        }
        spec.check_species(fields.species())?;
        if dispersion.species() != fields.species() {
            return Err(Error::Shape(format!(
                "{} dispersion coefficients for {} species",
                dispersion.species(),
                fields.species()
            )));
        }
        if system == SystemTag::Phi && !spec.is_real() {
            return Err(Error::InvalidArgument(
                "the transformed system needs a purely real nonlinearity".into(),
            ));
        }
        Ok(Self {
            t,
            fields,
            system,
            spec,
            dispersion,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn fields(&self) -> &ComplexFieldSet {
        &self.fields
    }

    pub fn system(&self) -> SystemTag {
        self.system
    }

    pub fn spec(&self) -> &NonlinearitySpec {
        &self.spec
    }

    pub fn dispersion(&self) -> &DispersionMatrix {
        &self.dispersion
    }

    pub fn grid(&self) -> &Grid1D {
        self.fields.grid()
    }

    fn advanced(&self, t: f64, data: Array2<Complex64>) -> Self {
        Self {
            t,
            fields: self.fields.with_data(data),
            system: self.system,
            spec: self.spec.clone(),
            dispersion: self.dispersion.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub norms: Vec<f64>,
    /// `(N_k(t) - N_k(0)) / N_k(0)`, absolute when `N_k(0) = 0`.
    pub norm_drift: Vec<f64>,
    pub continuity_residual: Vec<f64>,
    /// `integral |psi_k'|^2`, monitoring only.
    pub energy_proxy: Vec<f64>,
}

fn first_derivatives(fields: &ComplexFieldSet) -> Result<Array2<Complex64>> {
    let grid = fields.grid();
    let mut d = Array2::zeros(fields.data().dim());
    for k in 0..fields.species() {
        let dk = grid.derivative_complex(fields.row(k))?;
        d.row_mut(k).assign(&ndarray::Array1::from(dk));
    }
    Ok(d)
}

fn rhs_data(fields: &ComplexFieldSet, spec: &NonlinearitySpec, a: &DispersionMatrix) -> Result<Array2<Complex64>> {
    let grid = fields.grid();
    let (q, n) = fields.data().dim();
    let mut d1 = Array2::zeros((q, n));
    let mut out = Array2::zeros((q, n));
    for k in 0..q {
        let (first, second) = grid.derivatives_complex(fields.row(k))?;
        for i in 0..n {
            d1[[k, i]] = first[i];
            out[[k, i]] = a[k] * second[i];
        }
    }
    if !matches!(spec, NonlinearitySpec::Linear { .. }) {
        let g = HydroGradients::from_fields(fields, &d1, DEFAULT_DENSITY_FLOOR)?;
        let w = real_part(spec, &g);
        let wim = imaginary_part(spec, &g);
        for ((k, i), v) in out.indexed_iter_mut() {
            *v += Complex64::new(w[[k, i]], wim[[k, i]]) * fields.data()[[k, i]];
        }
    }
    let i_unit = Complex64::new(0.0, 1.0);
    out.mapv_inplace(|v| i_unit * v);
    if out.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("right-hand side".into()));
    }
    Ok(out)
}

/// Time derivative of the fields.
pub fn rhs(state: &SimState) -> Result<ComplexFieldSet> {
    let data = rhs_data(&state.fields, &state.spec, &state.dispersion)?;
    Ok(state.fields.with_data(data))
}

/// RK4 stability limit on the imaginary axis for the stiffest resolved mode,
/// `2 sqrt(2) / (max|A| k_max^2)`.
pub fn stability_limit(grid: &Grid1D, a: &DispersionMatrix) -> f64 {
    let k = grid.max_wavenumber();
    2.0 * std::f64::consts::SQRT_2 / (a.max_abs() * k * k)
}

fn step_to(state: &SimState, dt: f64, t_next: f64) -> Result<SimState> {
    let (spec, a) = (&state.spec, &state.dispersion);
    let y = state.fields.data();
    let stage = |data: Array2<Complex64>| -> Result<Array2<Complex64>> {
        rhs_data(&state.fields.with_data(data), spec, a)
    };
    let as_blow_up = |e: Error| match e {
        Error::NonFinite(_) => Error::BlowUp { t: state.t },
        other => other,
    };
    let k1 = rhs_data(&state.fields, spec, a).map_err(as_blow_up)?;
    let k2 = stage(y + &(&k1 * (0.5 * dt))).map_err(as_blow_up)?;
    let k3 = stage(y + &(&k2 * (0.5 * dt))).map_err(as_blow_up)?;
    let k4 = stage(y + &(&k3 * dt)).map_err(as_blow_up)?;
    let next = y + &((k1 + &(k2 * 2.0) + &(k3 * 2.0) + &k4) * (dt / 6.0));
    if next.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::BlowUp { t: t_next });
    }
    Ok(state.advanced(t_next, next))
}

/// One classical RK4 step of size `dt`.
pub fn step(state: &SimState, dt: f64) -> Result<SimState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if dt > stability_limit(state.grid(), &state.dispersion) {
        log::debug!("dt = {dt} exceeds the RK4 stability limit");
    }
    step_to(state, dt, state.t + dt)
}

/// `j_k = 2 (A_k rho_k S_k' + F_k)` from hydrodynamic fields.
pub fn current_psi(spec: &NonlinearitySpec, h: &HydroFields, a: &DispersionMatrix) -> Result<Array2<f64>> {
    spec.check_species(h.species())?;
    let f = flux(spec, h.rho());
    let mut j = Array2::zeros(h.rho().dim());
    for k in 0..h.species() {
        let ds = h.phase_gradient(k)?;
        for (i, s) in ds.into_iter().enumerate() {
            j[[k, i]] = 2.0 * (a[k] * h.rho()[[k, i]] * s + f[[k, i]]);
        }
    }
    Ok(j)
}

/// Same current straight from the fields, using `rho S' = Im(conj(psi) psi')`.
pub fn current_psi_fields(spec: &NonlinearitySpec, psi: &ComplexFieldSet, a: &DispersionMatrix) -> Result<Array2<f64>> {
    spec.check_species(psi.species())?;
    let d = first_derivatives(psi)?;
    let f = flux(spec, &psi.densities());
    let mut j = Array2::zeros(f.dim());
    for ((k, i), v) in j.indexed_iter_mut() {
        let momentum = (psi.data()[[k, i]].conj() * d[[k, i]]).im;
        *v = 2.0 * (a[k] * momentum + f[[k, i]]);
    }
    Ok(j)
}

/// Bilinear current `J_k = 2 A_k rho_k S_k'` of the transformed system.
pub fn current_phi(h_phi: &HydroFields, a: &DispersionMatrix) -> Result<Array2<f64>> {
    current_psi(&NonlinearitySpec::Linear { species: h_phi.species() }, h_phi, a)
}

fn divergence_of_current(state: &SimState) -> Result<Array2<f64>> {
    let j = current_psi_fields(&state.spec, &state.fields, &state.dispersion)?;
    let mut div = Array2::zeros(j.dim());
    for k in 0..j.nrows() {
        let d = state.grid().derivative(&j.row(k).to_vec())?;
        div.row_mut(k).assign(&ndarray::Array1::from(d));
    }
    Ok(div)
}

fn sup_per_species(a: &Array2<f64>) -> Vec<f64> {
    a.rows().into_iter().map(|r| r.iter().map(|v| v.abs()).fold(0.0, f64::max)).collect()
}

/// `sup |(rho(t+dt) - rho(t-dt)) / (2 dt) + j'(t)|` per species from three
/// equally spaced states.
pub fn continuity_residual(states: [&SimState; 3]) -> Result<Vec<f64>> {
    let [before, mid, after] = states;
    let h1 = mid.t - before.t;
    let h2 = after.t - mid.t;
    let scale = h1.abs().max(h2.abs());
    if !(h1 > 0.0) || (h1 - h2).abs() > 1e-9 * scale {
        return Err(Error::SpacingMismatch(format!("steps {h1} and {h2}")));
    }
    if before.fields.data().dim() != after.fields.data().dim() || mid.fields.data().dim() != after.fields.data().dim() {
        return Err(Error::Shape("states have different shapes".into()));
    }
    let dt = 0.5 * (h1 + h2);
    let drho = (after.fields.densities() - before.fields.densities()) / (2.0 * dt);
    let div = divergence_of_current(mid)?;
    Ok(sup_per_species(&(drho + div)))
}

/// Continuity residual with the exact semi-discrete `d rho/dt = 2 Re(conj(psi) psi_t)`.
pub fn continuity_residual_instant(state: &SimState) -> Result<Vec<f64>> {
    let dpsi = rhs_data(&state.fields, &state.spec, &state.dispersion)?;
    let drho = ndarray::Zip::from(state.fields.data())
        .and(&dpsi)
        .map_collect(|p, d| 2.0 * (p.conj() * d).re);
    let div = divergence_of_current(state)?;
    Ok(sup_per_species(&(drho + div)))
}

fn energy_proxy(fields: &ComplexFieldSet) -> Result<Vec<f64>> {
    let d = first_derivatives(fields)?;
    let dx = fields.grid().dx();
    Ok(d.rows().into_iter().map(|r| r.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx).collect())
}

fn record(state: &SimState, initial_norms: &[f64], continuity: Vec<f64>) -> Result<DiagnosticsRecord> {
    let norms = crate::fields::field_norms(&state.fields);
    let norm_drift = norms
        .iter()
        .zip(initial_norms)
        .map(|(n, n0)| if *n0 > 0.0 { (n - n0) / n0 } else { n - n0 })
        .collect();
    Ok(DiagnosticsRecord {
        t: state.t,
        norms,
        norm_drift,
        continuity_residual: continuity,
        energy_proxy: energy_proxy(&state.fields)?,
    })
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: SimState,
    pub diagnostics: Vec<DiagnosticsRecord>,
}

/// A failed run together with everything recorded before the failure.
#[derive(Debug, Clone)]
pub struct EvolveFailure {
    pub error: Error,
    pub diagnostics: Vec<DiagnosticsRecord>,
}

impl std::fmt::Display for EvolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} diagnostic records kept)", self.error, self.diagnostics.len())
    }
}

impl std::error::Error for EvolveFailure {}

impl From<Error> for EvolveFailure {
    fn from(error: Error) -> Self {
        Self {
            error,
            diagnostics: Vec::new(),
        }
    }
}

/// Number of steps and the effective step size covering `span` with steps
/// no larger than `dt`.
pub fn step_plan(span: f64, dt: f64) -> (usize, f64) {
    let ratio = span / dt;
    let rounded = ratio.round();
    let n = if rounded >= 1.0 && (ratio - rounded).abs() <= 1e-9 * ratio {
        rounded
    } else {
        ratio.ceil().max(1.0)
    } as usize;
    (n, span / n as f64)
}

/// Evolves to `t_end`, sampling diagnostics every `sample_every` steps and at
/// the final time.
///
/// Interior samples use the central-difference continuity residual; the
/// first and last samples use the instantaneous form.
pub fn evolve(initial: &SimState, dt: f64, t_end: f64, sample_every: usize) -> std::result::Result<Evolution, EvolveFailure> {
    evolve_observed(initial, dt, t_end, sample_every, |_| {})
}

/// [`evolve`] calling `observer` on every state, the initial one included.
pub fn evolve_observed(
    initial: &SimState,
    dt: f64,
    t_end: f64,
    sample_every: usize,
    mut observer: impl FnMut(&SimState),
) -> std::result::Result<Evolution, EvolveFailure> {
    if !(t_end > initial.t) {
        return Err(Error::InvalidArgument(format!("t_end = {t_end} must exceed t = {}", initial.t)).into());
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")).into());
    }
    if sample_every == 0 {
        return Err(Error::InvalidArgument("sample_every must be >= 1".into()).into());
    }
    let limit = stability_limit(initial.grid(), &initial.dispersion);
    if dt > limit {
        log::warn!("dt = {dt} exceeds the RK4 stability limit {limit:.3e}");
    }
    let t0 = initial.t;
    let (n_steps, h) = step_plan(t_end - t0, dt);
    let initial_norms = crate::fields::field_norms(&initial.fields);
    let max0 = initial.fields.max_abs();
    let mut diagnostics = Vec::with_capacity(n_steps / sample_every + 2);

    let mut prev: Option<SimState> = None;
    let mut cur = initial.clone();
    observer(&cur);
    for i in 0..n_steps {
        let t_next = if i + 1 == n_steps { t_end } else { t0 + (i + 1) as f64 * h };
        let next = match step_to(&cur, h, t_next) {
            Ok(s) => s,
            Err(error) => return Err(EvolveFailure { error, diagnostics }),
        };
        if max0 > 0.0 && next.fields.max_abs() > BLOW_UP_FACTOR * max0 {
            return Err(EvolveFailure {
                error: Error::BlowUp { t: next.t },
                diagnostics,
            });
        }
        if i % sample_every == 0 {
            let residual = match &prev {
                Some(p) => continuity_residual([p, &cur, &next]),
                None => continuity_residual_instant(&cur),
            };
            match residual.and_then(|r| record(&cur, &initial_norms, r)) {
                Ok(r) => diagnostics.push(r),
                Err(error) => return Err(EvolveFailure { error, diagnostics }),
            }
        }
        observer(&next);
        prev = Some(cur);
        cur = next;
    }
    match continuity_residual_instant(&cur).and_then(|r| record(&cur, &initial_norms, r)) {
        Ok(r) => diagnostics.push(r),
        Err(error) => return Err(EvolveFailure { error, diagnostics }),
    }
    Ok(Evolution { state: cur, diagnostics })
}
