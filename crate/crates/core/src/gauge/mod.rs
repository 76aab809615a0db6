//! Unitary gauge transformation `phi_k = exp(i sigma_k) psi_k` removing the
//! imaginary part of the nonlinearity.
//!
//! The generator obeys `sigma_k' = F_k / (A_k rho_k)`. Its indefinite integral
//! is anchored so that `sigma_k(x_anchor) = 0`; a non-zero mean of the
//! integrand leaves a linear ramp that is stored separately from the periodic
//! part, because only ramps with an integer winding over the period keep `phi`
//! grid-periodic.

mod curl;
mod transformed;

pub use curl::{curl_residual_2d, Grid2D};
pub use transformed::{
    eval_r_numeric, transformed_spec, transformed_spec_derivative, transformed_spec_drift, TransformedSpec,
};

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{wrap_angle, ComplexFieldSet, DispersionMatrix, HydroFields, DEFAULT_DENSITY_FLOOR};
use crate::grid::Grid1D;
use crate::nonlinearity::{flux_per_density, NonlinearitySpec};
use crate::solver::current_psi_fields;

/// Windings closer than this to an integer count as periodic.
pub const WINDING_TOLERANCE: f64 = 1e-9;

/// Per-species generator `sigma_k(x) = periodic_k(x) + ramp_k (x - x_anchor) + global_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeGenerator {
    grid: Grid1D,
    periodic: Array2<f64>,
    ramp: Vec<f64>,
    global_phase: Vec<f64>,
    anchor: usize,
    spec: NonlinearitySpec,
    dispersion: DispersionMatrix,
}

impl GaugeGenerator {
    /// Identity transformation for `q` species.
    pub fn identity(grid: Grid1D, spec: NonlinearitySpec, dispersion: DispersionMatrix) -> Self {
        let q = spec.species();
        let n = grid.n_points();
        Self {
            grid,
            periodic: Array2::zeros((q, n)),
            ramp: vec![0.0; q],
            global_phase: vec![0.0; q],
            anchor: 0,
            spec,
            dispersion,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn species(&self) -> usize {
        self.ramp.len()
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn periodic(&self) -> &Array2<f64> {
        &self.periodic
    }

    pub fn ramp(&self) -> &[f64] {
        &self.ramp
    }

    pub fn global_phase(&self) -> &[f64] {
        &self.global_phase
    }

    pub fn spec(&self) -> &NonlinearitySpec {
        &self.spec
    }

    pub fn dispersion(&self) -> &DispersionMatrix {
        &self.dispersion
    }

    /// Adds a spatially constant phase per species. Such constants are
    /// invisible to every local quantity; they only matter when comparing
    /// phases of separately evolved states.
    pub fn with_global_phase(mut self, global_phase: Vec<f64>) -> Result<Self> {
        if global_phase.len() != self.species() {
            return Err(Error::Shape(format!(
                "{} global phases for {} species",
                global_phase.len(),
                self.species()
            )));
        }
        self.global_phase = global_phase;
        Ok(self)
    }

    /// Full generator of species `k` at every node.
    pub fn sigma(&self, k: usize) -> Vec<f64> {
        let xa = self.grid.x(self.anchor);
        (0..self.grid.n_points())
            .map(|i| self.periodic[[k, i]] + self.ramp[k] * (self.grid.x(i) - xa) + self.global_phase[k])
            .collect()
    }

    /// `sigma_k'`.
    pub fn gradient(&self, k: usize) -> Result<Vec<f64>> {
        let mut d = self.grid.derivative(&self.periodic.row(k).to_vec())?;
        d.iter_mut().for_each(|v| *v += self.ramp[k]);
        Ok(d)
    }

    /// Number of turns the ramp makes over one period.
    pub fn winding(&self, k: usize) -> f64 {
        self.ramp[k] * self.grid.length() / (2.0 * PI)
    }

    /// Whether `exp(i sigma_k)` is grid-periodic.
    pub fn is_periodic(&self, k: usize) -> bool {
        let w = self.winding(k);
        (w - w.round()).abs() <= WINDING_TOLERANCE
    }

    /// Species whose transformed field would not be grid-periodic.
    pub fn non_periodic_species(&self) -> Vec<usize> {
        (0..self.species()).filter(|&k| !self.is_periodic(k)).collect()
    }

    /// Fails with [`Error::NonPeriodicRamp`] for the first non-periodic species.
    pub fn require_periodic(&self) -> Result<()> {
        match self.non_periodic_species().first() {
            Some(&k) => Err(Error::NonPeriodicRamp {
                species: k,
                winding: self.winding(k),
            }),
            None => Ok(()),
        }
    }
}

fn check_generator_inputs(spec: &NonlinearitySpec, h: &HydroFields, a: &DispersionMatrix, anchor: usize) -> Result<()> {
    spec.check_species(h.species())?;
    if a.species() != spec.species() {
        return Err(Error::Shape(format!(
            "{} dispersion coefficients for {} species",
            a.species(),
            spec.species()
        )));
    }
    if anchor >= h.grid().n_points() {
        return Err(Error::AnchorOutOfRange {
            anchor,
            n_points: h.grid().n_points(),
        });
    }
    Ok(())
}

/// Generator from the closed forms of each family:
/// drift-cubic gives the pure ramp `-d_k / (2 A_k)`, the derivative family
/// gives `(1/A_k) sum_j delta_kj integral rho_j`.
pub fn compute_generator(
    spec: &NonlinearitySpec,
    h: &HydroFields,
    a: &DispersionMatrix,
    anchor: usize,
) -> Result<GaugeGenerator> {
    check_generator_inputs(spec, h, a, anchor)?;
    let grid = h.grid().clone();
    let q = spec.species();
    let n = grid.n_points();
    let mut periodic = Array2::zeros((q, n));
    let mut ramp = vec![0.0; q];
    match spec {
        NonlinearitySpec::Linear { .. } | NonlinearitySpec::RealCoefficient(_) => {}
        NonlinearitySpec::DriftCubic(s) => {
            for k in 0..q {
                ramp[k] = -0.5 * s.drift()[k] / a[k];
            }
        }
        NonlinearitySpec::Derivative(s) => {
            let integrals = (0..q)
                .map(|j| grid.antiderivative_split(&h.rho_row(j), anchor))
                .collect::<Result<Vec<_>>>()?;
            for k in 0..q {
                for (j, (p, r)) in integrals.iter().enumerate() {
                    let c = s.delta()[[k, j]] / a[k];
                    if c == 0.0 {
                        continue;
                    }
                    ramp[k] += c * r;
                    for i in 0..n {
                        periodic[[k, i]] += c * p[i];
                    }
                }
            }
        }
    }
    Ok(GaugeGenerator {
        grid,
        periodic,
        ramp,
        global_phase: vec![0.0; q],
        anchor,
        spec: spec.clone(),
        dispersion: a.clone(),
    })
}

/// Generator by direct spectral integration of `F_k / (A_k rho_k)`, with
/// the flux divided by the density numerically. Independent of the family
/// closed forms used by [`compute_generator`].
pub fn generator_from_flux(
    spec: &NonlinearitySpec,
    h: &HydroFields,
    a: &DispersionMatrix,
    anchor: usize,
) -> Result<GaugeGenerator> {
    check_generator_inputs(spec, h, a, anchor)?;
    let grid = h.grid().clone();
    let q = spec.species();
    let n = grid.n_points();
    let flux = crate::nonlinearity::eval_f(spec, h)?;
    let mut periodic = Array2::zeros((q, n));
    let mut ramp = vec![0.0; q];
    for k in 0..q {
        if h.has_vacuum(k) || h.rho().row(k).iter().any(|&r| r <= 0.0) {
            return Err(Error::Vacuum { species: k });
        }
        let integrand: Vec<f64> = (0..n).map(|i| flux[[k, i]] / (a[k] * h.rho()[[k, i]])).collect();
        let (p, r) = grid.antiderivative_split(&integrand, anchor)?;
        periodic.row_mut(k).assign(&Array1::from(p));
        ramp[k] = r;
    }
    Ok(GaugeGenerator {
        grid,
        periodic,
        ramp,
        global_phase: vec![0.0; q],
        anchor,
        spec: spec.clone(),
        dispersion: a.clone(),
    })
}

/// Result of [`apply_gauge`]: the transformed fields plus the species whose
/// generator ramp is not commensurate with the period.
#[derive(Debug, Clone)]
pub struct GaugedFields {
    pub fields: ComplexFieldSet,
    pub non_periodic: Vec<usize>,
}

impl GaugedFields {
    pub fn is_periodic(&self) -> bool {
        self.non_periodic.is_empty()
    }
}

fn rotate(psi: &ComplexFieldSet, gen: &GaugeGenerator, sign: f64) -> Result<ComplexFieldSet> {
    if psi.species() != gen.species() || psi.grid() != gen.grid() {
        return Err(Error::Shape(format!(
            "fields have {} species on {:?}, generator has {} on {:?}",
            psi.species(),
            psi.grid(),
            gen.species(),
            gen.grid()
        )));
    }
    let mut out = psi.clone();
    for k in 0..psi.species() {
        let sigma = gen.sigma(k);
        for (c, s) in out.row_mut(k).iter_mut().zip(sigma) {
            *c *= Complex64::from_polar(1.0, sign * s);
        }
    }
    Ok(out)
}

/// `phi_k = exp(i sigma_k) psi_k`.
pub fn apply_gauge(psi: &ComplexFieldSet, gen: &GaugeGenerator) -> Result<GaugedFields> {
    let fields = rotate(psi, gen, 1.0)?;
    let non_periodic = gen.non_periodic_species();
    for &k in &non_periodic {
        log::warn!(
            "gauge ramp of species {} winds {:.6} times over the period; transformed field is not grid-periodic",
            k,
            gen.winding(k)
        );
    }
    Ok(GaugedFields { fields, non_periodic })
}

/// `psi_k = exp(-i sigma_k) phi_k`.
pub fn invert_gauge(phi: &ComplexFieldSet, gen: &GaugeGenerator) -> Result<ComplexFieldSet> {
    rotate(phi, gen, -1.0)
}

/// Hydrodynamic fields of the transformed state: same densities, phases
/// shifted by the generator (ramps included).
pub fn transform_hydro(h_psi: &HydroFields, gen: &GaugeGenerator) -> Result<HydroFields> {
    if h_psi.species() != gen.species() || h_psi.grid() != gen.grid() {
        return Err(Error::Shape("hydro fields and generator disagree".into()));
    }
    let mut phase = h_psi.phase().clone();
    for k in 0..gen.species() {
        let sigma = gen.sigma(k);
        for (s, g) in phase.row_mut(k).iter_mut().zip(sigma) {
            *s += g;
        }
    }
    let ramp = h_psi.ramp().iter().zip(gen.ramp()).map(|(a, b)| a + b).collect();
    Ok(h_psi.with_phase(phase, ramp))
}

/// Sup over non-vacuum nodes of the distance of `S_phi - S_psi - sigma` to
/// the nearest multiple of `2 pi`, per species.
pub fn phase_relation_residual(h_psi: &HydroFields, h_phi: &HydroFields, gen: &GaugeGenerator) -> Result<Vec<f64>> {
    if h_psi.species() != h_phi.species() || h_psi.species() != gen.species() {
        return Err(Error::Shape("phase residual inputs have different species counts".into()));
    }
    let n = h_psi.grid().n_points();
    Ok((0..gen.species())
        .map(|k| {
            let sigma = gen.sigma(k);
            (0..n)
                .filter(|&i| !h_psi.vacuum()[[k, i]] && !h_phi.vacuum()[[k, i]])
                .map(|i| wrap_angle(h_phi.phase()[[k, i]] - h_psi.phase()[[k, i]] - sigma[i]).abs())
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Generalised Cole-Hopf functional `G_k = (log psi_k)' + i F_k / (A_k rho_k)`.
///
/// For `phi = apply_gauge(psi)` it equals `(log phi_k)'`.
pub fn cole_hopf_g(psi: &ComplexFieldSet, spec: &NonlinearitySpec, a: &DispersionMatrix) -> Result<Array2<Complex64>> {
    spec.check_species(psi.species())?;
    let grid = psi.grid();
    let rho = psi.densities();
    let per_density = flux_per_density(spec, &rho);
    let (q, n) = rho.dim();
    let mut g = Array2::zeros((q, n));
    for k in 0..q {
        let max = rho.row(k).iter().cloned().fold(0.0, f64::max);
        if rho.row(k).iter().any(|&r| r == 0.0 || r < DEFAULT_DENSITY_FLOOR * max) {
            return Err(Error::Vacuum { species: k });
        }
        let d = grid.derivative_complex(psi.row(k))?;
        for i in 0..n {
            g[[k, i]] = d[i] / psi.row(k)[i] + Complex64::new(0.0, per_density[[k, i]] / a[k]);
        }
    }
    Ok(g)
}

/// Solves `(log u)' = g` for `u` with `u(x_anchor) = value_at_anchor`.
///
/// With `g = psi` (real) this is the classical Cole-Hopf map; with
/// `g = cole_hopf_g(psi)` it reconstructs the gauge-transformed field.
pub fn solve_log_derivative(
    grid: &Grid1D,
    g: &[Complex64],
    anchor: usize,
    value_at_anchor: Complex64,
) -> Result<Vec<Complex64>> {
    let re: Vec<f64> = g.iter().map(|c| c.re).collect();
    let im: Vec<f64> = g.iter().map(|c| c.im).collect();
    let int_re = grid.antiderivative(&re, anchor)?;
    let int_im = grid.antiderivative(&im, anchor)?;
    Ok(int_re
        .into_iter()
        .zip(int_im)
        .map(|(a, b)| value_at_anchor * Complex64::new(a, b).exp())
        .collect())
}

/// Spatially constant part of the transformed nonlinearity dropped by the
/// coefficient form, `c_k = (1/A_k) sum_j delta_kj j_j(x_anchor)`.
///
/// It comes from the anchor term of `d sigma_k / dt` for the derivative
/// family and vanishes for every other family. Integrating `-c_k` over time
/// gives the global phase separating an anchored generator from the gauge
/// actually realised by coefficient-form evolution.
pub fn anchor_phase_rate(
    spec: &NonlinearitySpec,
    psi: &ComplexFieldSet,
    a: &DispersionMatrix,
    anchor: usize,
) -> Result<Vec<f64>> {
    let q = psi.species();
    match spec {
        NonlinearitySpec::Derivative(s) => {
            let j = current_psi_fields(spec, psi, a)?;
            Ok((0..q)
                .map(|k| (0..q).map(|l| s.delta()[[k, l]] * j[[l, anchor]]).sum::<f64>() / a[k])
                .collect())
        }
        _ => {
            spec.check_species(q)?;
            Ok(vec![0.0; q])
        }
    }
}
