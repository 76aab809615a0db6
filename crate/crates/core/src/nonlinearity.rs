//! Coefficient families of complex nonlinearities `B_k = W_k + i Wim_k`.
//!
//! Two families are supported, plus the all-zero nonlinearity and the purely
//! real coefficient form produced by the gauge transformation:
//!
//! * drift-cubic: `W_k = d_k S_k' - g_k rho_k - 2 sum_{j != k} g_j rho_j`,
//!   `Wim_k = -d_k (log rho_k)' / 2`;
//! * derivative: `W_k = sum_j rho_j (beta_kj S_k' + gamma_kj S_j') + sum_{j,i} lambda_kji rho_j rho_i`,
//!   `Wim_k = 2 delta_kk rho_k' + sum_{j != k} delta_kj (rho_j' + rho_j rho_k' / rho_k)`.
//!
//! Each imaginary part is the divergence of a flux, `Wim_k = F_k' / rho_k`,
//! which is what makes `integral rho_k` conserved.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::fields::{DispersionMatrix, HydroFields, HydroGradients};
use crate::gauge::TransformedSpec;

fn check_finite<'a>(name: &str, values: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("non-finite entry in {name}")))
    }
}

/// Constant-drift cubic family with scalar (1-D) drifts.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftCubicSpec {
    drift: Vec<f64>,
    gamma: Vec<f64>,
}

impl DriftCubicSpec {
    pub fn new(drift: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if drift.is_empty() || drift.len() != gamma.len() {
            return Err(Error::Shape(format!(
                "drift has {} entries, gamma has {}",
                drift.len(),
                gamma.len()
            )));
        }
        check_finite("drift", &drift)?;
        check_finite("gamma", &gamma)?;
        Ok(Self { drift, gamma })
    }

    pub fn species(&self) -> usize {
        self.drift.len()
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }
}

/// One-dimensional derivative family (Jackiw, Chen-Lee-Liu and Kaup-Newell
/// for a single species).
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeSpec {
    beta: Array2<f64>,
    gamma: Array2<f64>,
    delta: Array2<f64>,
    lambda: Array3<f64>,
}

impl DerivativeSpec {
    pub fn new(beta: Array2<f64>, gamma: Array2<f64>, delta: Array2<f64>, lambda: Array3<f64>) -> Result<Self> {
        let q = beta.nrows();
        if q == 0 {
            return Err(Error::Shape("at least one species is required".into()));
        }
        for (name, dim) in [("beta", beta.dim()), ("gamma", gamma.dim()), ("delta", delta.dim())] {
            if dim != (q, q) {
                return Err(Error::Shape(format!("{name} has shape {dim:?}, expected ({q}, {q})")));
            }
        }
        if lambda.dim() != (q, q, q) {
            return Err(Error::Shape(format!(
                "lambda has shape {:?}, expected ({q}, {q}, {q})",
                lambda.dim()
            )));
        }
        check_finite("beta", &beta)?;
        check_finite("gamma", &gamma)?;
        check_finite("delta", &delta)?;
        check_finite("lambda", &lambda)?;
        Ok(Self {
            beta,
            gamma,
            delta,
            lambda,
        })
    }

    /// Single-species spec from scalar coefficients.
    pub fn scalar(beta: f64, gamma: f64, delta: f64, lambda: f64) -> Result<Self> {
        Self::new(
            Array2::from_elem((1, 1), beta),
            Array2::from_elem((1, 1), gamma),
            Array2::from_elem((1, 1), delta),
            Array3::from_elem((1, 1, 1), lambda),
        )
    }

    pub fn zeros(q: usize) -> Result<Self> {
        Self::new(
            Array2::zeros((q, q)),
            Array2::zeros((q, q)),
            Array2::zeros((q, q)),
            Array3::zeros((q, q, q)),
        )
    }

    pub fn species(&self) -> usize {
        self.beta.nrows()
    }

    pub fn beta(&self) -> &Array2<f64> {
        &self.beta
    }

    pub fn gamma(&self) -> &Array2<f64> {
        &self.gamma
    }

    pub fn delta(&self) -> &Array2<f64> {
        &self.delta
    }

    pub fn lambda(&self) -> &Array3<f64> {
        &self.lambda
    }
}

/// The nonlinearity driving one system of equations.
#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearitySpec {
    Linear { species: usize },
    DriftCubic(DriftCubicSpec),
    Derivative(DerivativeSpec),
    RealCoefficient(TransformedSpec),
}

impl NonlinearitySpec {
    pub fn species(&self) -> usize {
        match self {
            Self::Linear { species } => *species,
            Self::DriftCubic(s) => s.species(),
            Self::Derivative(s) => s.species(),
            Self::RealCoefficient(s) => s.species(),
        }
    }

    /// True when the imaginary part vanishes identically.
    pub fn is_real(&self) -> bool {
        match self {
            Self::Linear { .. } | Self::RealCoefficient(_) => true,
            Self::DriftCubic(s) => s.drift().iter().all(|&d| d == 0.0),
            Self::Derivative(s) => s.delta().iter().all(|&d| d == 0.0),
        }
    }

    /// Whether `Wim_k` divides by `rho_k`.
    fn divides_by_density(&self, k: usize) -> bool {
        match self {
            Self::Linear { .. } | Self::RealCoefficient(_) => false,
            Self::DriftCubic(s) => s.drift()[k] != 0.0,
            Self::Derivative(s) => (0..s.species()).any(|j| j != k && s.delta()[[k, j]] != 0.0),
        }
    }

    pub(crate) fn check_species(&self, q: usize) -> Result<()> {
        if self.species() != q {
            return Err(Error::Shape(format!(
                "nonlinearity has {} species, fields have {}",
                self.species(),
                q
            )));
        }
        Ok(())
    }
}

/// Real part `W_k` from precomputed gradients.
pub(crate) fn real_part(spec: &NonlinearitySpec, g: &HydroGradients) -> Array2<f64> {
    let (q, n) = (g.species(), g.n_points());
    let mut w = Array2::zeros((q, n));
    match spec {
        NonlinearitySpec::Linear { .. } => {}
        NonlinearitySpec::DriftCubic(s) => {
            for k in 0..q {
                for i in 0..n {
                    let mut v = s.drift()[k] * g.dphase[[k, i]] - s.gamma()[k] * g.rho[[k, i]];
                    for j in (0..q).filter(|&j| j != k) {
                        v -= 2.0 * s.gamma()[j] * g.rho[[j, i]];
                    }
                    w[[k, i]] = v;
                }
            }
        }
        NonlinearitySpec::Derivative(s) => {
            for k in 0..q {
                for i in 0..n {
                    let mut v = 0.0;
                    for j in 0..q {
                        let rj = g.rho[[j, i]];
                        v += rj * (s.beta()[[k, j]] * g.dphase[[k, i]] + s.gamma()[[k, j]] * g.dphase[[j, i]]);
                        for l in 0..q {
                            v += s.lambda()[[k, j, l]] * rj * g.rho[[l, i]];
                        }
                    }
                    w[[k, i]] = v;
                }
            }
        }
        NonlinearitySpec::RealCoefficient(t) => {
            for k in 0..q {
                for i in 0..n {
                    let mut v = t.const_shift()[k];
                    for j in 0..q {
                        let rj = g.rho[[j, i]];
                        v += rj
                            * (t.drift_self()[[k, j]] * g.dphase[[k, i]]
                                + t.drift_cross()[[k, j]] * g.dphase[[j, i]]
                                + t.cubic()[[k, j]]);
                        for l in 0..q {
                            v += t.quartic()[[k, j, l]] * rj * g.rho[[l, i]];
                        }
                    }
                    w[[k, i]] = v;
                }
            }
        }
    }
    w
}

/// Imaginary part `Wim_k` from precomputed gradients. Vacuum nodes use
/// `1/rho = 0`, which is harmless once multiplied by the vanishing field.
pub(crate) fn imaginary_part(spec: &NonlinearitySpec, g: &HydroGradients) -> Array2<f64> {
    let (q, n) = (g.species(), g.n_points());
    let mut w = Array2::zeros((q, n));
    let inv = |k: usize, i: usize| {
        if g.vacuum[[k, i]] {
            0.0
        } else {
            1.0 / g.rho[[k, i]]
        }
    };
    match spec {
        NonlinearitySpec::Linear { .. } | NonlinearitySpec::RealCoefficient(_) => {}
        NonlinearitySpec::DriftCubic(s) => {
            for k in 0..q {
                for i in 0..n {
                    w[[k, i]] = -0.5 * s.drift()[k] * g.drho[[k, i]] * inv(k, i);
                }
            }
        }
        NonlinearitySpec::Derivative(s) => {
            for k in 0..q {
                for i in 0..n {
                    let mut v = 2.0 * s.delta()[[k, k]] * g.drho[[k, i]];
                    for j in (0..q).filter(|&j| j != k) {
                        let d = s.delta()[[k, j]];
                        if d != 0.0 {
                            v += d * (g.drho[[j, i]] + g.rho[[j, i]] * inv(k, i) * g.drho[[k, i]]);
                        }
                    }
                    w[[k, i]] = v;
                }
            }
        }
    }
    w
}

/// Closed-form `F_k / rho_k`, free of any division.
pub(crate) fn flux_per_density(spec: &NonlinearitySpec, rho: &Array2<f64>) -> Array2<f64> {
    let (q, n) = rho.dim();
    let mut out = Array2::zeros((q, n));
    match spec {
        NonlinearitySpec::Linear { .. } | NonlinearitySpec::RealCoefficient(_) => {}
        NonlinearitySpec::DriftCubic(s) => {
            for k in 0..q {
                out.row_mut(k).fill(-0.5 * s.drift()[k]);
            }
        }
        NonlinearitySpec::Derivative(s) => {
            for k in 0..q {
                for i in 0..n {
                    out[[k, i]] = (0..q).map(|j| s.delta()[[k, j]] * rho[[j, i]]).sum();
                }
            }
        }
    }
    out
}

/// Closed-form flux `F_k`.
pub(crate) fn flux(spec: &NonlinearitySpec, rho: &Array2<f64>) -> Array2<f64> {
    flux_per_density(spec, rho) * rho
}

fn check_dispersion(spec: &NonlinearitySpec, a: &DispersionMatrix) -> Result<()> {
    if a.species() != spec.species() {
        return Err(Error::Shape(format!(
            "{} dispersion coefficients for {} species",
            a.species(),
            spec.species()
        )));
    }
    Ok(())
}

/// Real part `W_k` of the nonlinearity evaluated on `(rho, S)`.
pub fn eval_w(spec: &NonlinearitySpec, h: &HydroFields, a: &DispersionMatrix) -> Result<Array2<f64>> {
    spec.check_species(h.species())?;
    check_dispersion(spec, a)?;
    let g = HydroGradients::from_hydro(h)?;
    Ok(real_part(spec, &g))
}

/// Imaginary part `Wim_k`. Fails with [`Error::Vacuum`] if the formula for a
/// species divides by its density and that species has vacuum nodes.
pub fn eval_wim(spec: &NonlinearitySpec, h: &HydroFields) -> Result<Array2<f64>> {
    spec.check_species(h.species())?;
    for k in 0..h.species() {
        if spec.divides_by_density(k) && (h.has_vacuum(k) || h.rho().row(k).iter().any(|&r| r == 0.0)) {
            return Err(Error::Vacuum { species: k });
        }
    }
    let g = HydroGradients::from_hydro(h)?;
    Ok(imaginary_part(spec, &g))
}

/// Flux fields `F_k` with `Wim_k = F_k' / rho_k`.
pub fn eval_f(spec: &NonlinearitySpec, h: &HydroFields) -> Result<Array2<f64>> {
    spec.check_species(h.species())?;
    Ok(flux(spec, h.rho()))
}
