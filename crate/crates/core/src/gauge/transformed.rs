//! Purely real nonlinearity of the transformed system, both as closed
//! coefficient tables and by direct numerical evaluation.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::fields::{DispersionMatrix, HydroFields, HydroGradients};
use crate::nonlinearity::{real_part, DerivativeSpec, DriftCubicSpec, NonlinearitySpec};

use super::GaugeGenerator;

/// Coefficients of a real nonlinearity
///
/// `R_k = sum_j rho_j (drift_self[k,j] S_k' + drift_cross[k,j] S_j' + cubic[k,j])
///      + sum_{j,i} quartic[k,j,i] rho_j rho_i + const_shift[k]`,
///
/// where `S` are the phases of the fields the nonlinearity acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedSpec {
    drift_self: Array2<f64>,
    drift_cross: Array2<f64>,
    cubic: Array2<f64>,
    quartic: Array3<f64>,
    const_shift: Vec<f64>,
}

impl TransformedSpec {
    pub fn new(
        drift_self: Array2<f64>,
        drift_cross: Array2<f64>,
        cubic: Array2<f64>,
        quartic: Array3<f64>,
        const_shift: Vec<f64>,
    ) -> Result<Self> {
        let q = const_shift.len();
        if q == 0 {
            return Err(Error::Shape("at least one species is required".into()));
        }
        for (name, dim) in [
            ("drift_self", drift_self.dim()),
            ("drift_cross", drift_cross.dim()),
            ("cubic", cubic.dim()),
        ] {
            if dim != (q, q) {
                return Err(Error::Shape(format!("{name} has shape {dim:?}, expected ({q}, {q})")));
            }
        }
        if quartic.dim() != (q, q, q) {
            return Err(Error::Shape(format!("quartic has shape {:?}", quartic.dim())));
        }
        let finite = drift_self
            .iter()
            .chain(&drift_cross)
            .chain(&cubic)
            .chain(&quartic)
            .chain(&const_shift)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite transformed coefficient".into()));
        }
        Ok(Self {
            drift_self,
            drift_cross,
            cubic,
            quartic,
            const_shift,
        })
    }

    pub fn zeros(q: usize) -> Self {
        Self {
            drift_self: Array2::zeros((q, q)),
            drift_cross: Array2::zeros((q, q)),
            cubic: Array2::zeros((q, q)),
            quartic: Array3::zeros((q, q, q)),
            const_shift: vec![0.0; q],
        }
    }

    pub fn species(&self) -> usize {
        self.const_shift.len()
    }

    pub fn drift_self(&self) -> &Array2<f64> {
        &self.drift_self
    }

    pub fn drift_cross(&self) -> &Array2<f64> {
        &self.drift_cross
    }

    pub fn cubic(&self) -> &Array2<f64> {
        &self.cubic
    }

    pub fn quartic(&self) -> &Array3<f64> {
        &self.quartic
    }

    pub fn const_shift(&self) -> &[f64] {
        &self.const_shift
    }

    pub fn drift_self_mut(&mut self) -> &mut Array2<f64> {
        &mut self.drift_self
    }

    pub fn drift_cross_mut(&mut self) -> &mut Array2<f64> {
        &mut self.drift_cross
    }

    pub fn cubic_mut(&mut self) -> &mut Array2<f64> {
        &mut self.cubic
    }

    pub fn quartic_mut(&mut self) -> &mut Array3<f64> {
        &mut self.quartic
    }

    pub fn const_shift_mut(&mut self) -> &mut Vec<f64> {
        &mut self.const_shift
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.drift_self
            .iter()
            .chain(&self.drift_cross)
            .chain(&self.cubic)
            .chain(&self.quartic)
            .chain(&self.const_shift)
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == 0.0
    }

    /// Largest coefficient coupling species `k` to some other species `j != k`.
    pub fn max_cross_species(&self) -> f64 {
        let q = self.species();
        let mut m: f64 = 0.0;
        for k in 0..q {
            for j in 0..q {
                if j != k {
                    m = m
                        .max(self.drift_self[[k, j]].abs())
                        .max(self.drift_cross[[k, j]].abs())
                        .max(self.cubic[[k, j]].abs());
                }
                for i in 0..q {
                    if j != k || i != k {
                        m = m.max(self.quartic[[k, j, i]].abs());
                    }
                }
            }
        }
        m
    }
}

fn check_dispersion(q: usize, a: &DispersionMatrix) -> Result<()> {
    if a.species() != q {
        return Err(Error::Shape(format!("{} dispersion coefficients for {} species", a.species(), q)));
    }
    for k in 0..q {
        if a[k] == 0.0 {
            return Err(Error::ZeroDispersion { species: k });
        }
    }
    Ok(())
}

/// Real nonlinearity of the drift-cubic family after the gauge
/// `sigma_k = -d_k x / (2 A_k)`: the cubic couplings survive unchanged and the
/// drift turns into the constant `+d_k^2 / (4 A_k)`.
pub fn transformed_spec_drift(spec: &DriftCubicSpec, a: &DispersionMatrix) -> Result<TransformedSpec> {
    let q = spec.species();
    check_dispersion(q, a)?;
    let mut t = TransformedSpec::zeros(q);
    for k in 0..q {
        for j in 0..q {
            t.cubic[[k, j]] = if j == k { -spec.gamma()[k] } else { -2.0 * spec.gamma()[j] };
        }
        let d = spec.drift()[k];
        t.const_shift[k] = d * d / (4.0 * a[k]);
    }
    Ok(t)
}

/// Real nonlinearity of the derivative family after the gauge
/// `sigma_k = (1/A_k) sum_j delta_kj integral rho_j`.
pub fn transformed_spec_derivative(spec: &DerivativeSpec, a: &DispersionMatrix) -> Result<TransformedSpec> {
    let q = spec.species();
    check_dispersion(q, a)?;
    let (beta, gamma, delta, lambda) = (spec.beta(), spec.gamma(), spec.delta(), spec.lambda());
    let mut t = TransformedSpec::zeros(q);
    for k in 0..q {
        for j in 0..q {
            t.drift_self[[k, j]] = beta[[k, j]] + 2.0 * delta[[k, j]];
            t.drift_cross[[k, j]] = gamma[[k, j]] - 2.0 * (a[j] / a[k]) * delta[[k, j]];
            for i in 0..q {
                t.quartic[[k, j, i]] = -(delta[[k, j]] * (delta[[k, i]] + beta[[k, i]]) / a[k]
                    + gamma[[k, j]] * delta[[j, i]] / a[j]
                    - lambda[[k, j, i]]);
            }
        }
    }
    Ok(t)
}

/// Coefficient form of the transformed nonlinearity for any supported spec.
pub fn transformed_spec(spec: &NonlinearitySpec, a: &DispersionMatrix) -> Result<TransformedSpec> {
    match spec {
        NonlinearitySpec::Linear { species } => {
            check_dispersion(*species, a)?;
            Ok(TransformedSpec::zeros(*species))
        }
        NonlinearitySpec::DriftCubic(s) => transformed_spec_drift(s, a),
        NonlinearitySpec::Derivative(s) => transformed_spec_derivative(s, a),
        NonlinearitySpec::RealCoefficient(t) => {
            check_dispersion(t.species(), a)?;
            Ok(t.clone())
        }
    }
}

/// Direct evaluation of the transformed nonlinearity
///
/// `R_k = W_k - A_k (sigma_k')^2 + J_k sigma_k' / rho_k + d sigma_k / dt`
///
/// on the transformed state, with `W_k` evaluated on the original phases
/// `S_k = S_phi_k - sigma_k`. The time derivative of the generator is
/// obtained from the continuity equation,
/// `d sigma_k/dt = -(1/A_k) sum_j delta_kj (J_j(x) - J_j(x_anchor))`, for the
/// derivative family and is zero otherwise.
pub fn eval_r_numeric(
    spec: &NonlinearitySpec,
    h_phi: &HydroFields,
    gen: &GaugeGenerator,
    a: &DispersionMatrix,
    current: &Array2<f64>,
) -> Result<Array2<f64>> {
    let q = h_phi.species();
    spec.check_species(q)?;
    check_dispersion(q, a)?;
    let n = h_phi.grid().n_points();
    if gen.species() != q || current.dim() != (q, n) {
        return Err(Error::Shape("generator or current shape disagrees with fields".into()));
    }
    let mut g = HydroGradients::from_hydro(h_phi)?;
    let sigma_x = (0..q).map(|k| gen.gradient(k)).collect::<Result<Vec<_>>>()?;
    for k in 0..q {
        for i in 0..n {
            g.dphase[[k, i]] -= sigma_x[k][i];
        }
    }
    let mut r = real_part(spec, &g);
    let anchor = gen.anchor();
    for k in 0..q {
        for i in 0..n {
            let sx = sigma_x[k][i];
            if sx != 0.0 {
                let rho = g.rho[[k, i]];
                if rho <= 0.0 || g.vacuum[[k, i]] {
                    return Err(Error::Vacuum { species: k });
                }
                r[[k, i]] += -a[k] * sx * sx + current[[k, i]] * sx / rho;
            }
            if let NonlinearitySpec::Derivative(s) = spec {
                let dt_sigma: f64 = (0..q)
                    .map(|j| s.delta()[[k, j]] * (current[[j, i]] - current[[j, anchor]]))
                    .sum::<f64>()
                    / a[k];
                r[[k, i]] -= dt_sigma;
            }
        }
    }
    Ok(r)
}
