//! Named single-species members of the derivative family and coefficient
//! generators for the three reductions of the transformed system.

use std::collections::BTreeSet;
use std::fmt;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::fields::DispersionMatrix;
use crate::nonlinearity::DerivativeSpec;

/// Default relative tolerance of [`classify_q1`].
pub const DEFAULT_CLASSIFY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpecialCase {
    Jackiw,
    ChenLeeLiu,
    KaupNewell,
    Generic,
}

impl fmt::Display for SpecialCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Jackiw => "Jackiw",
            Self::ChenLeeLiu => "ChenLeeLiu",
            Self::KaupNewell => "KaupNewell",
            Self::Generic => "Generic",
        };
        f.write_str(s)
    }
}

/// Set of matching special cases. `Generic` only ever appears alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialCaseLabels(BTreeSet<SpecialCase>);

impl SpecialCaseLabels {
    pub fn contains(&self, case: SpecialCase) -> bool {
        self.0.contains(&case)
    }

    pub fn iter(&self) -> impl Iterator<Item = SpecialCase> + '_ {
        self.0.iter().copied()
    }

    pub fn is_generic(&self) -> bool {
        self.0.contains(&SpecialCase::Generic)
    }
}

impl fmt::Display for SpecialCaseLabels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Classifies the single-species derivative family:
/// Jackiw when `delta = lambda = 0`, Chen-Lee-Liu when `4 delta + beta + gamma = 0`
/// and Kaup-Newell when `4 delta + 3 (beta + gamma) = 0`, the last two with
/// `lambda = 0`. The linear conditions are tested relative to
/// `max(|beta|, |gamma|, |delta|, 1)`.
pub fn classify_q1(beta: f64, gamma: f64, delta: f64, lambda: f64, tol: f64) -> SpecialCaseLabels {
    let scale = beta.abs().max(gamma.abs()).max(delta.abs()).max(1.0);
    let no_quartic = lambda.abs() <= tol;
    let mut set = BTreeSet::new();
    if delta.abs() <= tol && no_quartic {
        set.insert(SpecialCase::Jackiw);
    }
    if (4.0 * delta + beta + gamma).abs() <= tol * scale && no_quartic {
        set.insert(SpecialCase::ChenLeeLiu);
    }
    if (4.0 * delta + 3.0 * (beta + gamma)).abs() <= tol * scale && no_quartic {
        set.insert(SpecialCase::KaupNewell);
    }
    if set.is_empty() {
        set.insert(SpecialCase::Generic);
    }
    SpecialCaseLabels(set)
}

fn check_inputs(delta: &Array2<f64>, a: &DispersionMatrix) -> Result<usize> {
    let q = delta.nrows();
    if delta.dim() != (q, q) || q == 0 {
        return Err(Error::Shape(format!("delta has shape {:?}", delta.dim())));
    }
    if a.species() != q {
        return Err(Error::Shape(format!("{} dispersion coefficients for {} species", a.species(), q)));
    }
    for k in 0..q {
        if a[k] == 0.0 {
            return Err(Error::ZeroDispersion { species: k });
        }
    }
    Ok(q)
}

fn gauge_compensating_gamma(delta: &Array2<f64>, a: &DispersionMatrix) -> Array2<f64> {
    let q = delta.nrows();
    Array2::from_shape_fn((q, q), |(k, j)| 2.0 * a[j] * delta[[k, j]] / a[k])
}

/// Coefficients whose transformed system is a set of decoupled linear
/// Schrodinger equations.
pub fn case1_coeffs(delta: &Array2<f64>, a: &DispersionMatrix) -> Result<DerivativeSpec> {
    let q = check_inputs(delta, a)?;
    let beta = delta.mapv(|d| -2.0 * d);
    let gamma = gauge_compensating_gamma(delta, a);
    let lambda = Array3::from_shape_fn((q, q, q), |(k, j, i)| {
        delta[[k, j]] * (2.0 * delta[[j, i]] - delta[[k, i]]) / a[k]
    });
    DerivativeSpec::new(beta, gamma, delta.clone(), lambda)
}

/// Coefficients whose transformed system decouples into Jackiw-like
/// equations `i phi_t + A phi_xx + eta_k J_k phi = 0`. Returns the spec and
/// `eta_k = (beta_kk + 2 delta_kk) / (2 A_k)`.
pub fn case2_coeffs(delta: &Array2<f64>, beta_diag: &[f64], a: &DispersionMatrix) -> Result<(DerivativeSpec, Vec<f64>)> {
    let q = check_inputs(delta, a)?;
    if beta_diag.len() != q {
        return Err(Error::Shape(format!("{} diagonal beta entries for {} species", beta_diag.len(), q)));
    }
    let beta = Array2::from_shape_fn((q, q), |(k, j)| if k == j { beta_diag[k] } else { -2.0 * delta[[k, j]] });
    let gamma = gauge_compensating_gamma(delta, a);
    let lambda = Array3::from_shape_fn((q, q, q), |(k, j, i)| {
        let d = |r: usize, c: usize| delta[[r, c]];
        match (j == k, i == k) {
            (true, true) => d(k, k) * (beta[[k, k]] + 3.0 * d(k, k)) / a[k],
            (false, true) => d(k, j) * (beta[[k, k]] + d(k, k) + 2.0 * d(j, k)) / a[k],
            (true, false) => d(k, k) * d(k, i) / a[k],
            (false, false) => d(k, j) * (2.0 * d(j, i) - d(k, i)) / a[k],
        }
    });
    let eta = (0..q).map(|k| (beta[[k, k]] + 2.0 * delta[[k, k]]) / (2.0 * a[k])).collect();
    Ok((DerivativeSpec::new(beta, gamma, delta.clone(), lambda)?, eta))
}

/// Coefficients whose transformed system couples species only through the
/// currents, `i phi_t + A phi_xx + sum_j eta_kj J_j phi = 0`. Returns the spec
/// and `eta_kj = (gamma_kj - 2 A_j delta_kj / A_k) / (2 A_j)`.
pub fn case3_coeffs(delta: &Array2<f64>, gamma: &Array2<f64>, a: &DispersionMatrix) -> Result<(DerivativeSpec, Array2<f64>)> {
    let q = check_inputs(delta, a)?;
    if gamma.dim() != (q, q) {
        return Err(Error::Shape(format!("gamma has shape {:?}", gamma.dim())));
    }
    let beta = delta.mapv(|d| -2.0 * d);
    let lambda = Array3::from_shape_fn((q, q, q), |(k, j, i)| {
        gamma[[k, j]] * delta[[j, i]] / a[j] - delta[[k, j]] * delta[[k, i]] / a[k]
    });
    let eta = Array2::from_shape_fn((q, q), |(k, j)| (gamma[[k, j]] - 2.0 * a[j] * delta[[k, j]] / a[k]) / (2.0 * a[j]));
    Ok((DerivativeSpec::new(beta, gamma.clone(), delta.clone(), lambda)?, eta))
}
