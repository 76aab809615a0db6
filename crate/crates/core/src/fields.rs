//! Complex field sets and their hydrodynamic (density, phase) decomposition.

use std::f64::consts::PI;
use std::ops::Index;

use ndarray::{Array2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Default vacuum floor, relative to each species' maximum density.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-12;

/// Wraps an angle difference into `[-pi, pi]`.
pub(crate) fn wrap_angle(d: f64) -> f64 {
    d - 2.0 * PI * (d / (2.0 * PI)).round()
}

/// `q` complex fields sampled on a common grid, stored species-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFieldSet {
    grid: Grid1D,
    data: Array2<Complex64>,
}

impl ComplexFieldSet {
    pub fn new(grid: Grid1D, data: Array2<Complex64>) -> Result<Self> {
        let (q, n) = data.dim();
        if q == 0 {
            return Err(Error::Shape("at least one species is required".into()));
        }
        if n != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                found: n,
            });
        }
        let data = data.as_standard_layout().into_owned();
        Ok(Self { grid, data })
    }

    pub fn from_rows(grid: Grid1D, rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let q = rows.len();
        let n = grid.n_points();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
        let data = Array2::from_shape_vec((q, n), flat).map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(grid, data)
    }

    /// Samples `f(k, x)` for every species `k` and node `x`.
    pub fn from_fn(grid: Grid1D, q: usize, f: impl Fn(usize, f64) -> Complex64) -> Result<Self> {
        let data = Array2::from_shape_fn((q, grid.n_points()), |(k, i)| f(k, grid.x(i)));
        Self::new(grid, data)
    }

    pub fn zeros(grid: Grid1D, q: usize) -> Result<Self> {
        let n = grid.n_points();
        Self::new(grid, Array2::zeros((q, n)))
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn species(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        let n = self.grid.n_points();
        &self.data.as_slice().expect("standard layout")[k * n..(k + 1) * n]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [Complex64] {
        let n = self.grid.n_points();
        &mut self.data.as_slice_mut().expect("standard layout")[k * n..(k + 1) * n]
    }

    pub fn densities(&self) -> Array2<f64> {
        self.data.mapv(|c| c.norm_sqr())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub(crate) fn with_data(&self, data: Array2<Complex64>) -> Self {
        debug_assert_eq!(data.dim(), self.data.dim());
        Self {
            grid: self.grid.clone(),
            data: data.as_standard_layout().into_owned(),
        }
    }
}

/// Diagonal dispersion coefficients `A_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionMatrix(Vec<f64>);

impl DispersionMatrix {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Shape("dispersion matrix needs at least one entry".into()));
        }
        for (k, &a) in entries.iter().enumerate() {
            if a == 0.0 || !a.is_finite() {
                return Err(Error::ZeroDispersion { species: k });
            }
        }
        Ok(Self(entries))
    }

    pub fn uniform(q: usize, a: f64) -> Result<Self> {
        Self::new(vec![a; q])
    }

    pub fn species(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }
}

impl Index<usize> for DispersionMatrix {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Densities `rho_k` and unwrapped phases `S_k`.
///
/// `ramp[k]` is the slope of the non-periodic linear part of `S_k`: the
/// difference `S_k(x) - ramp[k] * (x - x_min)` is grid-periodic. For phases
/// unwrapped from a periodic field the ramp is `2*pi*winding / L`; gauge
/// transformed phases add the generator's ramp.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroFields {
    grid: Grid1D,
    rho: Array2<f64>,
    phase: Array2<f64>,
    ramp: Vec<f64>,
    vacuum: Array2<bool>,
}

impl HydroFields {
    /// Builds hydrodynamic fields, inferring each phase ramp from the
    /// winding across the periodic seam.
    pub fn new(grid: Grid1D, rho: Array2<f64>, phase: Array2<f64>) -> Result<Self> {
        let ramp = phase
            .axis_iter(Axis(0))
            .map(|s| {
                let n = s.len();
                let closing = s[n - 1] + wrap_angle(s[0] - s[n - 1]);
                let winding = ((closing - s[0]) / (2.0 * PI)).round();
                2.0 * PI * winding / grid.length()
            })
            .collect();
        Self::with_ramp(grid, rho, phase, ramp)
    }

    /// Builds hydrodynamic fields with an explicit phase ramp per species.
    pub fn with_ramp(grid: Grid1D, rho: Array2<f64>, phase: Array2<f64>, ramp: Vec<f64>) -> Result<Self> {
        if rho.dim() != phase.dim() {
            return Err(Error::Shape(format!(
                "density shape {:?} differs from phase shape {:?}",
                rho.dim(),
                phase.dim()
            )));
        }
        let (q, n) = rho.dim();
        if q == 0 {
            return Err(Error::Shape("at least one species is required".into()));
        }
        if n != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                found: n,
            });
        }
        if ramp.len() != q {
            return Err(Error::Shape(format!("{} ramps for {} species", ramp.len(), q)));
        }
        for ((k, i), &r) in rho.indexed_iter() {
            if r < 0.0 {
                return Err(Error::NegativeDensity { species: k, node: i });
            }
        }
        Ok(Self {
            grid,
            rho: rho.as_standard_layout().into_owned(),
            phase: phase.as_standard_layout().into_owned(),
            ramp,
            vacuum: Array2::from_elem((q, n), false),
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn species(&self) -> usize {
        self.rho.nrows()
    }

    pub fn rho(&self) -> &Array2<f64> {
        &self.rho
    }

    pub fn phase(&self) -> &Array2<f64> {
        &self.phase
    }

    pub fn ramp(&self) -> &[f64] {
        &self.ramp
    }

    pub fn vacuum(&self) -> &Array2<bool> {
        &self.vacuum
    }

    pub fn has_vacuum(&self, k: usize) -> bool {
        self.vacuum.row(k).iter().any(|&v| v)
    }

    pub fn rho_row(&self, k: usize) -> Vec<f64> {
        self.rho.row(k).to_vec()
    }

    pub fn phase_row(&self, k: usize) -> Vec<f64> {
        self.phase.row(k).to_vec()
    }

    /// Spatial derivative of the phase of species `k`, ramp included.
    pub fn phase_gradient(&self, k: usize) -> Result<Vec<f64>> {
        let r = self.ramp[k];
        let x0 = self.grid.x_min();
        let periodic: Vec<f64> = self
            .phase
            .row(k)
            .iter()
            .enumerate()
            .map(|(i, s)| s - r * (self.grid.x(i) - x0))
            .collect();
        let mut d = self.grid.derivative(&periodic)?;
        d.iter_mut().for_each(|v| *v += r);
        Ok(d)
    }

    pub(crate) fn with_phase(&self, phase: Array2<f64>, ramp: Vec<f64>) -> Self {
        Self {
            grid: self.grid.clone(),
            rho: self.rho.clone(),
            phase: phase.as_standard_layout().into_owned(),
            ramp,
            vacuum: self.vacuum.clone(),
        }
    }
}

/// Polar decomposition of `psi` with phase unwrapping along the grid.
///
/// Nodes with `rho < floor * max(rho_k)` are flagged as vacuum; their phase
/// is linearly interpolated from the neighbouring non-vacuum nodes.
pub fn to_hydro(psi: &ComplexFieldSet, floor: f64) -> Result<HydroFields> {
    if !(floor >= 0.0) {
        return Err(Error::InvalidArgument(format!("density floor must be >= 0, got {floor}")));
    }
    let grid = psi.grid().clone();
    let n = grid.n_points();
    let q = psi.species();
    let rho = psi.densities();
    let mut phase = Array2::zeros((q, n));
    let mut vacuum = Array2::from_elem((q, n), false);
    let mut ramp = Vec::with_capacity(q);

    for k in 0..q {
        let row = psi.row(k);
        let max = rho.row(k).iter().cloned().fold(0.0, f64::max);
        let threshold = floor * max;
        let valid: Vec<usize> = (0..n).filter(|&i| max > 0.0 && rho[[k, i]] >= threshold).collect();
        if valid.is_empty() {
            return Err(Error::Vacuum { species: k });
        }
        for i in 0..n {
            vacuum[[k, i]] = max == 0.0 || rho[[k, i]] < threshold;
        }
        let arg: Vec<f64> = row.iter().map(|c| c.arg()).collect();
        let mut s = vec![0.0; n];
        s[valid[0]] = arg[valid[0]];
        for w in valid.windows(2) {
            s[w[1]] = s[w[0]] + wrap_angle(arg[w[1]] - arg[w[0]]);
        }
        let first = valid[0];
        let last = *valid.last().unwrap();
        let closing = s[last] + wrap_angle(arg[first] - arg[last]);
        let winding = ((closing - s[first]) / (2.0 * PI)).round();
        let turn = 2.0 * PI * winding;

        // Interior gaps.
        for w in valid.windows(2) {
            let (a, b) = (w[0], w[1]);
            for i in a + 1..b {
                let t = (i - a) as f64 / (b - a) as f64;
                s[i] = s[a] + t * (s[b] - s[a]);
            }
        }
        // Gap across the periodic seam.
        let span = (first + n - last) as f64;
        let end = s[first] + turn;
        for p in last + 1..first + n {
            let t = (p - last) as f64 / span;
            let value = s[last] + t * (end - s[last]);
            if p < n {
                s[p] = value;
            } else {
                s[p - n] = value - turn;
            }
        }
        phase.row_mut(k).assign(&ndarray::Array1::from(s));
        ramp.push(turn / grid.length());
    }

    Ok(HydroFields {
        grid,
        rho,
        phase,
        ramp,
        vacuum,
    })
}

/// Recombines `psi_k = sqrt(rho_k) exp(i S_k)`.
pub fn from_hydro(h: &HydroFields) -> Result<ComplexFieldSet> {
    for ((k, i), &r) in h.rho.indexed_iter() {
        if r < 0.0 {
            return Err(Error::NegativeDensity { species: k, node: i });
        }
    }
    let data = ndarray::Zip::from(&h.rho)
        .and(&h.phase)
        .map_collect(|&r, &s| Complex64::from_polar(r.sqrt(), s));
    ComplexFieldSet::new(h.grid.clone(), data)
}

/// Norms `N_k = integral of rho_k`.
pub fn norms(h: &HydroFields) -> Vec<f64> {
    h.rho
        .axis_iter(Axis(0))
        .map(|r| r.sum() * h.grid.dx())
        .collect()
}

/// Norms computed straight from the complex fields.
pub fn field_norms(psi: &ComplexFieldSet) -> Vec<f64> {
    (0..psi.species())
        .map(|k| psi.row(k).iter().map(|c| c.norm_sqr()).sum::<f64>() * psi.grid().dx())
        .collect()
}

/// Densities, their derivatives and phase gradients, the inputs of every
/// nonlinearity evaluation.
#[derive(Debug, Clone)]
pub struct HydroGradients {
    pub rho: Array2<f64>,
    pub drho: Array2<f64>,
    pub dphase: Array2<f64>,
    pub vacuum: Array2<bool>,
}

impl HydroGradients {
    pub fn species(&self) -> usize {
        self.rho.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.rho.ncols()
    }

    pub fn from_hydro(h: &HydroFields) -> Result<Self> {
        let (q, n) = h.rho.dim();
        let mut drho = Array2::zeros((q, n));
        let mut dphase = Array2::zeros((q, n));
        for k in 0..q {
            let d = h.grid.derivative(&h.rho_row(k))?;
            drho.row_mut(k).assign(&ndarray::Array1::from(d));
            let s = h.phase_gradient(k)?;
            dphase.row_mut(k).assign(&ndarray::Array1::from(s));
        }
        Ok(Self {
            rho: h.rho.clone(),
            drho,
            dphase,
            vacuum: h.vacuum.clone(),
        })
    }

    /// Builds gradients from fields and their first derivatives without phase
    /// unwrapping: `rho * dS = Im(conj(psi) psi_x)`. Vacuum nodes get a zero
    /// phase gradient.
    pub fn from_fields(psi: &ComplexFieldSet, dpsi: &Array2<Complex64>, floor: f64) -> Result<Self> {
        let grid = psi.grid();
        let rho = psi.densities();
        let (q, n) = rho.dim();
        let mut drho = Array2::zeros((q, n));
        let mut dphase = Array2::zeros((q, n));
        let mut vacuum = Array2::from_elem((q, n), false);
        for k in 0..q {
            let d = grid.derivative(&rho.row(k).to_vec())?;
            drho.row_mut(k).assign(&ndarray::Array1::from(d));
            let max = rho.row(k).iter().cloned().fold(0.0, f64::max);
            let threshold = floor * max;
            for i in 0..n {
                let r = rho[[k, i]];
                if max == 0.0 || r < threshold || r == 0.0 {
                    vacuum[[k, i]] = true;
                } else {
                    dphase[[k, i]] = (psi.data()[[k, i]].conj() * dpsi[[k, i]]).im / r;
                }
            }
        }
        Ok(Self {
            rho,
            drho,
            dphase,
            vacuum,
        })
    }
}
