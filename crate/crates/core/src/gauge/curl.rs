//! Two-dimensional feasibility check `curl(F / rho) = 0` for the generator.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Tensor-product grid on `[x_min, x_max) x [y_min, y_max)`; arrays are
/// indexed `[ix, iy]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        if nx < 5 || ny < 5 {
            return Err(Error::Shape(format!("2-D grid needs at least 5 nodes per axis, got {nx} x {ny}")));
        }
        if !(x.1 > x.0) {
            return Err(Error::DomainOrder { x_min: x.0, x_max: x.1 });
        }
        if !(y.1 > y.0) {
            return Err(Error::DomainOrder { x_min: y.0, x_max: y.1 });
        }
        Ok(Self {
            nx,
            ny,
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.dy()
    }

    /// Samples `f(x, y)` on the grid.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn((self.nx, self.ny), |(i, j)| f(self.x(i), self.y(j)))
    }
}

/// Fourth-order finite differences with one-sided closures at both ends.
/// Periodicity is not assumed, so fields carrying a linear ramp are
/// differentiated exactly.
fn derivative_fd4(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    let c = 1.0 / (12.0 * h);
    d[0] = c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
    d[1] = c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
    for i in 2..n - 2 {
        d[i] = c * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
    }
    d[n - 2] = -c * (-3.0 * f[n - 1] - 10.0 * f[n - 2] + 18.0 * f[n - 3] - 6.0 * f[n - 4] + f[n - 5]);
    d[n - 1] = -c * (-25.0 * f[n - 1] + 48.0 * f[n - 2] - 36.0 * f[n - 3] + 16.0 * f[n - 4] - 3.0 * f[n - 5]);
    d
}

fn derivative_along(f: &Array2<f64>, axis: Axis, h: f64) -> Array2<f64> {
    let mut out = Array2::zeros(f.dim());
    for (lane, mut target) in f.lanes(axis).into_iter().zip(out.lanes_mut(axis)) {
        let d = derivative_fd4(&lane.to_vec(), h);
        for (t, v) in target.iter_mut().zip(d) {
            *t = v;
        }
    }
    out
}

/// `sup |d/dx (F_y / rho) - d/dy (F_x / rho)|`; a gauge generator exists
/// only where this vanishes.
pub fn curl_residual_2d(fx: &Array2<f64>, fy: &Array2<f64>, rho: &Array2<f64>, grid: &Grid2D) -> Result<f64> {
    let dim = (grid.nx, grid.ny);
    for (name, a) in [("Fx", fx), ("Fy", fy), ("rho", rho)] {
        if a.dim() != dim {
            return Err(Error::Shape(format!("{name} has shape {:?}, grid is {dim:?}", a.dim())));
        }
    }
    if rho.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Vacuum { species: 0 });
    }
    let ux = fx / rho;
    let uy = fy / rho;
    let duy_dx = derivative_along(&uy, Axis(0), grid.dx());
    let dux_dy = derivative_along(&ux, Axis(1), grid.dy());
    Ok((&duy_dx - &dux_dy).iter().map(|v| v.abs()).fold(0.0, f64::max))
}
