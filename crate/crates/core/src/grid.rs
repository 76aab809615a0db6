//! Uniform periodic 1-D grid with Fourier spectral operators.
//!
//! Node `i` sits at `x_min + i * dx` with `dx = (x_max - x_min) / n_points`;
//! `x_max` is identified with `x_min`. All operators act on the periodic
//! extension of the sampled data.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Grid1D {
    n_points: usize,
    x_min: f64,
    x_max: f64,
    dx: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("n_points", &self.n_points)
            .field("x_min", &self.x_min)
            .field("x_max", &self.x_max)
            .field("dx", &self.dx)
            .finish()
    }
}

impl PartialEq for Grid1D {
    fn eq(&self, other: &Self) -> bool {
        self.n_points == other.n_points && self.x_min == other.x_min && self.x_max == other.x_max
    }
}

impl Grid1D {
    /// Builds a grid of `n_points` nodes on `[x_min, x_max)`.
    pub fn new(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::DomainOrder { x_min, x_max });
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n_points));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n_points,
            x_min,
            x_max,
            dx: (x_max - x_min) / n_points as f64,
            forward: planner.plan_fft_forward(n_points),
            inverse: planner.plan_fft_inverse(n_points),
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Period of the domain.
    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Largest resolved angular wavenumber, `pi / dx`.
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI / self.dx
    }

    /// Angular wavenumber of FFT bin `m`. The Nyquist bin maps to `+pi/dx`.
    fn wavenumber(&self, m: usize) -> f64 {
        let n = self.n_points as i64;
        let m = m as i64;
        let signed = if m <= n / 2 { m } else { m - n };
        2.0 * std::f64::consts::PI * signed as f64 / self.length()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_points {
            return Err(Error::LengthMismatch {
                expected: self.n_points,
                found: len,
            });
        }
        Ok(())
    }

    fn check_anchor(&self, anchor: usize) -> Result<()> {
        if anchor >= self.n_points {
            return Err(Error::AnchorOutOfRange {
                anchor,
                n_points: self.n_points,
            });
        }
        Ok(())
    }

    /// Forward FFT, multiply bin `m` by `symbol(m)`, inverse FFT (normalised).
    fn apply_symbol(&self, data: &mut [Complex64], symbol: impl Fn(usize) -> Complex64) {
        self.forward.process(data);
        let scale = 1.0 / self.n_points as f64;
        for (m, c) in data.iter_mut().enumerate() {
            *c *= symbol(m) * scale;
        }
        self.inverse.process(data);
    }

    fn first_derivative_symbol(&self, m: usize) -> Complex64 {
        if m == self.n_points / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, self.wavenumber(m))
        }
    }

    /// Spectral first derivative of a complex field.
    pub fn derivative_complex(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(f.len())?;
        let mut data = f.to_vec();
        self.apply_symbol(&mut data, |m| self.first_derivative_symbol(m));
        Ok(data)
    }

    /// Spectral first derivative of a real field. The Nyquist bin is dropped
    /// so the result stays real.
    pub fn derivative(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f.len())?;
        let mut data: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.apply_symbol(&mut data, |m| self.first_derivative_symbol(m));
        Ok(data.into_iter().map(|c| c.re).collect())
    }

    /// Spectral second derivative of a complex field, Nyquist bin included.
    pub fn second_derivative_complex(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(f.len())?;
        let mut data = f.to_vec();
        self.apply_symbol(&mut data, |m| {
            let k = self.wavenumber(m);
            Complex64::new(-k * k, 0.0)
        });
        Ok(data)
    }

    /// Both first and second derivatives from a single forward transform.
    pub fn derivatives_complex(&self, f: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        self.check_len(f.len())?;
        let mut spectrum = f.to_vec();
        self.forward.process(&mut spectrum);
        let scale = 1.0 / self.n_points as f64;
        let mut first = spectrum.clone();
        for (m, (c1, c2)) in first.iter_mut().zip(spectrum.iter_mut()).enumerate() {
            let k = self.wavenumber(m);
            *c1 *= self.first_derivative_symbol(m) * scale;
            *c2 *= -k * k * scale;
        }
        self.inverse.process(&mut first);
        self.inverse.process(&mut spectrum);
        Ok((first, spectrum))
    }

    /// Antiderivative split into its periodic part and the slope of the
    /// secular ramp.
    ///
    /// Returns `(periodic, ramp)` such that the full antiderivative is
    /// `periodic[i] + ramp * (x_i - x_anchor)`, with `periodic[anchor] == 0`
    /// and `ramp == mean(f)`.
    pub fn antiderivative_split(&self, f: &[f64], anchor: usize) -> Result<(Vec<f64>, f64)> {
        self.check_len(f.len())?;
        self.check_anchor(anchor)?;
        let n = self.n_points;
        let mean = f.iter().sum::<f64>() / n as f64;
        let mut data: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.apply_symbol(&mut data, |m| {
            if m == 0 || m == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -1.0 / self.wavenumber(m))
            }
        });
        let offset = data[anchor].re;
        let periodic = data.iter().map(|c| c.re - offset).collect();
        Ok((periodic, mean))
    }

    /// Antiderivative `P` with `P(x_anchor) = 0` and `P' = f` to resolution.
    ///
    /// The result includes the non-periodic ramp `mean(f) * (x - x_anchor)`.
    pub fn antiderivative(&self, f: &[f64], anchor: usize) -> Result<Vec<f64>> {
        let (periodic, ramp) = self.antiderivative_split(f, anchor)?;
        let xa = self.x(anchor);
        Ok(periodic
            .into_iter()
            .enumerate()
            .map(|(i, p)| p + ramp * (self.x(i) - xa))
            .collect())
    }

    /// Periodic (rectangle/trapezoid) quadrature `sum f_i * dx`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(f.iter().sum::<f64>() * self.dx)
    }
}
