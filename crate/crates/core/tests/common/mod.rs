//! Shared state builders for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use cnlse_core::fields::{ComplexFieldSet, HydroFields};
use cnlse_core::Grid1D;
use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn periodic_grid(n: usize) -> Grid1D {
    Grid1D::new(n, 0.0, 2.0 * PI).unwrap()
}

/// Trigonometric polynomial `c0 + sum_m (a_m cos(m x) + b_m sin(m x))` with
/// exact values and derivatives.
#[derive(Debug, Clone)]
pub struct Trig {
    pub c0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Trig {
    pub fn random(rng: &mut ChaCha8Rng, modes: usize, c0: f64, amp: f64) -> Self {
        let mut coef = || rng.gen_range(-amp..amp) / modes as f64;
        let cos = (0..modes).map(|_| coef()).collect();
        let sin = (0..modes).map(|_| coef()).collect();
        Self { c0, cos, sin }
    }

    pub fn value(&self, x: f64) -> f64 {
        let mut v = self.c0;
        for (m, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = (m + 1) as f64;
            v += a * (w * x).cos() + b * (w * x).sin();
        }
        v
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let mut v = 0.0;
        for (m, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = (m + 1) as f64;
            v += w * (-a * (w * x).sin() + b * (w * x).cos());
        }
        v
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let mut v = 0.0;
        for (m, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = (m + 1) as f64;
            v -= w * w * (a * (w * x).cos() + b * (w * x).sin());
        }
        v
    }
}

/// Band-limited hydrodynamic state: density `rho_k` strictly positive, phase
/// `S_k = P_k(x) + w_k x` with integer winding `w_k`.
#[derive(Debug, Clone)]
pub struct SmoothState {
    pub rho: Vec<Trig>,
    pub phase: Vec<Trig>,
    pub winding: Vec<f64>,
}

impl SmoothState {
    /// Mean density `mean`, relative density modulation below one half.
    pub fn random(rng: &mut ChaCha8Rng, q: usize, mean: f64) -> Self {
        let rho = (0..q).map(|_| Trig::random(rng, 3, mean, 0.45 * mean)).collect();
        let phase = (0..q).map(|_| Trig::random(rng, 3, 0.0, 1.0)).collect();
        let winding = (0..q).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
        Self { rho, phase, winding }
    }

    pub fn species(&self) -> usize {
        self.rho.len()
    }

    pub fn rho_at(&self, k: usize, x: f64) -> f64 {
        self.rho[k].value(x)
    }

    pub fn drho_at(&self, k: usize, x: f64) -> f64 {
        self.rho[k].derivative(x)
    }

    pub fn phase_at(&self, k: usize, x: f64) -> f64 {
        self.phase[k].value(x) + self.winding[k] * x
    }

    pub fn dphase_at(&self, k: usize, x: f64) -> f64 {
        self.phase[k].derivative(x) + self.winding[k]
    }

    pub fn sample(&self, grid: &Grid1D, f: impl Fn(usize, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn((self.species(), grid.n_points()), |(k, i)| f(k, grid.x(i)))
    }

    pub fn hydro(&self, grid: &Grid1D) -> HydroFields {
        let rho = self.sample(grid, |k, x| self.rho_at(k, x));
        let phase = self.sample(grid, |k, x| self.phase_at(k, x));
        HydroFields::with_ramp(grid.clone(), rho, phase, self.winding.clone()).unwrap()
    }

    pub fn fields(&self, grid: &Grid1D) -> ComplexFieldSet {
        ComplexFieldSet::from_fn(grid.clone(), self.species(), |k, x| {
            Complex64::from_polar(self.rho_at(k, x).sqrt(), self.phase_at(k, x))
        })
        .unwrap()
    }
}

pub fn sup(a: impl IntoIterator<Item = f64>) -> f64 {
    a.into_iter().map(f64::abs).fold(0.0, f64::max)
}
