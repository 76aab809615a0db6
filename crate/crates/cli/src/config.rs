//! Run configuration: a TOML document with nested sections.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use cnlse_core::classify::{case1_coeffs, case2_coeffs, case3_coeffs};
use cnlse_core::fields::{ComplexFieldSet, DispersionMatrix};
use cnlse_core::{DerivativeSpec, DriftCubicSpec, Grid1D, NonlinearitySpec};
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for randomly drawn initial modes.
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    pub system: SystemConfig,
    pub nonlinearity: NonlinearityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    pub time: TimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    #[serde(default)]
    pub x_min: f64,
    #[serde(default = "two_pi")]
    pub x_max: f64,
}

fn two_pi() -> f64 {
    2.0 * PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub species: usize,
    /// Dispersion coefficients `A_k`.
    #[serde(rename = "A")]
    pub a: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    Linear,
    DriftCubic {
        drift: Vec<f64>,
        cubic: Vec<f64>,
    },
    /// Unset tables default to zero.
    Derivative {
        #[serde(default)]
        beta: Vec<Vec<f64>>,
        #[serde(default)]
        gamma: Vec<Vec<f64>>,
        #[serde(default)]
        delta: Vec<Vec<f64>>,
        #[serde(default)]
        lambda: Vec<Vec<Vec<f64>>>,
    },
    Case1 {
        delta: Vec<Vec<f64>>,
    },
    Case2 {
        delta: Vec<Vec<f64>>,
        beta_diag: Vec<f64>,
    },
    Case3 {
        delta: Vec<Vec<f64>>,
        gamma: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Multiplies every species amplitude.
    #[serde(default = "one")]
    pub scale: f64,
    pub species: Vec<SpeciesInit>,
}

fn one() -> f64 {
    1.0
}

/// One species: the sum of a constant background, Fourier modes, a
/// Gaussian bump and seeded random modes, whichever are given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesInit {
    #[serde(default)]
    pub background: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<Gaussian>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomModes>,
}

/// `(re + i im) exp(2 pi i k (x - x_min) / L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// `amplitude exp(-d^2 / (2 width^2)) exp(i wavenumber x)` with `d` the
/// periodic distance to `center`; `wavenumber` must be an integer multiple
/// of `2 pi / L` for a smooth periodic field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gaussian {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub wavenumber: f64,
}

/// Modes `1..=modes` in each direction with complex amplitudes uniform in
/// `[-amplitude, amplitude]`, drawn from the config seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomModes {
    pub modes: u32,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one_usize")]
    pub sample_every: usize,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Snapshots {
    None,
    /// Initial and final states.
    #[default]
    Ends,
    /// Every diagnostics sample.
    Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub snapshots: Snapshots,
}

fn default_dir() -> PathBuf {
    PathBuf::from("output")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            snapshots: Snapshots::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub anchor: usize,
    /// Deliberate change of one transformed coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb: Option<Perturbation>,
}

fn default_tolerance() -> f64 {
    1e-6
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            anchor: 0,
            perturb: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    /// One of `drift_self`, `drift_cross`, `cubic`, `quartic`, `const_shift`.
    pub entry: String,
    pub index: Vec<usize>,
    pub by: f64,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::config(e.message().trim(), key_of(&e)))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_value(value: toml::Value) -> Result<Self, CliError> {
        let config: Self = value.try_into().map_err(|e: toml::de::Error| CliError::config(e.message().trim(), None))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_toml_str(&read_config(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let q = self.system.species;
        if q == 0 {
            return Err(CliError::config_key("system.species", "must be at least 1"));
        }
        if self.system.a.len() != q {
            return Err(CliError::config_key(
                "system.A",
                &format!("expected {q} entries (one per species), found {}", self.system.a.len()),
            ));
        }
        if let Some(k) = self.system.a.iter().position(|&a| a == 0.0 || !a.is_finite()) {
            return Err(CliError::config_key(&format!("system.A[{k}]"), "must be finite and non-zero"));
        }
        Grid1D::new(self.grid.n_points, self.grid.x_min, self.grid.x_max)
            .map_err(|e| CliError::config_key("grid", &e.to_string()))?;
        self.validate_nonlinearity(q)?;
        if let Some(init) = &self.initial {
            if init.species.len() != q {
                return Err(CliError::config_key(
                    "initial.species",
                    &format!("expected {q} entries, found {}", init.species.len()),
                ));
            }
            if !init.scale.is_finite() {
                return Err(CliError::config_key("initial.scale", "must be finite"));
            }
            for (k, s) in init.species.iter().enumerate() {
                if let Some(g) = &s.gaussian {
                    if !(g.width > 0.0) {
                        return Err(CliError::config_key(&format!("initial.species[{k}].gaussian.width"), "must be positive"));
                    }
                }
            }
        }
        if !(self.time.dt > 0.0) || !self.time.dt.is_finite() {
            return Err(CliError::config_key("time.dt", "must be positive"));
        }
        if !(self.time.t_end > 0.0) || !self.time.t_end.is_finite() {
            return Err(CliError::config_key("time.t_end", "must be positive"));
        }
        if self.time.sample_every == 0 {
            return Err(CliError::config_key("time.sample_every", "must be at least 1"));
        }
        if !(self.verify.tolerance > 0.0) {
            return Err(CliError::config_key("verify.tolerance", "must be positive"));
        }
        if self.verify.anchor >= self.grid.n_points {
            return Err(CliError::config_key("verify.anchor", "must index a grid node"));
        }
        Ok(())
    }

    fn validate_nonlinearity(&self, q: usize) -> Result<(), CliError> {
        let vector = |key: &str, v: &[f64]| check_len(&format!("nonlinearity.{key}"), v.len(), q);
        let matrix = |key: &str, m: &[Vec<f64>], optional: bool| {
            if optional && m.is_empty() {
                return Ok(());
            }
            check_matrix(&format!("nonlinearity.{key}"), m, q)
        };
        match &self.nonlinearity {
            NonlinearityConfig::Linear => Ok(()),
            NonlinearityConfig::DriftCubic { drift, cubic } => {
                vector("drift", drift)?;
                vector("cubic", cubic)
            }
            NonlinearityConfig::Derivative { beta, gamma, delta, lambda } => {
                matrix("beta", beta, true)?;
                matrix("gamma", gamma, true)?;
                matrix("delta", delta, true)?;
                if !lambda.is_empty() {
                    check_len("nonlinearity.lambda", lambda.len(), q)?;
                    for (k, m) in lambda.iter().enumerate() {
                        check_matrix(&format!("nonlinearity.lambda[{k}]"), m, q)?;
                    }
                }
                Ok(())
            }
            NonlinearityConfig::Case1 { delta } => matrix("delta", delta, false),
            NonlinearityConfig::Case2 { delta, beta_diag } => {
                matrix("delta", delta, false)?;
                vector("beta_diag", beta_diag)
            }
            NonlinearityConfig::Case3 { delta, gamma } => {
                matrix("delta", delta, false)?;
                matrix("gamma", gamma, false)
            }
        }
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D::new(self.grid.n_points, self.grid.x_min, self.grid.x_max).expect("validated grid")
    }

    pub fn dispersion(&self) -> DispersionMatrix {
        DispersionMatrix::new(self.system.a.clone()).expect("validated dispersion")
    }

    /// The original-system nonlinearity; the reduction cases are expanded
    /// into their derivative-family coefficients.
    pub fn spec(&self) -> Result<NonlinearitySpec, CliError> {
        let q = self.system.species;
        let a = self.dispersion();
        let core = |e: cnlse_core::Error| CliError::config_key("nonlinearity", &e.to_string());
        let spec = match &self.nonlinearity {
            NonlinearityConfig::Linear => NonlinearitySpec::Linear { species: q },
            NonlinearityConfig::DriftCubic { drift, cubic } => {
                NonlinearitySpec::DriftCubic(DriftCubicSpec::new(drift.clone(), cubic.clone()).map_err(core)?)
            }
            NonlinearityConfig::Derivative { beta, gamma, delta, lambda } => {
                let lambda = if lambda.is_empty() {
                    Array3::zeros((q, q, q))
                } else {
                    Array3::from_shape_fn((q, q, q), |(k, j, i)| lambda[k][j][i])
                };
                NonlinearitySpec::Derivative(
                    DerivativeSpec::new(to_matrix(beta, q), to_matrix(gamma, q), to_matrix(delta, q), lambda).map_err(core)?,
                )
            }
            NonlinearityConfig::Case1 { delta } => NonlinearitySpec::Derivative(case1_coeffs(&to_matrix(delta, q), &a).map_err(core)?),
            NonlinearityConfig::Case2 { delta, beta_diag } => {
                NonlinearitySpec::Derivative(case2_coeffs(&to_matrix(delta, q), beta_diag, &a).map_err(core)?.0)
            }
            NonlinearityConfig::Case3 { delta, gamma } => {
                NonlinearitySpec::Derivative(case3_coeffs(&to_matrix(delta, q), &to_matrix(gamma, q), &a).map_err(core)?.0)
            }
        };
        Ok(spec)
    }

    pub fn family_name(&self) -> &'static str {
        match self.nonlinearity {
            NonlinearityConfig::Linear => "linear",
            NonlinearityConfig::DriftCubic { .. } => "drift_cubic",
            NonlinearityConfig::Derivative { .. } => "derivative",
            NonlinearityConfig::Case1 { .. } => "case1",
            NonlinearityConfig::Case2 { .. } => "case2",
            NonlinearityConfig::Case3 { .. } => "case3",
        }
    }

    pub fn initial_fields(&self) -> Result<ComplexFieldSet, CliError> {
        let init = self
            .initial
            .as_ref()
            .ok_or_else(|| CliError::config_key("initial", "an initial condition is required"))?;
        let grid = self.grid();
        let length = grid.length();
        let x0 = grid.x_min();
        let mut rows = Vec::with_capacity(init.species.len());
        for (k, s) in init.species.iter().enumerate() {
            let mut random_modes = Vec::new();
            if let Some(r) = &s.random {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(k as u64));
                for m in 1..=r.modes as i64 {
                    for sign in [1, -1] {
                        let c = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)) * r.amplitude;
                        random_modes.push((sign * m, c));
                    }
                }
            }
            let row = grid
                .nodes()
                .into_iter()
                .map(|x| {
                    let mut v = Complex64::new(s.background, 0.0);
                    let phase = |m: i64| Complex64::from_polar(1.0, 2.0 * PI * m as f64 * (x - x0) / length);
                    for mode in &s.modes {
                        v += Complex64::new(mode.re, mode.im) * phase(mode.k);
                    }
                    for (m, c) in &random_modes {
                        v += c * phase(*m);
                    }
                    if let Some(g) = &s.gaussian {
                        let d = (x - g.center).rem_euclid(length);
                        let d = d.min(length - d);
                        v += Complex64::from_polar(g.amplitude * (-0.5 * (d / g.width).powi(2)).exp(), g.wavenumber * x);
                    }
                    v * init.scale
                })
                .collect();
            rows.push(row);
        }
        ComplexFieldSet::from_rows(grid, rows).map_err(|e| CliError::config_key("initial", &e.to_string()))
    }
}

pub fn read_config(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::config(&format!("cannot read {}: {e}", path.display()), None))
}

fn key_of(e: &toml::de::Error) -> Option<String> {
    e.span().map(|s| format!("bytes {}..{}", s.start, s.end))
}

fn check_len(key: &str, found: usize, q: usize) -> Result<(), CliError> {
    if found != q {
        return Err(CliError::config_key(key, &format!("expected {q} entries (one per species), found {found}")));
    }
    Ok(())
}

fn check_matrix(key: &str, m: &[Vec<f64>], q: usize) -> Result<(), CliError> {
    check_len(key, m.len(), q)?;
    for (k, row) in m.iter().enumerate() {
        check_len(&format!("{key}[{k}]"), row.len(), q)?;
    }
    Ok(())
}

fn to_matrix(m: &[Vec<f64>], q: usize) -> Array2<f64> {
    if m.is_empty() {
        Array2::zeros((q, q))
    } else {
        Array2::from_shape_fn((q, q), |(k, j)| m[k][j])
    }
}
