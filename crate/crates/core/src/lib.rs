//! Coupled nonlinear Schrodinger equations with complex nonlinearities and
//! the gauge transformation that makes their nonlinearity real.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: periodic 1-D grid with spectral operators;
//! * [`fields`]: complex fields and their (density, phase) form;
//! * [`nonlinearity`]: the supported coefficient families;
//! * [`gauge`]: generators, the transformation and transformed coefficients;
//! * [`classify`]: named special cases and reduction coefficient sets;
//! * [`solver`]: time evolution and conservation diagnostics;
//! * [`experiment`]: end-to-end gauge equivalence and convergence runs.

pub mod classify;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod gauge;
pub mod grid;
pub mod nonlinearity;
pub mod solver;

pub use error::{Error, Result};
pub use fields::{ComplexFieldSet, DispersionMatrix, HydroFields};
pub use grid::Grid1D;
pub use nonlinearity::{DerivativeSpec, DriftCubicSpec, NonlinearitySpec};
