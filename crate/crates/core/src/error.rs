use thiserror::Error;

/// Errors raised by grid, field, gauge and solver operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain endpoints out of order: x_min = {x_min}, x_max = {x_max}")]
    DomainOrder { x_min: f64, x_max: f64 },

    #[error("grid size {0} is not a power of two >= 8")]
    NotPowerOfTwo(usize),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("anchor node {anchor} out of range for {n_points} points")]
    AnchorOutOfRange { anchor: usize, n_points: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("species {species} is vacuum (density below floor) where the formula divides by it")]
    Vacuum { species: usize },

    #[error("negative density in species {species} at node {node}")]
    NegativeDensity { species: usize, node: usize },

    #[error("zero dispersion coefficient for species {species}")]
    ZeroDispersion { species: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("blow-up detected at t = {t}")]
    BlowUp { t: f64 },

    #[error("time spacing mismatch between states: {0}")]
    SpacingMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gauge ramp of species {species} is not commensurate with the period (winding {winding})")]
    NonPeriodicRamp { species: usize, winding: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
