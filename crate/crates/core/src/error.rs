//! Error type shared by all operations in this crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("trivial wave function (all amplitudes zero)")]
    TrivialWaveFunction,

    #[error("non-finite amplitude at flat index {0}")]
    NonFiniteAmplitude(usize),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("derivative order {0} outside supported range [1, 4]")]
    DerivativeOrder(u32),

    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("density is not normalized (sum = {0})")]
    UnnormalizedDensity(f64),

    #[error("density is degenerate (max value {0:.3e})")]
    DegenerateDensity(f64),

    #[error("operation requires dim = {required}, grid has dim = {actual}")]
    DimensionUnsupported { required: usize, actual: usize },

    #[error("eigensolver failed to converge: worst residual {worst:.3e} after {iterations} iterations")]
    EigenConvergence { worst: f64, iterations: usize },

    #[error("time {t} outside frame range [{t0}, {t1}]")]
    TimeOutOfRange { t: f64, t0: f64, t1: f64 },

    #[error("too few frames ({0}); need at least {1}")]
    TooFewFrames(usize, usize),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("invalid flow configuration: {0}")]
    InvalidFlowConfig(String),

    #[error("invalid superposition: {0}")]
    InvalidSuperposition(String),

    #[error("invalid transport measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("density underflow along trajectory at t = {0}")]
    DensityUnderflow(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
