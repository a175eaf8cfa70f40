use alloc::string::String;
use core::fmt;

/// Errors surfaced by the numerical kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Requested wavelet family is not implemented.
    UnsupportedFamily(String),
    /// The family cannot deliver the requested number of vanishing moments.
    UnachievableMoments {
        requested: usize,
        supported_max: usize,
    },
    /// Coarsest/finest level pair is out of range (e.g. `j0 >= J`).
    LevelRange { j0: i32, grid_level: i32 },
    /// A field does not live on the grid an operation expects.
    GridMismatch {
        expected_nodes: usize,
        got_nodes: usize,
    },
    /// Coefficient table carries the wrong normalization for the operation.
    WrongNormalization { expected: &'static str },
    /// Vanishing moments do not cover the requested smoothness (`r <= s`).
    InsufficientMoments { r: usize, s: f64 },
    /// A scalar or structural argument is outside its documented range.
    InvalidParam(&'static str),
    /// Polygon failed validation (open, self-intersecting, too few vertices).
    InvalidPolygon(&'static str),
    /// No grid node lies inside the domain.
    EmptyMask,
    /// Diffusion matrix is not symmetric positive definite.
    NotSpd,
    /// Conjugate gradients failed to reach the residual target.
    SolverDiverged { iterations: usize, residual: f64 },
    /// Not enough data points (levels, pairs) for a regression.
    TooFewSamples { needed: usize, got: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnsupportedFamily(name) => write!(f, "unsupported wavelet family `{name}`"),
            Error::UnachievableMoments {
                requested,
                supported_max,
            } => write!(
                f,
                "family supports at most {supported_max} vanishing moments, {requested} requested"
            ),
            Error::LevelRange { j0, grid_level } => {
                write!(f, "invalid level range: j0 = {j0}, grid level = {grid_level}")
            }
            Error::GridMismatch {
                expected_nodes,
                got_nodes,
            } => write!(
                f,
                "grid mismatch: expected {expected_nodes} nodes per side, got {got_nodes}"
            ),
            Error::WrongNormalization { expected } => {
                write!(f, "coefficient table must be {expected}-normalized")
            }
            Error::InsufficientMoments { r, s } => {
                write!(f, "basis has r = {r} vanishing moments, needs r > s = {s}")
            }
            Error::InvalidParam(what) => write!(f, "invalid parameter: {what}"),
            Error::InvalidPolygon(why) => write!(f, "invalid polygon: {why}"),
            Error::EmptyMask => write!(f, "domain mask contains no grid nodes"),
            Error::NotSpd => write!(f, "diffusion matrix is not symmetric positive definite"),
            Error::SolverDiverged {
                iterations,
                residual,
            } => write!(
                f,
                "conjugate gradients stalled after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::TooFewSamples { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
        }
    }
}

impl core::error::Error for Error {}
