//! Error type shared across the crate.

use crate::fitting::FitReport;
use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, GamowError>;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum GamowError {
    /// Pole parameters violate Gamma > 0 or order >= 1.
    #[error("invalid pole: {0}")]
    InvalidPole(String),

    /// Vector or matrix dimensions do not match the pole order.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Semigroup evolution requested for t < 0; the evolution is only
    /// defined on t >= 0.
    #[error("arrow-of-time violation: evolution requires t >= 0, got t = {t}")]
    ArrowOfTimeViolation {
        /// The offending time.
        t: f64,
    },

    /// A chain label or density index is outside 0..order.
    #[error("index {index} out of range (must be < {bound})")]
    IndexOutOfRange {
        /// Requested index.
        index: usize,
        /// Exclusive upper bound.
        bound: usize,
    },

    /// A time grid with zero samples.
    #[error("time grid is empty")]
    EmptyGrid,

    /// A sampling grid whose bounds or point count make no sense.
    #[error("bad grid: {0}")]
    BadGrid(String),

    /// A matrix entry or result overflowed to inf/NaN.
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    /// Evaluation point coincides with a pole position.
    #[error("divergent point: |E - z| below 1e-300 at E = {e}")]
    DivergentPoint {
        /// The evaluation energy.
        e: f64,
    },

    /// More line-shape weights than the pole order allows.
    #[error("weight vector of length {weights} exceeds pole order {order}")]
    WeightLengthMismatch {
        /// Number of weights supplied.
        weights: usize,
        /// Pole order.
        order: usize,
    },

    /// A sampled series whose abscissae are not strictly increasing or whose
    /// columns disagree in length.
    #[error("bad series: {0}")]
    BadSeries(String),

    /// Fit input contains no usable signal (all values below 1e-12).
    #[error("no signal: all intensities below 1e-12")]
    NoSignal,

    /// Fewer data samples than free real parameters.
    #[error("insufficient data: {samples} samples for {params} parameters")]
    InsufficientData {
        /// Number of data samples.
        samples: usize,
        /// Number of free real parameters.
        params: usize,
    },

    /// Levenberg-Marquardt ran out of iterations with the gradient still
    /// above tolerance. Carries the last report for diagnostics.
    #[error("fit did not converge after {iterations} iterations (|grad| = {gradient_norm:.3e})")]
    NonConvergence {
        /// Iterations performed.
        iterations: usize,
        /// Max-norm of the gradient at exit.
        gradient_norm: f64,
        /// Best model found so far, for diagnostics.
        report: Box<FitReport>,
    },

    /// Normal equations stayed singular or non-finite beyond damping repair.
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    /// Order selection found no converging candidate order.
    #[error("all candidate orders failed to fit")]
    AllFitsFailed,

    /// Exact integer arithmetic exceeded the representable range.
    #[error("integer overflow: {0}")]
    Overflow(String),

    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
