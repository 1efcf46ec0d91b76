//! Exact optimal quantization (n-means) for discrete one-dimensional
//! distributions.
//!
//! Finds the codebooks of n points minimizing the expected squared
//! distance to the nearest code point, by dynamic programming over
//! contiguous cells. Finite supports with rational data solve in exact
//! rational arithmetic; the built-in infinite families solve with a
//! final analytic tail cell, exactly where the tail sums are rational
//! and in precision-tracked floats otherwise. An inverse-design module
//! recovers the parameter range of geometric probability vectors for
//! which a prescribed codebook family is optimal at every level.

pub mod distribution;
pub mod golden;
pub mod interval;
pub mod inverse;
pub mod scalar;
pub mod solver;
pub mod spec_io;

pub use distribution::{
    make_finite, make_finite_normalized, DiscreteDistribution, DistError, FiniteDistribution,
    TailFamily, TailMoments,
};
pub use interval::{PrefixSumCache, RangeEnd, StatsError};
pub use inverse::{
    feasible_x, verify_conjecture, ConjectureReport, FeasibleInterval, InverseError,
    InverseFamily,
};
pub use scalar::{Scalar, DEFAULT_PRECISION};
pub use solver::{
    count_optima, distortion_of, lloyd_descent, solve, solve_infinite, solve_infinite_capped,
    Codebook, Mode, QuantizationResult, SolveError,
};
