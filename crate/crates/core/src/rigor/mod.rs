//! Self-validating numerics: interval scalars and matrices, verified
//! Cholesky, verified linear solves and certified eigenvalue bounds.
//!
//! Rounding direction is realized by error-free transformations and
//! one-ulp outward steps, never by changing the floating-point environment,
//! so every function here is safe to call from concurrent threads.

mod cholesky;
mod eigen;
mod interval;
mod matrix;
mod solve;

pub use cholesky::{certify_positive_definite, verified_cholesky};
pub use eigen::{enclose_lambda_max, lambda_max_upper, rayleigh_lower, MAX_INFLATIONS};
pub use interval::{
    add_down, add_up, div_down, div_up, mul_down, mul_up, sqrt_down, sqrt_up, sub_down, sub_up,
    Enclosure, Interval, IntervalError, Mode,
};
pub use matrix::IntervalMatrix;
pub use solve::enclose_solve;

/// Largest `m * n` accepted by the dense rigorous path.
pub const RIGOROUS_DOF_LIMIT: usize = 2000;

/// Relative enclosure width above which reports carry a warning.
pub const WIDTH_WARNING: f64 = 1e-3;
