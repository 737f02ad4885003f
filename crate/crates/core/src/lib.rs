//! Space-time P1 finite elements for the heat equation `u_t - nu u_xx = f`
//! on `(0, 1) x (0, T)` with homogeneous Dirichlet data in space and a zero
//! initial condition, together with certified enclosures of the discrete
//! stability constants that enter the a priori error bounds.

pub mod assembly;
pub mod banded;
pub mod error;
pub mod estimates;
pub mod mesh;
pub mod norms;
pub mod quadrature;
pub mod rigor;
pub mod solver;

pub use error::{Error, Result};
