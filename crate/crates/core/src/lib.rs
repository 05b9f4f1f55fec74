//! Numerical laboratory for zero sets of the Gaussian entire function viewed
//! as sampling sets for Fock spaces.
//!
//! The deterministic kernels are generic over [`Scalar`] (`f32`/`f64`); the
//! random-sample and experiment layers use `f64`.

pub mod assignment;
pub mod conditions;
pub mod error;
pub mod fock;
pub mod gef;
pub mod gfunc;
pub mod harness;
pub mod holes;
pub mod intensity;
pub mod lattice;
pub mod linalg;
pub mod pairs;
pub mod profile;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod separation;
pub mod sigma;
pub mod stats;
pub mod zeros;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Complex64 = num_complex::Complex<f64>;
pub type FockFunction64 = fock::FockFunction<f64>;
pub type FockFunction32 = fock::FockFunction<f32>;
pub type QuadratureSpec64 = fock::QuadratureSpec<f64>;
pub type CMatrix64 = linalg::CMatrix<f64>;
