//! Floating-point kernels: K-Bessel functions, complex least squares and
//! sample-point generation. All arithmetic is IEEE binary64.

mod bessel;
mod linalg;
mod quad;
mod sample;

use thiserror::Error;

pub use bessel::{bessel_k, bessel_k_scaled, bessel_k_scaled_seq};
pub use linalg::{lstsq_solve, lstsq_solve_report, ComplexMatrix, LstsqReport};
pub use quad::{composite_nodes, gauss_legendre};
pub use sample::{sample_points, SampleMode, SampleSpec, Uniform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Gram matrix is numerically singular (condition estimate {condition:.3e})")]
    Singular { condition: f64 },
    #[error("non-finite input")]
    NonFinite,
}
