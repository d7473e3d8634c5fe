//! Nonlocal calculus on the real line: anti-symmetric kernels, the nonlocal
//! derivative `D_{α,ε}`, its Fourier symbol, spectral antidifferentiation,
//! and ε-convergence experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antiderivative;
pub mod convergence_lab;
pub mod derivative;
pub mod error;
pub mod io;
pub mod kernels;
pub mod quadrature;
pub mod spectral;
pub mod testfns;

pub use error::{Error, Result};
