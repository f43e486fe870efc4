//! Numerical toolkit for norm inflation of the cubic Schrödinger equation on
//! the torus via power-series expansions indexed by ternary trees.

// `!(x >= y)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod construction;
pub mod convolution;
pub mod duhamel;
pub mod error;
pub mod fft;
pub mod lattice;
pub mod nonlinearity;
pub mod oracle;
pub mod registry;
pub mod sum;
pub mod trees;

pub use error::{Error, Result};
pub use lattice::{LatticePoint, NormSpec, SparseSpectrum};
