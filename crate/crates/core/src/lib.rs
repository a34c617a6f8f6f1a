//! Dimension theory of slices of the Sierpiński gasket by lines of
//! rational slope.
//!
//! Work happens on the right-angle gasket `Λ` (attractor of
//! `F_0 = (x/2, y/2)`, `F_1 = (x/2 + 1/2, y/2)`, `F_2 = (x/2, y/2 + 1/2)`),
//! where the line `y = a + (p/q)·x` is coded by two `(p+q)×(p+q)` 0/1
//! matrices. From them the crate computes typical slice dimensions, the
//! pressure function and the multifractal spectra, and checks the matrix
//! coding against exact geometry.

pub mod enumeration;
pub mod error;
pub mod exactgeom;
pub mod exponents;
pub mod matrixgen;
pub mod measures;
pub mod pressure;
pub mod selftest;
pub mod slicer;

pub use error::{Error, Result};
