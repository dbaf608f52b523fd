//! Pseudo-difference operators on the integer lattice `Z^n`.
//!
//! The lattice is realised as the truncated cyclic box `{-N..N}^n` with
//! `M = 2N + 1` points per axis, paired with the uniform torus grid of the
//! same size. Symbols `sigma(k, x)` live on the product of the two.

mod error;
pub mod analysis;
pub mod calculus;
pub mod cli;
pub mod lattice_fourier;
pub mod quantize;
pub mod solver;
pub mod symbol;

pub use error::{PdzError, Result};
