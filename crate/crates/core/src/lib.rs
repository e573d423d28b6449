//! Twisted Rauzy–Veech cocycles: combinatorics of interval exchanges, renormalization,
//! invariant structures, Lyapunov spectra, and spectral cocycles of substitutions.

// Index loops mirror the matrix formulas and often touch two rows of the same buffer.
#![allow(clippy::needless_range_loop)]

pub mod combinatorics;
pub mod error;
pub mod fixtures;
pub mod lattice;
pub mod laurent;
pub mod linalg;
pub mod lyapunov;
pub mod mahler;
pub mod renormalization;
pub mod ring;
pub mod structures;
pub mod substitution;

pub use error::{Error, Result};
