//! Two-qubit Grover search driven by cavity-assisted collisions between
//! Rydberg atoms.
//!
//! - [`linalg`]: dense complex matrices, propagators, overlaps.
//! - [`gates`]: the ideal logical gate layer and the Grover sequence.
//! - [`cavity`]: two atoms plus a truncated cavity mode, exact and
//!   effective collision Hamiltonians.
//! - [`experiment`]: pulse compilation, full runs, sweeps, timing budget.
//! - [`cli`]: command-line front end.

pub mod cavity;
pub mod cli;
pub mod experiment;
pub mod gates;
pub mod linalg;

pub use num_complex::Complex64 as C64;
