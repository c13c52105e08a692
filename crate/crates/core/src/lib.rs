//! Simulation and analysis of one-dimensional Rydberg atom arrays.
//!
//! Frequencies are angular (rad/μs) and times are in μs throughout; see
//! [`model::mhz`] for the conversion from cyclic MHz.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod basis;
pub mod config;
pub mod detection;
pub mod error;
pub mod exact;
pub mod hamiltonian;
pub mod krylov;
pub mod model;
pub mod mps;
pub mod observables;
pub mod run;
pub mod seeding;
pub mod spectrum;
pub mod thermal;
pub mod trajectory;
pub mod variational;

pub use error::{Error, Result};
