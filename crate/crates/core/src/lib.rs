//! Incoherent control by the environment.
//!
//! Builds Markovian master-equation generators for a finite-level system
//! driven by a shaped non-equilibrium environment (incoherent radiation or a
//! dilute gas) and searches the environment's occupation-number distribution
//! with a genetic algorithm so that the system's steady state approaches a
//! target density matrix.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distribution;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod gas;
pub mod learning;
pub mod quantum;
pub mod radiation;

pub use error::{Error, Result};
