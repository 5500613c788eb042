//! The ADMM solver for the coupled self-expressive decompositions, its
//! configuration, state, and iteration trace.

mod config;
mod engine;
mod state;

pub use config::{SolverConfig, Variant};
pub use engine::{initialize, run, AdmmEngine};
pub use state::{residuals, IterationRecord, IterationTrace, SolverState};
