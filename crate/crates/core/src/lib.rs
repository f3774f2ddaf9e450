//! Parallel-in-time solvers for linear diffusion and time-fractional
//! subdiffusion, with a modified-Newton extension for semilinear problems.

pub mod bdf;
pub mod cq;
pub mod error;
pub mod fem;
pub mod harness;
pub mod linalg;
pub mod nonlinear;
pub mod paradiag;
pub mod stepper;
pub mod waveform;

pub use error::{Error, Result};
