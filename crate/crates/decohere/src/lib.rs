//! Density-matrix laboratory for the comparative fragility of
//! correlations and coherence in small photonic-qubit registers:
//! state constructors, Gaussian dephasing channels, relative-entropy
//! measures, a relative-entropy-of-entanglement solver, simulated
//! tomography, and a sweep/fit harness.

pub mod channels;
pub mod error;
pub mod harness;
pub mod measures;
pub mod ree;
pub mod states;
pub mod tomo;

pub use error::{Error, Result};
