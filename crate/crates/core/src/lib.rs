//! Simulation of gravitationally induced entanglement between spatially
//! superposed masses: branch phases, dephasing, PPT witnesses, Pauli
//! measurement planning and finite-shot certification statistics.

pub mod config;
pub mod decoherence;
pub mod entanglement;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod linalg;
pub mod pauli;
pub mod scenario;
pub mod state;

pub use error::{Error, Result};
