//! Simulation and analysis of superconducting-qubit characterization through a
//! millikelvin cryoCMOS RF multiplexer.

pub mod campaign;
pub mod config;
pub mod device;
pub mod error;
pub mod fixtures;
pub mod fit;
pub mod mux;
pub mod noise;
pub mod planner;
pub mod quadrature;
pub mod stats;
pub mod sweep;

pub use error::{Error, Result};
