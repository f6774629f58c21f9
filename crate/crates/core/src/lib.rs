//! Tomographic-probability toolkit for muon and muonium spin states.
//!
//! Spin states are described by measurable probability distributions
//! (tomograms) instead of density matrices. The crate computes and inverts
//! tomograms, evolves muonium-family systems, detects entanglement directly
//! from tomograms, and bridges to muon spin rotation histograms.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod musr;
pub mod reconstruction;
pub mod spin;
pub mod state;
pub mod two_spin;

pub use error::{Error, Result};
pub use exec::Exec;
pub use linalg::{ComplexMatrix, SubsystemDims, Subsystem, C64};
pub use spin::{Direction, QuadratureGrid, Spin};
pub use state::DensityMatrix;
