//! Quantitative spectral perturbation bounds for compact operators, evaluated
//! on finite matrices.

pub mod asymptotics;
pub mod bounds;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod perturbation;
pub mod pseudospectra;
pub mod report;
pub mod series;
pub mod weights;

pub use error::{Error, ErrorClass, Result};
