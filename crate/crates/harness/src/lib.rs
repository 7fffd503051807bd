//! Experiment orchestration for the double-RIS autoencoder simulator:
//! configuration, checkpoints, training runs, attack generation, SER sweeps
//! and their CSV and manifest artifacts.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dump;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod perturbation;
pub mod results;

pub use config::{AttackKind, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use results::ResultRow;
