//! Experiment runner and file formats for the `klflow-core` convergence
//! toolkit: flat configs, CSV tables, the five case studies and the
//! property suites behind `klflow verify`.

pub mod config;
pub mod experiments;
pub mod table;
pub mod verify;

pub use config::{Case, ExperimentConfig, Params};
pub use table::Table;
