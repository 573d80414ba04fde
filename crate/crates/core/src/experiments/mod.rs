//! Configurable experiment drivers: parameter sweeps over wavenumber, mesh,
//! decomposition and coarse-space selection, emitting CSV rows.

pub mod config;
pub mod output;
pub mod runs;

pub use config::{ExperimentConfig, ExperimentKind, PowerRule, Selection, Width};
pub use output::{write_csv, ResultRow, SCHEMA_VERSION};
pub use runs::{eigenvalue_dump, find_n_min, first_instance, run, stability_constant, ExperimentOutput, Instance};
