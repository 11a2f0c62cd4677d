//! Declarative experiments: config files, run manifests, and the CSV
//! artifacts consumed by plotting scripts.

pub mod catalog;
mod config;
mod manifest;
mod output;
pub mod presets;
mod runner;

pub use catalog::{ScanPoint, CATALOG, FIGURE_IDS};
pub use config::{BaseMarket, Calibration, ExperimentConfig, Overrides, ScanConfig, SCHEMA_VERSION};
pub use manifest::{config_hash, CalibrationMapping, RunManifest};
pub use output::write_csv;
pub use runner::{PolicyRun, Runner, TableReport};
