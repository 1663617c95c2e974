//! Experiment configuration, Monte Carlo pipeline and run records.

pub mod config;
pub mod pipeline;
pub mod record;
pub mod runs;

pub use config::{config_schema, ErasureDetection, ExperimentConfig, ExperimentKind, FidelityPath, SettingGrid};
pub use pipeline::{PointOutcome, Series, SeriesKind};
pub use record::{write_record, Cell, OutputFormat, Provenance, RunRecord, Table, VERSION};
pub use runs::{exit_code, run};
