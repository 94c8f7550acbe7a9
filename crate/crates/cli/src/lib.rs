//! Library surface behind the `pgpp` binary: experiment configuration,
//! sweep execution, and figure-data emission.

pub mod config;
pub mod experiment;
pub mod figures;

pub use config::{ConfigError, ExperimentConfig, SweepPoint};
pub use experiment::{
    artifact_paths, load_manifest, recompute_metrics, run_experiment, Manifest, RunRecord,
};
pub use figures::emit_figures_data;
