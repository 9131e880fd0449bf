//! Benchmark harness for the `dsa-core` optimizers: presets, deterministic
//! runs with CSV telemetry, fine-tuning, ablations, sweeps and SVG plots.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fetch;
pub mod plot;
pub mod presets;
pub mod records;
pub mod run;

pub use config::{OptimizerId, Overrides, ProblemKind, RunConfig};
pub use error::{BenchError, Result};
pub use run::{execute, execute_all, write_outputs, RunOutput, Summary};
