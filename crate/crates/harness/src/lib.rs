//! Experiment harness: JSON configuration, seeded sweeps over channels and
//! SNR points, CSV rows and JSON summaries.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{parse_config, parse_config_str, DeltaSpec, ExperimentConfig, ExperimentKind};
pub use error::HarnessError;
pub use experiment::{run_dof_sweep, run_experiment, run_maxmin_sweep, run_power_feasibility, RunOutput};
pub use output::{emit_csv, emit_summary, read_csv, summarize, ResultRow, RowStatus, SchemeLabel, Summary};
