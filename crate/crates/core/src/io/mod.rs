//! Configuration, field files, checkpoints and run output.

pub mod config;
pub mod fieldfile;
pub mod report;
pub mod run;

pub use config::{law_from_pairs, parse_config, parse_law_table, RunConfig, OUTPUT_DIR_ENV};
pub use fieldfile::{load_field, load_trajectory, save_field, save_trajectory, FieldRecord};
pub use report::{report_dir, RunSummary};
pub use run::{load_checkpoint, run_pipeline, run_twin, save_checkpoint, RunDir, RunOutcome};
