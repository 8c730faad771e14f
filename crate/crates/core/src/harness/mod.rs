//! Experiment plumbing: configuration, seeding, sweeps, training runs,
//! CSV export and the invariant suite behind the CLI.

mod config;
mod eval;
pub mod seeds;
mod stats;
mod sweep;
mod train;
mod validate;

pub use config::{ChannelKind, ChannelSection, ExperimentConfig, ModelsSection, RunSection, StreamsSection, SweepScheme, TrainingSection};
pub use eval::{constellation_trial, run_trial, FrameResult, ModelSet};
pub use stats::{two_pass, RunningStats};
pub use sweep::{cmd_sweep, eval_streams, records_path, run_sweep, write_sweep, SweepReport, SweepRow, DEFAULT_SWEEP_OUT, SWEEP_HEADER};
pub use train::{artifact, cmd_train, load_models, TrainReport, CONSTELLATION_SYMBOLS, QUANTIZED_INIT};
pub use validate::{cmd_validate, rs_radius_grid, PropertyResult, ValidateOptions, ValidationReport};

use crate::error::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const MISSING_ARTIFACT: i32 = 3;
    pub const VALIDATION: i32 = 4;
    /// Any other runtime failure.
    pub const FAILURE: i32 = 1;
}

/// Exit code for an error surfaced by a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Argument(_) => exit::CONFIG,
        Error::MissingArtifact(_) => exit::MISSING_ARTIFACT,
        _ => exit::FAILURE,
    }
}
