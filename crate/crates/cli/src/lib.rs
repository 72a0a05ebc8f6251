//! Verification runs, sampling jobs and reports over the `heightfrag` library.
//!
//! Each `cmd_*` function takes a resolved [`RunConfig`]; the binary only
//! parses flags and maps results to exit codes.

pub mod asymptotics;
pub mod config;
pub mod error;
pub mod estimate;
pub mod report;
pub mod sample;
pub mod verify;

pub use asymptotics::cmd_asymptotics;
pub use config::{RunConfig, OUT_ENV};
pub use error::CliError;
pub use estimate::cmd_estimate;
pub use report::{Record, Report, Status};
pub use sample::{cmd_sample, SampleKind};
pub use verify::cmd_verify;
