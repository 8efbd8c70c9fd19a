//! Configuration, initial-data presets, result files and the verify battery.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

pub use config::{build_initial, build_preset, parse_config, ConfigError, InitConfig, RunConfig};
pub use output::{emit_outputs, emit_sweep, OutputError, OutputManifest, Verdict};
pub use verify::{emit_verify, verify_battery, VerifyReport};
