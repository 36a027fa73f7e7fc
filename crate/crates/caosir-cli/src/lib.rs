//! Configuration, figure presets and machine-readable output for the
//! `caosir` command-line front end.
//!
//! Resolution order for every setting: built-in defaults, then the preset
//! template, then the JSON config file, then command-line flags. Sweeps are
//! deterministic in the seed, and output files carry a comment header with
//! the resolved-configuration hash so reruns can be diffed byte for byte.

pub mod config;
pub mod output;
pub mod run;

pub use config::{ConfigError, OutputFormat, PartialConfig, Preset, RunConfig};
pub use run::{run, RunError, RunOutcome};
