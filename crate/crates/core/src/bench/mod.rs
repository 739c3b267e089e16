//! Configured experiments: TOML specs, validation, runs and artifacts.

mod config;
mod run;

pub use config::{
    parse_config, validate_config, ConfigError, ConfigIssue, DiagnosticKind, DiagnosticsSection, ExperimentSpec,
    ModelParams, OutputSection, SchemeSection,
};
pub use run::{execute, persist, run_experiment, run_suite, NamedRate, Results, RunOutcome};
