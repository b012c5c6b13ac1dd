//! Configuration, experiment harness and reports behind the `ehm` binary.

pub mod config;
pub mod experiment;
pub mod report;
pub mod verify;

pub use config::{parse_config, AlphaSpec, ConfigError, Format, KPolicy, LabelRange, RunConfig};
pub use experiment::{decay_experiment, fit_decay, run_labels, DecayFit, DecayRun, LabelOutcome};
pub use verify::{verify_suite, Check, VerifyReport, CHECK_IDS};
