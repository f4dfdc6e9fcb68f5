//! Batch runner behind the `hspde` binary: configs, manifests, replay.

pub mod config;
pub mod run;

pub use config::{Equation, Experiment, RunConfig};
pub use run::{execute, inspect, replay, resolve_output, RunManifest, RunOutcome};
