//! Batch runner for s-number experiments.
//!
//! `snum run` executes a JSON experiment spec and writes one table per
//! computation plus a run manifest; `snum validate` checks a spec without
//! running it; `snum fixtures regen` recomputes the regression fixtures.

pub mod error;
pub mod regen;
pub mod run;
pub mod script;
pub mod spec;

pub use error::CliError;
pub use run::{run, Manifest, RunOptions};
pub use spec::{ExperimentSpec, SPEC_VERSION};
