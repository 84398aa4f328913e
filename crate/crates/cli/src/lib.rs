//! Library surface of the `cayley` binary: argument types, run-config
//! resolution, artifact plumbing, and the subcommand implementations.
//!
//! The pipeline mirrors the experimental workflow: `gen` builds a
//! leakage-controlled dataset, `train`/`sweep` fit models, `eval` scores a
//! checkpoint, `probe` measures invariance structure in hidden states,
//! `verify-theorems` checks the constructive theorems numerically, and
//! `audit` re-verifies a dataset's split guarantees. Every subcommand is
//! bit-for-bit deterministic given its resolved configuration; randomness
//! flows from one root seed through named sub-streams.

pub mod artifacts;
pub mod cli;
pub mod commands;
pub mod config;

pub use cli::{Cli, Command};
pub use commands::run;
