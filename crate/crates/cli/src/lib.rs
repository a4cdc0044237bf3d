//! Harness library behind the `rankbench` binary: experiment drivers,
//! verification suites, and the CLI surface. Exposed as a library so the
//! acceptance tests can drive the same code paths the binary runs.

pub mod app;
pub mod config;
pub mod csvio;
pub mod experiments;
pub mod verifysuite;
