//! Library half of the `kdv5-report` runner: config parsing, experiment
//! specs, and the per-kind runners. The binary in `main.rs` is a thin CLI
//! over these modules; keeping them in a library lets the integration tests
//! validate shipped config files without launching every experiment.

pub mod config;
pub mod experiment;
