//! Command-line front end: configuration loading with exhaustive
//! validation, run orchestration, machine-readable artifacts, and probes.

pub mod config;
pub mod export;
pub mod manifest;
pub mod probes;
pub mod run;
