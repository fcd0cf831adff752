//! Command-line pipeline around the `auction-risk` estimators: CSV ingest,
//! TOML run configuration and provenance-stamped result files.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod output;
