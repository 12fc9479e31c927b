//! Command-line front end: study configuration, CSV ingestion, pipeline
//! orchestration, and report/scatter emission.

pub mod config;
pub mod ingest;
pub mod output;
pub mod scatter;
pub mod study;
