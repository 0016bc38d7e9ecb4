//! Library side of the `hslab` command: configuration, suites and reports.

pub mod config;
pub mod report;
pub mod suites;
