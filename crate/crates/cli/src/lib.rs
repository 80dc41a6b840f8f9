//! Command-line front end: scenario files in, reports and CSV out.

pub mod app;
pub mod format;
pub mod report;
pub mod scenario_file;
pub mod sweep;
