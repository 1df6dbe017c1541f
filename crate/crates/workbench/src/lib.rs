//! File formats, run reports and the `colorcount` command line.

pub mod cli;
pub mod formats;
pub mod report;
