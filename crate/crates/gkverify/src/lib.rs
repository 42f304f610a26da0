//! File formats, sampling, reports and the command-line front end for
//! `gkverify-core`.

pub mod cli;
pub mod deffile;
pub mod report;
pub mod sampling;
pub mod suites;
