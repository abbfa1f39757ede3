//! File formats, bundled data and the command-line front end.

pub mod calibration;
pub mod cli;
pub mod config;
pub mod fixtures;
pub mod grid_csv;
pub mod report;
