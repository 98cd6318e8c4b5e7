//! Simulation harness for the variational attitude estimator: scenario
//! configuration, the end-to-end driver, CSV/SVG emission and the built-in
//! self-test.

pub mod config;
pub mod csv_out;
pub mod plot;
pub mod runner;
pub mod selftest;
