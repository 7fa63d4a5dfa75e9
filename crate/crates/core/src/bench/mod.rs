//! Experiment harness: instance synthesis, data loading, configured runs and
//! report emission.

pub mod check;
pub mod config;
pub mod market;
pub mod run;
pub mod synth;
