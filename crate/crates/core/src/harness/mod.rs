//! Evaluation, scripted baseline, experiment runs and the command line.

pub mod cli;
pub mod eval;
pub mod experiment;
pub mod scripted;
pub mod trajectory;
