//! Batch front end for the `polydom` binary: problem specs in, JSON reports out.

pub mod commands;
pub mod json;
pub mod spec;

pub use commands::{run, Command, Overrides, Report};
pub use spec::ProblemSpec;
