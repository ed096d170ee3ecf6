//! Command-line front end and experiment harness for the winldl solver.

pub mod bench;
pub mod cli;
pub mod config;
pub mod model_io;
pub mod seeding;

pub use cli::{run, Cli};
