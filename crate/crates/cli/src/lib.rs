//! Library side of the `ptladder` command: configuration, experiment drivers
//! and output writers.

pub mod config;
pub mod experiments;
pub mod output;
