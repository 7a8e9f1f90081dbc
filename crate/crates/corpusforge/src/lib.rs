//! IO, configuration and command-line driver for the corpusforge pipeline.

pub mod audit;
pub mod config;
pub mod formats;
pub mod manifest;
pub mod pipeline;
pub mod sparql;
