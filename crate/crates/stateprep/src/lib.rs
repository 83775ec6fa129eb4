//! File formats, configuration and the command-line pipeline around
//! `stateprep-core`.

pub mod formats;
pub mod interaction;
pub mod dbcache;
pub mod config;
pub mod pipeline;
pub mod cli;
