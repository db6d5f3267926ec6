//! Library surface of the CLI so integration tests can reuse the command
//! implementations and checkpoint codec directly.

pub mod checkpoint;
pub mod commands;
pub mod config;
