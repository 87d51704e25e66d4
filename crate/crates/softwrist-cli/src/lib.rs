//! Command implementations behind the `softwrist` binary, split out so the
//! integration tests can drive them directly.

pub mod commands;
pub mod config;
