//! Command-line front end: `run`, `experiment`, `oracle` and `verify`.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod verify;
