//! File formats, experiments and subcommands behind the `killed-walk`
//! binary.

pub mod cache;
pub mod commands;
pub mod distfile;
pub mod experiment;
pub mod export;

/// Version stamped into every JSON report.
pub const SCHEMA_VERSION: u32 = 1;
