//! File formats and subcommands of the `hypertess` command-line tool.

pub mod commands;
pub mod error;
pub mod obj;
pub mod scene;
pub mod trace;
