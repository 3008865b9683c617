//! Library surface of the polyseries command-line tool: file formats and
//! the command implementations, kept importable so integration tests can
//! drive them directly.

pub mod commands;
pub mod format;
