//! Command-line front end: JSON documents in, reports out.

pub mod commands;
pub mod document;
