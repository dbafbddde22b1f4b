//! CSV artifacts with a versioned schema line, and minimal SVG plots.

pub mod artifacts;
pub mod csv;
pub mod plot;

pub use csv::{fmt_num, read_csv, write_csv, Schema, Table};
