//! Command-line front end: the `shiftdrift-spec v1` document format and
//! deterministic report rendering over the core pipelines.

pub mod report;
pub mod spec;
