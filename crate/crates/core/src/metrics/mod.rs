//! Per-text and per-group metrics.

pub mod lexical;
pub mod psych;
pub mod semantic;
pub mod theme;
