//! Evaluation harness: panel file I/O, experiment orchestration and
//! report emission around `synapse_core`.

pub mod error;
pub mod eval;
pub mod panel_file;
pub mod report;

pub use error::{HarnessError, Result};
