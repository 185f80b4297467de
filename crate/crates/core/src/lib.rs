pub mod dataio;
pub mod eda;
pub mod error;
pub mod linalg;
pub mod models;
pub mod pipeline;
pub mod report;
pub mod scoring;
pub mod select;
pub mod special;
pub mod synth;

pub use error::{Error, Result};

/// Version stamped into artifacts and reports.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
