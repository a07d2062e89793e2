//! File formats, corpus handling and command implementations for the
//! `speechcmd` keyword-spotting toolkit. The numeric work lives in
//! `speechcmd_core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod features;
pub mod manifest_csv;
pub mod ppm;
pub mod predictions;
pub mod scft;
pub mod synth;

pub use config::ToolkitConfig;
pub use error::{Error, Result};
pub use speechcmd_core as core;
