//! IO, file formats, and command-line pipeline for multi-annotator mask
//! quality control and fusion. The algorithms live in `maskfuse-core`;
//! this crate adds PNG encode/decode, the CSV and TOML document formats,
//! and the stage orchestration behind the `maskfuse` binary.

pub mod error;
pub mod formats;
pub mod pipeline;
pub mod png;
pub mod profiles;

pub use error::PipelineError;
