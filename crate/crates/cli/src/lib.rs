//! I/O surface for the topological EEG pipeline: study manifests and signal
//! files, stage archives, the pipeline configuration format, SVG figures,
//! and the stage driver behind the `eegtopo` binary.

pub mod archive;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod plot;

pub use config::PipelineConfig;
pub use error::CliError;
