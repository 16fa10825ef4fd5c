//! Library behind the `vsearch` binary. Each `cmd_*` function writes its
//! artifacts under an output directory and returns a summary for printing.

pub mod commands;
pub mod config;
pub mod embedder;
pub mod error;

pub use commands::{
    QueryResult,
    cmd_bench, cmd_build, cmd_ingest, cmd_search, cmd_synth, cmd_tune, BenchReport, BuildReport,
    IngestReport, QueryInput, SearchOutput, SynthOptions, TuneReport,
};
pub use config::{Overrides, RunConfig};
pub use embedder::EmbedderClient;
pub use error::{CliError, Result};
