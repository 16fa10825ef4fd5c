use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vsearch_cli::{
    cmd_bench, cmd_build, cmd_ingest, cmd_search, cmd_synth, cmd_tune, CliError, Overrides,
    QueryInput, RunConfig, SynthOptions,
};
use vsearch_core::Backend;

#[derive(Parser)]
#[command(name = "vsearch", version, about = "Embedding search: ingest, index, query and tune")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for machine-readable outputs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// flat, ivf, hnsw or hybrid.
    #[arg(long, global = true)]
    backend: Option<Backend>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    threshold: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the embeddings and catalog and write a compacted copy.
    Ingest,
    /// Build the configured index and write snapshots.
    Build,
    /// Query with vectors from a file or with texts sent to the embedder.
    Search {
        #[arg(long, conflicts_with = "text", required_unless_present = "text")]
        vectors: Option<PathBuf>,
        #[arg(long)]
        text: Vec<String>,
        /// Treat all query vectors as one multi-vector query.
        #[arg(long)]
        multi: bool,
        /// Load snapshots from this directory instead of building.
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Grid search over dims, thresholds, models and index types.
    Tune {
        /// Use only the first N documents as queries.
        #[arg(long)]
        max_queries: Option<usize>,
    },
    /// Query-time distribution and recall against the exact scan.
    Bench {
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        max_queries: usize,
    },
    /// Generate a labelled clustered corpus with a matching config.
    Synth {
        #[arg(long, default_value_t = 1000)]
        docs: usize,
        #[arg(long, default_value_t = 384)]
        dim: usize,
        #[arg(long, default_value_t = 8)]
        clusters: usize,
        #[arg(long, default_value_t = 0.3)]
        spread: f64,
        #[arg(long, value_delimiter = ',', default_value = "synthetic")]
        models: Vec<String>,
    },
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(text: impl std::fmt::Display) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config is required for this command".into()))?;
    let mut cfg = RunConfig::load(path)?;
    cfg.apply(&Overrides {
        seed: cli.seed,
        backend: cli.backend,
        k: cli.k,
        threshold: cli.threshold,
    })?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = cli.out.as_path();
    match &cli.command {
        Command::Ingest => emit(cmd_ingest(&config(&cli)?, out)?),
        Command::Build => emit(cmd_build(&config(&cli)?, out)?),
        Command::Search {
            vectors,
            text,
            multi,
            index,
        } => {
            let input = match vectors {
                Some(p) => QueryInput::Vectors(p.clone()),
                None => QueryInput::Texts(text.clone()),
            };
            let res = cmd_search(&config(&cli)?, out, &input, *multi, index.as_deref())?;
            emit(res);
        }
        Command::Tune { max_queries } => {
            let report = cmd_tune(&config(&cli)?, out, *max_queries)?;
            emit(&report);
            emit(format!("tables: {} {}", report.csv_path.display(), report.json_path.display()));
        }
        Command::Bench {
            queries,
            max_queries,
        } => emit(cmd_bench(&config(&cli)?, out, queries.as_deref(), *max_queries)?),
        Command::Synth {
            docs,
            dim,
            clusters,
            spread,
            models,
        } => {
            let opts = SynthOptions {
                docs: *docs,
                dim: *dim,
                clusters: *clusters,
                spread: *spread,
                models: models.clone(),
                seed: cli.seed.unwrap_or(42),
            };
            emit(format!("config: {}", cmd_synth(&opts, out)?.display()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            ExitCode::FAILURE
        }
    }
}
