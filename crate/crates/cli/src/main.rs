//! `advsense`: corpus-to-lexicon pipeline for adverb senses.
//!
//! Subcommands mirror the pipeline stages over a shared run directory:
//! `demo` generates a synthetic corpus with fake embeddings, `extract`
//! pulls adverb occurrences, `cluster` induces candidate senses, `select`
//! drafts entries with prototypical examples, `serve` runs the human
//! review service, `synsets` groups validated senses, `emit`/`validate`
//! produce and check the YAML lexicon, and `kappa` scores inter-annotator
//! agreement.
//!
//! Exit codes: 0 success, 1 validation findings, 2 usage or configuration
//! error, 3 internal error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod stages;

use config::{Overrides, RunConfig};
use stages::StageContext;

#[derive(Debug)]
pub enum CliError {
    /// Usage or configuration problem; nothing was run.
    Config(String),
    /// The command completed but reported validation findings.
    Findings(usize),
    Internal(String),
}

#[derive(Parser)]
#[command(name = "advsense", version, about = "Adverb sense induction and lexicon expansion pipeline")]
struct Cli {
    /// Run directory holding all pipeline inputs and outputs
    #[arg(long, global = true, env = "ADVSENSE_RUN_DIR", default_value = ".")]
    run_dir: PathBuf,

    /// Config file (default: <run-dir>/config.toml when present)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Proceed even when manifest hashes flag stale inputs
    #[arg(long, global = true)]
    force: bool,

    /// Print planned reads and writes without doing any work
    #[arg(long, global = true)]
    dry_run: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest the corpus and extract adverb occurrences
    Extract {
        /// Corpus file or directory (repeatable; overrides config)
        #[arg(long = "corpus")]
        corpus: Vec<PathBuf>,
        /// Corpus format: plain_text or jsonl
        #[arg(long)]
        format: Option<String>,
    },
    /// Cluster each lemma's occurrences into candidate senses
    Cluster {
        #[arg(long)]
        distance_threshold: Option<f64>,
        #[arg(long)]
        min_cluster_size: Option<usize>,
        /// average, complete or single
        #[arg(long)]
        linkage: Option<String>,
    },
    /// Pick prototypical examples and draft sense entries for review
    Select {
        #[arg(long)]
        min_tokens: Option<usize>,
        #[arg(long)]
        max_tokens: Option<usize>,
    },
    /// Group validated senses into category-homogeneous synsets
    Synsets {
        #[arg(long)]
        similarity_threshold: Option<f64>,
        /// Treat drafts with a category and example as validated (no
        /// review round; meant for the demo and smoke tests)
        #[arg(long)]
        accept_drafts: bool,
        /// Actor recorded in the audit log
        #[arg(long)]
        actor: Option<String>,
    },
    /// Emit the canonical YAML lexicon and report validation findings
    Emit,
    /// Validate a lexicon file against the schema and taxonomy
    Validate {
        /// Lexicon path (default: <run-dir>/lexicon.yaml)
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Cohen's kappa between two item_id,category annotation CSVs
    Kappa {
        annotator_a: PathBuf,
        annotator_b: PathBuf,
        /// Also write the full report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Start the HTTP review service over the run directory
    Serve {
        #[arg(long, default_value = "127.0.0.1:8787")]
        addr: String,
        /// Directory with a built review UI bundle to host at /
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
    /// Generate the synthetic demo corpus and fake embeddings
    Demo {
        #[arg(long)]
        seed: Option<u64>,
        /// Also run extract, cluster, select, synsets --accept-drafts, emit
        #[arg(long)]
        full: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut overrides = Overrides::default();
    match &cli.command {
        Command::Extract { corpus, format } => {
            overrides.corpus_paths = corpus.clone();
            overrides.corpus_format = format.clone();
        }
        Command::Cluster {
            distance_threshold,
            min_cluster_size,
            linkage,
        } => {
            overrides.distance_threshold = *distance_threshold;
            overrides.min_cluster_size = *min_cluster_size;
            overrides.linkage = linkage.clone();
        }
        Command::Select {
            min_tokens,
            max_tokens,
        } => {
            overrides.min_tokens = *min_tokens;
            overrides.max_tokens = *max_tokens;
        }
        Command::Synsets {
            similarity_threshold,
            actor,
            ..
        } => {
            overrides.similarity_threshold = *similarity_threshold;
            overrides.actor = actor.clone();
        }
        Command::Demo { seed, .. } => {
            overrides.seed = *seed;
        }
        _ => {}
    }

    if let Command::Kappa {
        annotator_a,
        annotator_b,
        json,
    } = &cli.command
    {
        return stages::cmd_kappa(annotator_a, annotator_b, json.as_deref());
    }

    // the demo seeds the run directory with its scaled config before the
    // effective config is resolved
    if matches!(cli.command, Command::Demo { .. }) && !cli.dry_run {
        std::fs::create_dir_all(&cli.run_dir)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        stages::write_demo_config(&cli.run_dir)?;
    }

    let config = RunConfig::load(&cli.run_dir, cli.config.as_deref(), &overrides)?;
    let ctx = StageContext {
        config,
        force: cli.force,
        dry_run: cli.dry_run,
    };
    match cli.command {
        Command::Extract { .. } => stages::cmd_extract(&ctx),
        Command::Cluster { .. } => stages::cmd_cluster(&ctx),
        Command::Select { .. } => stages::cmd_select(&ctx),
        Command::Synsets { accept_drafts, .. } => stages::cmd_synsets(&ctx, accept_drafts),
        Command::Emit => stages::cmd_emit(&ctx),
        Command::Validate { lexicon } => stages::cmd_validate(&ctx, lexicon),
        Command::Serve { addr, ui_dir } => stages::cmd_serve(&ctx, &addr, ui_dir),
        Command::Demo { full, .. } => stages::cmd_demo(&ctx, full),
        Command::Kappa { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Findings(n)) => {
            eprintln!("{n} validation finding(s)");
            ExitCode::from(1)
        }
        Err(CliError::Config(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(message)) => {
            eprintln!("internal error: {message}");
            ExitCode::from(3)
        }
    }
}
