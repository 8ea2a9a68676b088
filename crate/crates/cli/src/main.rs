//! `lookalike-lab`: synth -> ingest -> train -> match -> analyze -> report.

mod analyze;
mod commands;
mod config;
mod context;
mod provenance;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::context::{Ctx, UsageError};

#[derive(Parser, Debug)]
#[command(
    name = "lookalike-lab",
    version,
    about = "Twin and look-alike similarity experiments over face embeddings"
)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded synthetic twin world under <out_dir>/data.
    Synth,
    /// Validate a manifest, image map and embedding file and summarize them.
    Ingest {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long = "images-map")]
        images_map: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Train the projection head on twin / look-alike pairs.
    Train {
        /// Labelled pair list to train on instead of mining one.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Labelled validation pairs used with --pairs.
        #[arg(long = "val-pairs", requires = "pairs")]
        val_pairs: Option<PathBuf>,
        #[arg(long = "out-head")]
        out_head: Option<PathBuf>,
    },
    /// Score all pairs and accumulate per-class statistics.
    Match {
        #[arg(long, value_enum)]
        score: Option<ScoreArg>,
        #[arg(long, value_enum)]
        filter: Option<FilterArg>,
        /// `T` for the twin threshold or a number.
        #[arg(long = "retain-at")]
        retain_at: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
        /// Head file for similarity scores.
        #[arg(long)]
        head: Option<PathBuf>,
    },
    /// Run one analysis over match or training outputs.
    Analyze {
        #[arg(value_enum)]
        what: AnalysisArg,
        /// Which match run to read; defaults to the configured score.
        #[arg(long, value_enum)]
        score: Option<ScoreArg>,
    },
    /// Run every available analysis and write CSVs and SVG plots.
    Report {
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreArg {
    Comparison,
    Similarity,
}

impl ScoreArg {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreArg::Comparison => "comparison",
            ScoreArg::Similarity => "similarity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "comparison" => Some(ScoreArg::Comparison),
            "similarity" => Some(ScoreArg::Similarity),
            _ => None,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterArg {
    Mated,
    Nonmated,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalysisArg {
    Threshold,
    Table,
    Roc,
    Baseline,
    Correlate,
    BlandAltman,
    Sweep,
}

fn emit_error(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{line}");
}

fn load_config(path: Option<&PathBuf>) -> anyhow::Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p).map_err(|e| UsageError(format!("{e:#}")))?,
        None => RunConfig::default(),
    };
    cfg.apply_env().map_err(|e| UsageError(format!("{e:#}")))?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(cli.config.as_ref())?;
    let ctx = Ctx::new(cfg);
    match cli.command {
        Command::Synth => commands::synth(&ctx),
        Command::Ingest {
            manifest,
            images_map,
            embeddings,
        } => commands::ingest(&ctx, manifest, images_map, embeddings),
        Command::Train {
            pairs,
            val_pairs,
            out_head,
        } => commands::train(&ctx, pairs, val_pairs, out_head),
        Command::Match {
            score,
            filter,
            retain_at,
            workers,
            head,
        } => commands::run_match(
            &ctx,
            commands::MatchArgs {
                score,
                filter,
                retain_at,
                workers,
                head,
            },
        ),
        Command::Analyze { what, score } => {
            let score = score.unwrap_or_else(|| ctx.default_score());
            analyze::run(&ctx, what, score, &ctx.analysis_dir()).map(|_| ())
        }
        Command::Report { out_dir } => report::run(&ctx, out_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            emit_error("usage", e.to_string().lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(u) = e.downcast_ref::<UsageError>() {
                emit_error("usage", &u.0);
                ExitCode::from(2)
            } else {
                emit_error("data", &format!("{e:#}"));
                ExitCode::from(1)
            }
        }
    }
}
