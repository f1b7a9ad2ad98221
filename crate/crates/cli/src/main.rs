//! `socweave`: reproducible pipelines over the socweave library.
//!
//! Every command reads one JSON configuration (plus `--set key=value`
//! overrides), writes its artifacts to `output_dir` and leaves a
//! `manifest.<command>.json` beside them. `--config` and `--set` go before
//! the subcommand. Exit codes: 0 ok, 1 runtime error, 2 configuration
//! error; errors are printed to stderr as JSON.

mod commands;
mod config;
mod data;
mod error;
mod manifest;

use clap::{Parser, Subcommand};
use config::PipelineConfig;
use error::CliError;
use manifest::Run;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "socweave", version, about = "Social-graph embeddings and network analyses")]
struct Cli {
    /// JSON pipeline configuration; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Override one configuration value, e.g. `--set train.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load, filter or describe an edge list.
    Graph {
        #[command(subcommand)]
        action: GraphAction,
    },
    /// Generate a planted-partition graph with features and labels.
    Synth,
    /// Train the embedder, infer embeddings or export them.
    Embed {
        #[command(subcommand)]
        action: EmbedAction,
    },
    /// Score embeddings and raw features with repeated-split heads.
    Eval,
    /// Hashtag/media pseudo-labels and label propagation.
    Label,
    /// Network analyses.
    Analyze {
        #[command(subcommand)]
        action: AnalyzeAction,
    },
    /// Expected-engagement anchors and toxicity deltas.
    Approve {
        /// Post-anchor windows, overriding `approval.ks`.
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
        /// Use generated timelines instead of `data.records`.
        #[arg(long)]
        synthetic: bool,
    },
    /// k-means over node features with k selection.
    Cluster,
}

#[derive(Debug, Subcommand)]
enum GraphAction {
    Load,
    Filter,
    Stats,
}

#[derive(Debug, Subcommand)]
enum EmbedAction {
    Train,
    Infer,
    Export,
}

#[derive(Debug, Subcommand)]
enum AnalyzeAction {
    Rwc,
    Assort,
    Ratio,
    Combo,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Graph { action } => format!("graph-{}", format!("{action:?}").to_lowercase()),
            Command::Synth => "synth".into(),
            Command::Embed { action } => format!("embed-{}", format!("{action:?}").to_lowercase()),
            Command::Eval => "eval".into(),
            Command::Label => "label".into(),
            Command::Analyze { action } => format!("analyze-{}", format!("{action:?}").to_lowercase()),
            Command::Approve { .. } => "approve".into(),
            Command::Cluster => "cluster".into(),
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(cli.config.as_deref(), &cli.set)?;
    if cli.print_config {
        let text = serde_json::to_string_pretty(&cfg).expect("config serializes");
        let _ = writeln!(std::io::stdout().lock(), "{text}");
        return Ok(());
    }
    let threads = if cfg.threads > 0 {
        cfg.threads
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    };
    // Fails only if a pool already exists, which cannot happen here.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();

    let mut run = Run::new(&cfg, &cli.command.name(), threads)?;
    match &cli.command {
        Command::Graph { action } => match action {
            GraphAction::Load => commands::graph::load(&mut run)?,
            GraphAction::Filter => commands::graph::filter(&mut run)?,
            GraphAction::Stats => commands::graph::stats(&mut run)?,
        },
        Command::Synth => commands::synth::run(&mut run)?,
        Command::Embed { action } => match action {
            EmbedAction::Train => commands::embed::train(&mut run)?,
            EmbedAction::Infer => commands::embed::infer(&mut run)?,
            EmbedAction::Export => commands::embed::export(&mut run)?,
        },
        Command::Eval => commands::eval::run(&mut run)?,
        Command::Label => commands::label::run(&mut run)?,
        Command::Analyze { action } => match action {
            AnalyzeAction::Rwc => commands::analyze::rwc(&mut run)?,
            AnalyzeAction::Assort => commands::analyze::assort(&mut run)?,
            AnalyzeAction::Ratio => commands::analyze::ratio(&mut run)?,
            AnalyzeAction::Combo => commands::analyze::combo(&mut run)?,
        },
        Command::Approve { k, synthetic } => commands::approve::run(&mut run, k, *synthetic)?,
        Command::Cluster => commands::cluster::run(&mut run)?,
    }
    let manifest = run.finish()?;
    eprintln!("wrote {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
