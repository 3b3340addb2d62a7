//! Command-line pipeline: ingest a survey table, learn a causal graph,
//! estimate intervention effects, compute baseline statistics and write a
//! report. Every artifact carries the tool version and a config hash.

pub mod artifact;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::Status;
use config::{FileConfig, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "causal-survey", version, about = "Causal analysis of Likert survey data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and clean a table; writes dataset.csv, dataset.schema, provenance.txt
    Ingest(Flags),
    /// Learn a CPDAG; writes graph.json, graph.dot, trace.txt, partition.txt
    Discover(Flags),
    /// Rank intervention targets; writes effects.json, ranking.tsv, hierarchy.json
    Effects {
        #[command(flatten)]
        flags: Flags,
        /// Graph dump from `discover` (default: <out>/graph.json)
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Correlation screen and neutral-point t-tests
    Baselines(Flags),
    /// Sample a random linear SCM and score recovery
    Simulate(Flags),
    /// Combine the artifacts in --out into report.md
    Report(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with default settings; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Responses at or above this form the high group (default 5)
    #[arg(long)]
    pub high: Option<f64>,
    /// Responses at or below this form the low group (default 3)
    #[arg(long)]
    pub low: Option<f64>,
    #[arg(long)]
    pub resamples: Option<usize>,
    /// pearson or spearman
    #[arg(long)]
    pub corr_method: Option<String>,
    #[arg(long)]
    pub corr_threshold: Option<f64>,
    /// BIC penalty multiplier
    #[arg(long)]
    pub penalty: Option<f64>,
    /// Output directory (default ./out)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drop variables missing more than this fraction (default 0.5)
    #[arg(long)]
    pub max_missing: Option<f64>,
    /// Neutral point for the t-tests (default 4)
    #[arg(long)]
    pub neutral: Option<f64>,
    /// simulate: number of variables
    #[arg(long)]
    pub nodes: Option<usize>,
    /// simulate: number of rows
    #[arg(long)]
    pub samples: Option<usize>,
    /// simulate: expected node degree
    #[arg(long)]
    pub degree: Option<f64>,
    /// simulate: discretize the sample to a 7-point scale
    #[arg(long)]
    pub likert: bool,
}

impl Flags {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let flags = FileConfig {
            input: self.input.clone(),
            schema: self.schema.clone(),
            seed: self.seed,
            high: self.high,
            low: self.low,
            resamples: self.resamples,
            corr_method: self.corr_method.clone(),
            corr_threshold: self.corr_threshold,
            penalty: self.penalty,
            out: self.out.clone(),
            max_missing: self.max_missing,
            neutral: self.neutral,
            nodes: self.nodes,
            samples: self.samples,
            degree: self.degree,
            likert: self.likert.then_some(true),
        };
        RunConfig::resolve(file.overlay(flags))
    }
}

fn dispatch(command: &Command) -> anyhow::Result<Status> {
    match command {
        Command::Ingest(f) => commands::cmd_ingest(&f.resolve()?),
        Command::Discover(f) => commands::cmd_discover(&f.resolve()?),
        Command::Effects { flags, graph } => commands::cmd_effects(&flags.resolve()?, graph.as_deref()),
        Command::Baselines(f) => commands::cmd_baselines(&f.resolve()?),
        Command::Simulate(f) => commands::cmd_simulate(&f.resolve()?),
        Command::Report(f) => commands::cmd_report(&f.resolve()?),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns 0 on success, 1 on any error, 2 when the search was truncated.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(Status::Done) => 0,
        Ok(Status::Truncated) => 2,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
