//! `positionality`: run the summarization audit from the command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 config error,
//! 4 data error, 5 transport error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use positionality::config::{ProviderChoice, RunConfig};
use positionality::pipeline::{Pipeline, PipelineError, RunOptions};

#[derive(Parser)]
#[command(name = "positionality", version, about = "Audit demographic shifts in LLM interview summaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Anchor interview questions and extract the target section.
    Parse(Common),
    /// Sample baseline and demographic-conditioned summaries.
    Summarize(Common),
    /// Compute wording, psychological and theme statistics per group.
    Score(Common),
    /// Draw the portrait and write the report bundle.
    Portrait(Common),
    /// All stages in order, skipping those already up to date.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Run directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accept artifacts from another config and rerun every stage.
    #[arg(long)]
    force: bool,
    /// Put summary texts in the report. Off by default: summaries quote transcripts.
    #[arg(long)]
    include_text: bool,
    /// Use the offline extractive mock instead of the configured model.
    #[arg(long)]
    mock_provider: bool,
}

fn pipeline(args: &Common) -> Result<Pipeline, PipelineError> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if args.mock_provider {
        config.model.provider = ProviderChoice::Mock;
    }
    Pipeline::new(config, RunOptions { force: args.force, include_text: args.include_text })
}

fn execute(command: &Command) -> Result<(), PipelineError> {
    match command {
        Command::Parse(args) => {
            let parsed = pipeline(args)?.cmd_parse()?;
            println!(
                "parsed {} documents ({} records excluded, {} without the target section)",
                parsed.documents.len(),
                parsed.corpus_exclusions.len(),
                parsed.section_missing.len()
            );
        }
        Command::Summarize(args) => {
            let (samples, requests) = pipeline(args)?.cmd_summarize()?;
            let failed = samples.samples.iter().filter(|s| !s.parse_ok).count();
            println!("{} samples ({failed} unusable), {requests} model requests", samples.samples.len());
        }
        Command::Score(args) => {
            let metrics = pipeline(args)?.cmd_score()?;
            println!("scored {} attributes and {} themes", metrics.attributes.len(), metrics.themes.vocabulary.len());
        }
        Command::Portrait(args) => {
            let p = pipeline(args)?;
            p.cmd_portrait()?;
            println!("{}", p.paths.portrait_svg().display());
        }
        Command::Run(args) => {
            let p = pipeline(args)?;
            let summary = p.cmd_run()?;
            println!(
                "ran [{}], up to date [{}], {} model requests",
                summary.stages_run.join(", "),
                summary.stages_skipped.join(", "),
                summary.llm_requests
            );
            println!("{}", p.paths.portrait_svg().display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
