//! Audits how an LLM summarizer's output shifts when it is told who wrote
//! the text.
//!
//! Each interview's target section is summarized twice per seed: once with
//! no information about the interviewee (baseline) and once with their
//! demographics stated in the prompt. The audit then compares, per group:
//!
//! * wording: how much of the source the baseline summaries keep
//!   ([`metrics::lexical`], [`metrics::semantic`]);
//! * psychological framing: lexicon and embedding scores of the summaries
//!   against the source ([`metrics::psych`]);
//! * themes: which themes the demographic-conditioned summaries add or drop
//!   relative to the baseline ([`metrics::theme`]).
//!
//! Bootstrap tests in [`stats`] decide which differences are significant,
//! and [`portrait`] draws the significant ones as a grid of tiles.
//!
//! [`pipeline::Pipeline`] runs the stages over a run directory:
//!
//! ```
//! use positionality::{Pipeline, RunConfig, RunOptions};
//!
//! let fixture = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic");
//! let mut config = RunConfig::load(&fixture.join("config.toml")).unwrap();
//! let out = tempfile::tempdir().unwrap();
//! config.output_dir = out.path().to_path_buf();
//!
//! let pipeline = Pipeline::new(config, RunOptions::default()).unwrap();
//! let summary = pipeline.cmd_run().unwrap();
//! assert_eq!(summary.stages_run, ["parse", "summarize", "score", "portrait"]);
//! assert!(pipeline.paths.portrait_svg().exists());
//! ```

pub mod artifacts;
pub mod config;
pub mod corpus;
pub mod http;
pub mod metrics;
pub mod pipeline;
pub mod portrait;
pub mod stats;
pub mod store;
pub mod summarizer;
pub mod synthetic;

pub use config::RunConfig;
pub use pipeline::{Pipeline, PipelineError, RunOptions};
pub use portrait::{PortraitSpec, TileState};
