//! Pipeline stages over a run directory.
//!
//! ```text
//! <output_dir>/
//!   parsed/corpus.json      target sections of every usable interview
//!   parsed/report.json      anchoring decisions per interview
//!   samples/samples.json    summaries, both conditions, all seeds
//!   metrics/metrics.json    group statistics and significance tests
//!   portrait/portrait.json  tile grid
//!   portrait/portrait.svg
//!   portrait/report.json    shareable report bundle
//!   manifest.json
//!   cache/                  raw completions and embeddings, one file per digest
//! ```
//!
//! Each stage reads the previous stage's artifact and refuses it when it was
//! produced under a different config digest, unless forced.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::artifacts::{
    read_artifact, write_json, write_text, ArtifactError, AttributeMetrics, ExclusionCounts, MetricsArtifact,
    ParsedArtifact, ParsedDocument, ParserReport, RowKind, RunManifest, SampleArtifact, ThemeMetrics,
    ThemeShiftRecord, SCHEMA_VERSION,
};
use crate::config::{ConfigError, ProviderChoice, RunConfig};
use crate::corpus::{load_corpus, load_questions, parse_interview, render_transcript, section_document, CorpusError};
use crate::http::RetryPolicy;
use crate::metrics::lexical::{document_mean, rouge1_precision, rouge_l_precision, tokenize};
use crate::metrics::psych::{
    build_scm_axes, document_shift, CategoricalLexicon, ContinuousLexicon, PsychError, PsychScorer, ScmAxes, ScmSeeds,
};
use crate::metrics::semantic::{bertscore_precision, Embedder, EmbeddingError, HttpEmbeddings, StaticVectors};
use crate::metrics::theme::{normalize_theme, theme_shift, theme_union, top_k_themes, ConditionPair, ThemeAliases};
use crate::portrait::{build_portrait, export_report, render_svg, PortraitSpec, Style};
use crate::stats::{group_statistic, paired_bootstrap_test, pairwise_wins, Direction, StatsError};
use crate::store::{digest_parts, ContentStore};
use crate::summarizer::client::{CachedClient, ChatClient, OpenAiCompatClient};
use crate::summarizer::mock::{transcript_key, MockChatClient};
use crate::summarizer::prompt::{build_prompt, template_digest, SYSTEM_PROMPT};
use crate::summarizer::{generate_samples, run_bounded, SummaryCondition, SummarySample};

pub const WORDING_ATTRIBUTES: [&str; 3] = ["rouge1", "rougeL", "bertscore"];

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Resource(String),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Transport(String),
}

impl PipelineError {
    /// Process exit code: 3 config, 4 data, 5 transport, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Resource(_) => 3,
            PipelineError::Artifact(ArtifactError::Io { .. }) => 1,
            PipelineError::Artifact(_) => 4,
            PipelineError::Corpus(CorpusError::Io { .. }) => 1,
            PipelineError::Corpus(_) | PipelineError::Data(_) => 4,
            PipelineError::Transport(_) => 5,
        }
    }
}

impl From<StatsError> for PipelineError {
    fn from(e: StatsError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

fn embedding_error(e: EmbeddingError) -> PipelineError {
    match e {
        EmbeddingError::Http(h) => PipelineError::Transport(format!("embedding endpoint: {h}")),
        other => PipelineError::Data(other.to_string()),
    }
}

fn psych_error(e: PsychError) -> PipelineError {
    match e {
        PsychError::Embedding(inner) => embedding_error(inner),
        other => PipelineError::Data(other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Accept artifacts from another config digest; rerun every stage in `run`.
    pub force: bool,
    /// Put summary texts into the report.
    pub include_text: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Summarize,
    Score,
    Portrait,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Parse, Stage::Summarize, Stage::Score, Stage::Portrait];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Parse => "parse",
            Stage::Summarize => "summarize",
            Stage::Score => "score",
            Stage::Portrait => "portrait",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn parsed(&self) -> PathBuf {
        self.root.join("parsed/corpus.json")
    }
    pub fn parser_report(&self) -> PathBuf {
        self.root.join("parsed/report.json")
    }
    pub fn samples(&self) -> PathBuf {
        self.root.join("samples/samples.json")
    }
    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics/metrics.json")
    }
    pub fn portrait_json(&self) -> PathBuf {
        self.root.join("portrait/portrait.json")
    }
    pub fn portrait_svg(&self) -> PathBuf {
        self.root.join("portrait/portrait.svg")
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("portrait/report.json")
    }
    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    fn output_of(&self, stage: Stage) -> PathBuf {
        match stage {
            Stage::Parse => self.parsed(),
            Stage::Summarize => self.samples(),
            Stage::Score => self.metrics(),
            Stage::Portrait => self.portrait_json(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PortraitArtifact {
    pub schema_version: u32,
    pub config_digest: String,
    pub portrait: PortraitSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub stages_run: Vec<&'static str>,
    pub stages_skipped: Vec<&'static str>,
    /// Completion requests that missed the cache.
    pub llm_requests: usize,
}

pub struct Pipeline {
    pub config: RunConfig,
    pub digest: String,
    pub paths: RunPaths,
    pub options: RunOptions,
}

impl Pipeline {
    /// Validates `config` and fixes its digest.
    pub fn new(config: RunConfig, options: RunOptions) -> Result<Pipeline, PipelineError> {
        config.validate()?;
        let digest = config.digest()?;
        let paths = RunPaths { root: config.output_dir.clone() };
        Ok(Pipeline { config, digest, paths, options })
    }

    fn read<T: serde::de::DeserializeOwned>(&self, path: &Path, name: &str) -> Result<T, PipelineError> {
        Ok(read_artifact(path, name, &self.digest, self.options.force)?)
    }

    fn is_current(&self, stage: Stage) -> bool {
        #[derive(serde::Deserialize)]
        struct Header {
            schema_version: u32,
            config_digest: String,
        }
        let Ok(text) = std::fs::read_to_string(self.paths.output_of(stage)) else {
            return false;
        };
        let complete = match stage {
            Stage::Portrait => self.paths.portrait_svg().is_file() && self.paths.report().is_file(),
            Stage::Parse => self.paths.parser_report().is_file(),
            _ => true,
        };
        complete
            && serde_json::from_str::<Header>(&text)
                .is_ok_and(|h| h.schema_version == SCHEMA_VERSION && h.config_digest == self.digest)
    }

    pub fn cmd_parse(&self) -> Result<ParsedArtifact, PipelineError> {
        let cfg = &self.config;
        let corpus = load_corpus(&cfg.corpus, &cfg.corpus_format, &cfg.demographics)?;
        let questions = load_questions(&cfg.questions)?;
        if !questions.iter().any(|q| q.id == cfg.target_section) {
            return Err(ConfigError::Invalid(vec![format!(
                "target_section {} is not a question id in {}",
                cfg.target_section,
                cfg.questions.display()
            )])
            .into());
        }
        let mut documents = Vec::new();
        let mut interviews = Vec::new();
        let mut section_missing = Vec::new();
        for doc in &corpus.documents {
            let parsed = match parse_interview(doc, &questions, &cfg.anchoring) {
                Ok(p) => p,
                Err(CorpusError::NoInterviewerTurns) => {
                    log::warn!("{}: no interviewer turns; excluded", doc.id);
                    section_missing.push(doc.id.clone());
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            match section_document(&parsed, doc, &cfg.target_section) {
                Ok(section_doc) if !section_doc.respondent_text.trim().is_empty() => {
                    let section = parsed.section(&cfg.target_section).expect("section exists").clone();
                    documents.push(ParsedDocument { document: section_doc, section });
                }
                Ok(_) => section_missing.push(doc.id.clone()),
                Err(CorpusError::SectionAbsent(_)) => {
                    log::warn!("{}: section {} not found; excluded", doc.id, cfg.target_section);
                    section_missing.push(doc.id.clone());
                }
                Err(e) => return Err(e.into()),
            }
            interviews.push(parsed);
        }
        if documents.is_empty() {
            return Err(PipelineError::Data(format!(
                "no interview has a usable section {}",
                cfg.target_section
            )));
        }
        let artifact = ParsedArtifact {
            schema_version: SCHEMA_VERSION,
            config_digest: self.digest.clone(),
            target_section: cfg.target_section.clone(),
            documents,
            corpus_exclusions: corpus.exclusions,
            section_missing,
        };
        write_json(&self.paths.parsed(), &artifact)?;
        write_json(
            &self.paths.parser_report(),
            &ParserReport { schema_version: SCHEMA_VERSION, config_digest: self.digest.clone(), interviews },
        )?;
        self.write_manifest()?;
        Ok(artifact)
    }

    fn chat_client(&self, parsed: &ParsedArtifact) -> Result<Box<dyn ChatClient>, PipelineError> {
        let cfg = &self.config;
        match cfg.model.provider {
            ProviderChoice::Mock => {
                let groups: HashMap<String, String> = parsed
                    .documents
                    .iter()
                    .map(|d| {
                        let t = render_transcript(&d.document.turns, &cfg.corpus_format);
                        (transcript_key(&t), d.document.demographics.group_key.clone())
                    })
                    .collect();
                let mock = cfg.mock.clone().unwrap_or_default();
                Ok(Box::new(MockChatClient::extractive(mock, cfg.corpus_format.clone(), groups)))
            }
            ProviderChoice::Openai => {
                let endpoint = cfg.model.endpoint.as_deref().unwrap_or_default();
                let key = match &cfg.model.api_key_env {
                    Some(var) => Some(std::env::var(var).map_err(|_| {
                        ConfigError::Invalid(vec![format!("environment variable {var} is not set")])
                    })?),
                    None => None,
                };
                Ok(Box::new(OpenAiCompatClient::new(endpoint, key)))
            }
        }
    }

    pub fn cmd_summarize(&self) -> Result<(SampleArtifact, usize), PipelineError> {
        let cfg = &self.config;
        let parsed: ParsedArtifact = self.read(&self.paths.parsed(), "parsed corpus")?;
        let store = ContentStore::open(self.config.cache_dir().join("completions"))
            .map_err(|e| PipelineError::Resource(format!("cache: {e}")))?;
        let client = CachedClient::new(self.chat_client(&parsed)?, store);
        let params = cfg.model.generation();
        let jobs: Vec<(usize, SummaryCondition)> = parsed
            .documents
            .iter()
            .enumerate()
            .flat_map(|(i, d)| {
                [(i, SummaryCondition::Baseline), (i, SummaryCondition::Demographic(d.document.demographics.clone()))]
            })
            .collect();
        let results = run_bounded(&jobs, cfg.model.max_concurrency, |(i, cond)| {
            generate_samples(&parsed.documents[*i].document, cond, &params, &cfg.corpus_format, &client)
        });
        let mut samples = Vec::new();
        let mut flagged = BTreeSet::new();
        for ((i, _), r) in jobs.iter().zip(results) {
            let id = &parsed.documents[*i].document.id;
            match r {
                Ok(s) => {
                    if s.iter().all(|x| !x.parse_ok) {
                        flagged.insert(id.clone());
                    }
                    samples.extend(s);
                }
                Err(e) => {
                    log::warn!("{id}: {e}");
                    flagged.insert(id.clone());
                }
            }
        }
        let failed = samples.iter().filter(|s| transport_failed(s)).count();
        if !samples.is_empty() && failed == samples.len() {
            let reason = samples[0].error.clone().unwrap_or_default();
            return Err(PipelineError::Transport(format!("every completion request failed: {reason}")));
        }
        let artifact = SampleArtifact {
            schema_version: SCHEMA_VERSION,
            config_digest: self.digest.clone(),
            samples,
            flagged_documents: flagged.into_iter().collect(),
        };
        write_json(&self.paths.samples(), &artifact)?;
        self.write_manifest()?;
        Ok((artifact, client.forwarded()))
    }

    fn embedder(&self) -> Result<Embedder, PipelineError> {
        let cfg = &self.config;
        if let Some(path) = &cfg.embeddings.static_vectors {
            let v = StaticVectors::load(path).map_err(|e| PipelineError::Resource(e.to_string()))?;
            return Ok(Embedder::new(Box::new(v)));
        }
        let http = cfg.embeddings.http.as_ref().expect("validated: one provider configured");
        let api_key = match &http.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                ConfigError::Invalid(vec![format!("environment variable {var} is not set")])
            })?),
            None => None,
        };
        let backend = HttpEmbeddings {
            url: http.url.clone(),
            model: http.model.clone(),
            dimension: http.dimension,
            api_key,
            retry: RetryPolicy::default(),
        };
        let store = ContentStore::open(cfg.cache_dir().join("embeddings"))
            .map_err(|e| PipelineError::Resource(format!("cache: {e}")))?;
        Ok(Embedder::new(Box::new(backend)).with_store(store))
    }

    pub fn cmd_score(&self) -> Result<MetricsArtifact, PipelineError> {
        let cfg = &self.config;
        let parsed: ParsedArtifact = self.read(&self.paths.parsed(), "parsed corpus")?;
        let store: SampleArtifact = self.read(&self.paths.samples(), "sample store")?;
        let resource = |e: String| PipelineError::Resource(e);

        let categorical = cfg
            .lexicons
            .categorical
            .as_deref()
            .map(CategoricalLexicon::load)
            .transpose()
            .map_err(|e| resource(e.to_string()))?;
        let continuous = cfg
            .lexicons
            .continuous
            .as_deref()
            .map(ContinuousLexicon::load)
            .transpose()
            .map_err(|e| resource(e.to_string()))?;
        let aliases = cfg.lexicons.theme_aliases.as_deref().map(ThemeAliases::load).transpose().map_err(resource)?;
        let embedder = self.embedder()?;
        let axes: Option<ScmAxes> = match &cfg.lexicons.scm_seeds {
            Some(path) => {
                let seeds = ScmSeeds::load(path).map_err(|e| resource(e.to_string()))?;
                Some(build_scm_axes(&seeds, &embedder).map_err(|e| resource(e.to_string()))?)
            }
            None => match build_scm_axes(&ScmSeeds::default(), &embedder) {
                Ok(a) => Some(a),
                Err(e) => {
                    log::warn!("SCM axes unavailable with the built-in seeds: {e}");
                    None
                }
            },
        };
        let scorer = PsychScorer {
            categorical: categorical.as_ref(),
            continuous: continuous.as_ref(),
            scm: axes.as_ref().map(|a| (a, &embedder)),
        };
        let psych_attributes = scorer.attributes();

        let mut by_doc: HashMap<&str, (Vec<&SummarySample>, Vec<&SummarySample>)> = HashMap::new();
        for s in store.samples.iter().filter(|s| s.parse_ok) {
            let entry = by_doc.entry(s.document_id.as_str()).or_default();
            if s.condition.is_baseline() {
                entry.0.push(s);
            } else {
                entry.1.push(s);
            }
        }
        let canonical = |themes: &[String]| -> Vec<String> {
            let mut out: Vec<String> = Vec::new();
            for t in themes {
                if let Some(n) = normalize_theme(t, aliases.as_ref()) {
                    if !out.contains(&n) {
                        out.push(n);
                    }
                }
            }
            out
        };

        // Per-document scores, in document order.
        let empty = (Vec::new(), Vec::new());
        let doc_scores: Vec<DocScores> = parsed
            .documents
            .par_iter()
            .map(|d| {
                let (base, demo) = by_doc.get(d.document.id.as_str()).unwrap_or(&empty);
                score_document(d, base, &scorer, &psych_attributes, &embedder)
                    .map(|mut s| {
                        let base_themes: Vec<Vec<String>> = base.iter().map(|x| canonical(&x.themes)).collect();
                        let demo_themes: Vec<Vec<String>> = demo.iter().map(|x| canonical(&x.themes)).collect();
                        s.baseline_themes = base_themes;
                        s.demographic_union = theme_union(demo_themes.iter().map(Vec::as_slice));
                        s
                    })
            })
            .collect::<Result<_, _>>()?;

        let groups = cfg.demographics.groups();
        let stats = &cfg.stats;
        let mut attributes = Vec::new();
        let mut rows: Vec<(RowKind, String)> =
            WORDING_ATTRIBUTES.iter().map(|a| (RowKind::Wording, a.to_string())).collect();
        rows.extend(psych_attributes.iter().map(|a| (RowKind::Psych, a.clone())));
        for (kind, attribute) in rows {
            let value_of = |s: &DocScores| -> Option<f64> {
                match kind {
                    RowKind::Wording => s.wording.iter().find(|(a, _)| *a == attribute).and_then(|(_, v)| *v),
                    _ => s.psych.get(&attribute).copied().flatten(),
                }
            };
            let per_group: Vec<(String, Vec<f64>)> = groups
                .iter()
                .map(|g| (g.clone(), doc_scores.iter().filter(|s| &s.group == g).filter_map(value_of).collect()))
                .collect();
            let excluded = doc_scores.iter().filter(|s| value_of(s).is_none()).count();
            let mut group_statistics = Vec::new();
            for (g, values) in &per_group {
                if !values.is_empty() {
                    group_statistics.push(group_statistic(&attribute, g, values, stats)?);
                }
            }
            let wins = pairwise_wins(&attribute, &per_group, stats)?;
            attributes.push(AttributeMetrics { kind, attribute, group_statistics, wins, excluded_documents: excluded });
        }

        let vocabulary = top_k_themes(doc_scores.iter().flat_map(|s| s.baseline_themes.iter().map(Vec::as_slice)), cfg.top_k);
        let baseline_unions: Vec<Option<BTreeSet<String>>> =
            doc_scores.iter().map(|s| theme_union(s.baseline_themes.iter().map(Vec::as_slice))).collect();
        let mut shifts = Vec::new();
        let mut tests = Vec::new();
        for theme in vocabulary.names() {
            for g in &groups {
                let pairs: Vec<ConditionPair> = doc_scores
                    .iter()
                    .zip(&baseline_unions)
                    .filter(|(s, _)| &s.group == g)
                    .map(|(s, b)| ConditionPair { baseline: b.as_ref(), demographic: s.demographic_union.as_ref() })
                    .collect();
                let shift = theme_shift(theme, &pairs);
                if !shift.diffs.is_empty() {
                    for dir in [Direction::Greater, Direction::Less] {
                        tests.push(paired_bootstrap_test(theme, g, &shift.diffs, dir, stats)?);
                    }
                }
                shifts.push(ThemeShiftRecord {
                    theme: theme.to_string(),
                    group: g.clone(),
                    value: shift.value,
                    n_used: shift.n_used,
                    n_excluded: shift.n_excluded,
                });
            }
        }

        let exclusions = ExclusionCounts {
            corpus_records: parsed.corpus_exclusions.len(),
            section_missing: parsed.section_missing.len(),
            samples_unparsed: store.samples.iter().filter(|s| !s.parse_ok && !transport_failed(s)).count(),
            samples_failed_transport: store.samples.iter().filter(|s| transport_failed(s)).count(),
            documents_without_baseline: doc_scores.iter().filter(|s| s.baseline_themes.is_empty()).count(),
        };
        let artifact = MetricsArtifact {
            schema_version: SCHEMA_VERSION,
            config_digest: self.digest.clone(),
            groups,
            attributes,
            themes: ThemeMetrics { vocabulary: vocabulary.themes, shifts, tests },
            exclusions,
        };
        write_json(&self.paths.metrics(), &artifact)?;
        self.write_manifest()?;
        Ok(artifact)
    }

    pub fn cmd_portrait(&self) -> Result<PortraitSpec, PipelineError> {
        let cfg = &self.config;
        let metrics: MetricsArtifact = self.read(&self.paths.metrics(), "metrics")?;
        let style = match &cfg.portrait.style {
            Some(p) => Style::load(p).map_err(PipelineError::Resource)?,
            None => Style::default(),
        };
        let portrait = build_portrait(&metrics, &cfg.model_id(), &cfg.provider_id(), cfg.stats.alpha);
        let svg = render_svg(&portrait, &style);
        let samples: Option<SampleArtifact> = if self.options.include_text {
            Some(self.read(&self.paths.samples(), "sample store")?)
        } else {
            None
        };
        write_json(
            &self.paths.portrait_json(),
            &PortraitArtifact {
                schema_version: SCHEMA_VERSION,
                config_digest: self.digest.clone(),
                portrait: portrait.clone(),
            },
        )?;
        write_text(&self.paths.portrait_svg(), &svg)?;
        let mut manifest = self.manifest();
        if !manifest.stages_completed.iter().any(|s| s == Stage::Portrait.name()) {
            manifest.stages_completed.push(Stage::Portrait.name().to_string());
        }
        let report = export_report(&portrait, &metrics, &manifest, samples.as_ref().map(|s| s.samples.as_slice()));
        write_json(&self.paths.report(), &report)?;
        self.write_manifest()?;
        Ok(portrait)
    }

    /// Runs every stage, skipping those whose artifacts are current.
    pub fn cmd_run(&self) -> Result<RunSummary, PipelineError> {
        let mut summary = RunSummary::default();
        let mut rerun_rest = self.options.force;
        for stage in Stage::ALL {
            if !rerun_rest && self.is_current(stage) {
                log::info!("{}: up to date", stage.name());
                summary.stages_skipped.push(stage.name());
                continue;
            }
            rerun_rest = true;
            log::info!("{}: running", stage.name());
            match stage {
                Stage::Parse => {
                    self.cmd_parse()?;
                }
                Stage::Summarize => {
                    let (_, requests) = self.cmd_summarize()?;
                    summary.llm_requests += requests;
                }
                Stage::Score => {
                    self.cmd_score()?;
                }
                Stage::Portrait => {
                    self.cmd_portrait()?;
                }
            }
            summary.stages_run.push(stage.name());
        }
        Ok(summary)
    }

    /// The manifest as of the artifacts currently on disk.
    pub fn manifest(&self) -> RunManifest {
        let cfg = &self.config;
        let params = cfg.model.generation();
        let parsed: Option<ParsedArtifact> = read_artifact(&self.paths.parsed(), "parsed corpus", &self.digest, false).ok();
        let prompts_digest = parsed.as_ref().map(|p| {
            let mut users = Vec::new();
            for d in &p.documents {
                for cond in [SummaryCondition::Baseline, SummaryCondition::Demographic(d.document.demographics.clone())] {
                    if let Ok(pr) = build_prompt(&d.document, &cond, &params, &cfg.corpus_format) {
                        users.push(pr.user);
                    }
                }
            }
            digest_parts(users.iter())
        });
        RunManifest {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: self.digest.clone(),
            model_id: cfg.model_id(),
            provider_id: cfg.provider_id(),
            embedding_provider: match (&cfg.embeddings.static_vectors, &cfg.embeddings.http) {
                (Some(p), _) => format!("static:{}", p.file_name().map(|f| f.to_string_lossy()).unwrap_or_default()),
                (None, Some(h)) => format!("http:{}", h.model),
                (None, None) => String::new(),
            },
            system_prompt_digest: digest_parts([SYSTEM_PROMPT]),
            prompt_template_digest: template_digest(),
            prompts_digest,
            seeds: params.seeds().collect(),
            temperature: params.temperature,
            rng_seed: cfg.stats.rng_seed,
            n_bootstrap: cfg.stats.n_bootstrap,
            alpha: cfg.stats.alpha,
            ci_level: cfg.stats.ci_level,
            groups: cfg.demographics.groups(),
            n_documents: parsed.as_ref().map_or(0, |p| p.documents.len()),
            stages_completed: Stage::ALL
                .into_iter()
                .filter(|s| self.is_current(*s))
                .map(|s| s.name().to_string())
                .collect(),
        }
    }

    fn write_manifest(&self) -> Result<(), PipelineError> {
        Ok(write_json(&self.paths.manifest(), &self.manifest())?)
    }
}

fn transport_failed(s: &SummarySample) -> bool {
    !s.parse_ok && s.raw_output.is_empty() && s.error.is_some()
}

struct DocScores {
    group: String,
    wording: Vec<(&'static str, Option<f64>)>,
    psych: std::collections::BTreeMap<String, Option<f64>>,
    baseline_themes: Vec<Vec<String>>,
    demographic_union: Option<BTreeSet<String>>,
}

fn score_document(
    doc: &ParsedDocument,
    baseline: &[&SummarySample],
    scorer: &PsychScorer<'_>,
    psych_attributes: &[String],
    embedder: &Embedder,
) -> Result<DocScores, PipelineError> {
    let source_text = &doc.document.respondent_text;
    let source = tokenize(source_text);
    let source_emb = match embedder.embed(source_text) {
        Ok(e) => Some(e),
        Err(EmbeddingError::EmptyText) => None,
        Err(e) => return Err(embedding_error(e)),
    };
    let mut r1 = Vec::new();
    let mut rl = Vec::new();
    let mut bs = Vec::new();
    for s in baseline {
        let cand = tokenize(&s.summary_text);
        if cand.is_empty() {
            continue;
        }
        r1.push(rouge1_precision(&cand, &source));
        rl.push(rouge_l_precision(&cand, &source));
        if let Some(src) = &source_emb {
            match embedder.embed(&s.summary_text).and_then(|c| bertscore_precision(&c, src)) {
                Ok(v) => bs.push(v),
                Err(EmbeddingError::EmptyText) => {}
                Err(e) => return Err(embedding_error(e)),
            }
        }
    }
    let f = scorer.score(source_text).map_err(psych_error)?;
    let sample_scores = baseline
        .iter()
        .map(|s| scorer.score(&s.summary_text))
        .collect::<Result<Vec<_>, _>>()
        .map_err(psych_error)?;
    let psych = psych_attributes
        .iter()
        .map(|a| {
            let per_sample: Vec<Option<f64>> = sample_scores.iter().map(|v| v.get(a).copied().flatten()).collect();
            (a.clone(), document_shift(f.get(a).copied().flatten(), &per_sample))
        })
        .collect();
    Ok(DocScores {
        group: doc.document.demographics.group_key.clone(),
        wording: vec![
            (WORDING_ATTRIBUTES[0], document_mean(&r1)),
            (WORDING_ATTRIBUTES[1], document_mean(&rl)),
            (WORDING_ATTRIBUTES[2], document_mean(&bs)),
        ],
        psych,
        baseline_themes: Vec::new(),
        demographic_union: None,
    })
}
