//! Run configuration, read from TOML.
//!
//! Relative paths are resolved against the directory of the config file.
//! Secrets are never written in the file; the API key is read from the
//! environment variable named by `model.api_key_env`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::anchor::AnchorConfig;
use crate::corpus::{CorpusFormat, DemographicSchema};
use crate::stats::BootstrapConfig;
use crate::store::digest_parts;
use crate::summarizer::mock::MockConfig;
use crate::summarizer::GenerationParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderChoice {
    /// An endpoint speaking the OpenAI-style chat completions API.
    Openai,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_provider")]
    pub provider: ProviderChoice,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    #[serde(default)]
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_n_seeds")]
    pub n_seeds: u32,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default)]
    pub response_tag_mode: bool,
}

impl ModelConfig {
    pub fn generation(&self) -> GenerationParams {
        GenerationParams {
            model: self.model.clone(),
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
            n_seeds: self.n_seeds,
            seed_base: self.seed_base,
            response_tag_mode: self.response_tag_mode,
        }
    }
}

fn default_temperature() -> f64 {
    GenerationParams::default().temperature
}

fn default_max_output_tokens() -> u32 {
    GenerationParams::default().max_output_tokens
}

fn default_n_seeds() -> u32 {
    GenerationParams::default().n_seeds
}

fn default_provider() -> ProviderChoice {
    ProviderChoice::Openai
}

fn default_concurrency() -> usize {
    4
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconConfig {
    pub categorical: Option<PathBuf>,
    pub continuous: Option<PathBuf>,
    /// SCM seed lists; the built-in lists are used when absent.
    pub scm_seeds: Option<PathBuf>,
    pub theme_aliases: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpEmbeddingConfig {
    pub url: String,
    pub model: String,
    pub dimension: usize,
    #[serde(default)]
    pub api_key_env: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub static_vectors: Option<PathBuf>,
    pub http: Option<HttpEmbeddingConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitConfig {
    pub style: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub questions: PathBuf,
    /// Id of the question whose section is summarized.
    pub target_section: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Completion and embedding cache; defaults to `<output_dir>/cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    pub demographics: DemographicSchema,
    #[serde(default)]
    pub corpus_format: CorpusFormat,
    #[serde(default)]
    pub anchoring: AnchorConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub lexicons: LexiconConfig,
    #[serde(default)]
    pub embeddings: EmbeddingConfig,
    #[serde(default)]
    pub stats: BootstrapConfig,
    #[serde(default)]
    pub portrait: PortraitConfig,
    #[serde(default)]
    pub mock: Option<MockConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("run")
}

fn default_top_k() -> usize {
    20
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Read {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        cfg.resolve_paths(base_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let read_err = |message: String| ConfigError::Read { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| read_err(e.to_string()))?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.questions);
        fix(&mut self.output_dir);
        if let Some(p) = self.cache_dir.as_mut() {
            fix(p);
        }
        for p in [
            &mut self.lexicons.categorical,
            &mut self.lexicons.continuous,
            &mut self.lexicons.scm_seeds,
            &mut self.lexicons.theme_aliases,
            &mut self.embeddings.static_vectors,
            &mut self.portrait.style,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join("cache"))
    }

    /// Checks the whole config and reports every problem at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut must_exist = |what: &str, p: &Path| {
            if !p.is_file() {
                errs.push(format!("{what} not found: {}", p.display()));
            }
        };
        must_exist("corpus", &self.corpus);
        must_exist("questions file", &self.questions);
        if let Some(p) = &self.lexicons.categorical {
            must_exist("categorical lexicon", p);
        }
        if let Some(p) = &self.lexicons.continuous {
            must_exist("continuous lexicon", p);
        }
        if let Some(p) = &self.lexicons.scm_seeds {
            must_exist("SCM seed file", p);
        }
        if let Some(p) = &self.lexicons.theme_aliases {
            must_exist("theme alias file", p);
        }
        if let Some(p) = &self.embeddings.static_vectors {
            must_exist("static vector file", p);
        }
        if let Some(p) = &self.portrait.style {
            must_exist("portrait style", p);
        }
        if let Err(e) = self.demographics.validate() {
            errs.push(e);
        }
        if let Err(e) = self.anchoring.validate() {
            errs.push(format!("anchoring: {e}"));
        }
        if let Err(e) = self.model.generation().validate() {
            errs.push(e.to_string());
        }
        if let Err(e) = self.stats.validate() {
            errs.push(format!("stats: {e}"));
        }
        if self.target_section.trim().is_empty() {
            errs.push("target_section is empty".into());
        }
        if self.top_k == 0 {
            errs.push("top_k must be at least 1".into());
        }
        if self.model.max_concurrency == 0 {
            errs.push("model.max_concurrency must be at least 1".into());
        }
        if self.model.provider == ProviderChoice::Openai {
            if self.model.endpoint.as_deref().map_or(true, |e| e.trim().is_empty()) {
                errs.push("model.endpoint is required for the openai provider".into());
            }
            if self.model.model.trim().is_empty() {
                errs.push("model.model is required".into());
            }
            if let Some(var) = &self.model.api_key_env {
                if std::env::var(var).is_err() {
                    errs.push(format!("environment variable {var} (model.api_key_env) is not set"));
                }
            }
        }
        match (&self.embeddings.static_vectors, &self.embeddings.http) {
            (Some(_), Some(_)) => errs.push("embeddings: configure static_vectors or http, not both".into()),
            (None, None) => errs.push("embeddings: static_vectors or http is required".into()),
            _ => {}
        }
        if self.lexicons.categorical.is_none() && self.lexicons.continuous.is_none() {
            log::warn!("no categorical or continuous lexicon configured");
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    /// Model id shown in reports.
    pub fn model_id(&self) -> String {
        let m = self.model.model.trim();
        if m.is_empty() {
            "mock".to_string()
        } else {
            m.to_string()
        }
    }

    pub fn provider_id(&self) -> String {
        match self.model.provider {
            ProviderChoice::Mock => "mock".to_string(),
            ProviderChoice::Openai => {
                format!("openai-compatible:{}", self.model.endpoint.as_deref().unwrap_or_default())
            }
        }
    }

    /// Digest of everything that shapes the results: the settings (minus
    /// output locations and concurrency) and the contents of every input
    /// file.
    pub fn digest(&self) -> Result<String, ConfigError> {
        let mut view = self.clone();
        view.output_dir = PathBuf::new();
        view.cache_dir = None;
        view.model.max_concurrency = 0;
        let mut files: Vec<(&str, Option<&PathBuf>)> = vec![
            ("corpus", Some(&self.corpus)),
            ("questions", Some(&self.questions)),
            ("categorical", self.lexicons.categorical.as_ref()),
            ("continuous", self.lexicons.continuous.as_ref()),
            ("scm_seeds", self.lexicons.scm_seeds.as_ref()),
            ("theme_aliases", self.lexicons.theme_aliases.as_ref()),
            ("static_vectors", self.embeddings.static_vectors.as_ref()),
            ("style", self.portrait.style.as_ref()),
        ];
        let mut parts: Vec<Vec<u8>> = Vec::new();
        for (name, path) in files.drain(..) {
            parts.push(name.as_bytes().to_vec());
            match path {
                Some(p) => parts.push(std::fs::read(p).map_err(|e| ConfigError::Read {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?),
                None => parts.push(Vec::new()),
            }
        }
        // Paths are absolute after resolution; hash only their contents.
        for p in [
            &mut view.corpus,
            &mut view.questions,
        ] {
            *p = PathBuf::new();
        }
        for p in [
            &mut view.lexicons.categorical,
            &mut view.lexicons.continuous,
            &mut view.lexicons.scm_seeds,
            &mut view.lexicons.theme_aliases,
            &mut view.embeddings.static_vectors,
            &mut view.portrait.style,
        ]
        .into_iter()
        .flatten()
        {
            *p = PathBuf::new();
        }
        let settings = serde_json::to_vec(&view).expect("config serializes");
        parts.insert(0, settings);
        Ok(digest_parts(parts.iter()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
corpus = "corpus.jsonl"
questions = "questions.txt"
target_section = "q2"

[demographics]
attributes = [
  { name = "race", values = ["Black", "white"] },
  { name = "gender", values = ["woman", "man"] },
]

[model]
provider = "mock"

[embeddings]
static_vectors = "vectors.txt"
"#;

    fn setup() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for f in ["corpus.jsonl", "questions.txt", "vectors.txt"] {
            std::fs::write(dir.path().join(f), "x").unwrap();
        }
        dir
    }

    #[test]
    fn defaults_and_paths() {
        let dir = setup();
        let cfg = RunConfig::parse(MINIMAL, dir.path()).unwrap();
        assert_eq!(cfg.corpus, dir.path().join("corpus.jsonl"));
        assert_eq!(cfg.output_dir, dir.path().join("run"));
        assert_eq!(cfg.cache_dir(), dir.path().join("run/cache"));
        assert_eq!(cfg.top_k, 20);
        assert_eq!(cfg.model.n_seeds, 5);
        assert_eq!(cfg.model.temperature, 0.7);
        assert_eq!(cfg.model.max_output_tokens, 6000);
        assert_eq!(cfg.stats.n_bootstrap, 5000);
        assert_eq!(cfg.stats.alpha, 0.05);
        assert_eq!(cfg.stats.ci_level, 0.83);
        assert_eq!(cfg.demographics.groups(), ["Black woman", "Black man", "white woman", "white man"]);
        cfg.validate().unwrap();
    }

    #[test]
    fn errors_are_reported_together() {
        let dir = setup();
        let text = MINIMAL.replace("provider = \"mock\"", "provider = \"openai\"\nn_seeds = 0");
        let mut cfg = RunConfig::parse(&text, dir.path()).unwrap();
        cfg.questions = dir.path().join("missing.txt");
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("questions file not found"), "{msg}");
        assert!(msg.contains("model.endpoint is required"), "{msg}");
        assert!(msg.contains("n_seeds"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = setup();
        let text = MINIMAL.replace("[model]", "[model]\ntemprature = 0.5");
        assert!(RunConfig::parse(&text, dir.path()).is_err());
    }

    #[test]
    fn digest_tracks_settings_and_inputs_but_not_location() {
        let dir = setup();
        let cfg = RunConfig::parse(MINIMAL, dir.path()).unwrap();
        let d0 = cfg.digest().unwrap();
        let mut moved = cfg.clone();
        moved.output_dir = PathBuf::from("/elsewhere");
        moved.model.max_concurrency = 16;
        assert_eq!(moved.digest().unwrap(), d0);
        let mut seeded = cfg.clone();
        seeded.stats.rng_seed = 9;
        assert_ne!(seeded.digest().unwrap(), d0);
        std::fs::write(dir.path().join("corpus.jsonl"), "y").unwrap();
        assert_ne!(cfg.digest().unwrap(), d0);
    }
}
