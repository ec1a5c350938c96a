//! On-disk artifacts written by the pipeline stages.
//!
//! Every artifact records the schema version and the digest of the config
//! that produced it.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Exclusion, ParsedInterview, Section};
use crate::stats::{GroupStatistic, GroupWins, SignificanceResult};
use crate::summarizer::SummarySample;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Wording,
    Psych,
    Theme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedDocument {
    /// The section as a document of its own.
    pub document: Document,
    pub section: Section,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedArtifact {
    pub schema_version: u32,
    pub config_digest: String,
    pub target_section: String,
    pub documents: Vec<ParsedDocument>,
    pub corpus_exclusions: Vec<Exclusion>,
    /// Documents whose target section was not found.
    pub section_missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParserReport {
    pub schema_version: u32,
    pub config_digest: String,
    pub interviews: Vec<ParsedInterview>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleArtifact {
    pub schema_version: u32,
    pub config_digest: String,
    pub samples: Vec<SummarySample>,
    /// Documents for which every sample of some condition failed.
    pub flagged_documents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeMetrics {
    pub kind: RowKind,
    pub attribute: String,
    pub group_statistics: Vec<GroupStatistic>,
    pub wins: Vec<GroupWins>,
    /// Documents left out because the attribute was undefined for them.
    pub excluded_documents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeShiftRecord {
    pub theme: String,
    pub group: String,
    pub value: Option<f64>,
    pub n_used: usize,
    pub n_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeMetrics {
    /// Top themes and their share of baseline summaries.
    pub vocabulary: Vec<(String, f64)>,
    pub shifts: Vec<ThemeShiftRecord>,
    pub tests: Vec<SignificanceResult>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionCounts {
    pub corpus_records: usize,
    pub section_missing: usize,
    pub samples_unparsed: usize,
    pub samples_failed_transport: usize,
    pub documents_without_baseline: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsArtifact {
    pub schema_version: u32,
    pub config_digest: String,
    pub groups: Vec<String>,
    pub attributes: Vec<AttributeMetrics>,
    pub themes: ThemeMetrics,
    pub exclusions: ExclusionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_digest: String,
    pub model_id: String,
    pub provider_id: String,
    pub embedding_provider: String,
    pub system_prompt_digest: String,
    pub prompt_template_digest: String,
    /// Digest over every rendered prompt, in request order.
    pub prompts_digest: Option<String>,
    pub seeds: Vec<u64>,
    pub temperature: f64,
    pub rng_seed: u64,
    pub n_bootstrap: usize,
    pub alpha: f64,
    pub ci_level: f64,
    pub groups: Vec<String>,
    pub n_documents: usize,
    pub stages_completed: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("{name} not found at {path}")]
    Missing { name: String, path: String },
    #[error("{name} at {path} was produced by config {found}, current config is {expected}; rerun the stage or pass --force")]
    DigestMismatch { name: String, path: String, found: String, expected: String },
    #[error("{name} at {path} has schema version {found}, expected {expected}")]
    Schema { name: String, path: String, found: u32, expected: u32 },
    #[error("cannot read {path}: {message}")]
    Decode { path: String, message: String },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Fields shared by every artifact, read before the full decode.
#[derive(Deserialize)]
struct Header {
    schema_version: u32,
    config_digest: String,
}

/// Writes pretty JSON with a trailing newline, atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ArtifactError> {
    let io = |source| ArtifactError::Io { path: path.display().to_string(), source };
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    std::io::Write::write_all(&mut tmp, text.as_bytes()).map_err(io)?;
    // Temp files are created owner-only.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644)).map_err(io)?;
    }
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Reads an artifact, checking schema version and, unless `force`, the
/// config digest.
pub fn read_artifact<T: DeserializeOwned>(
    path: &Path,
    name: &str,
    expected_digest: &str,
    force: bool,
) -> Result<T, ArtifactError> {
    let shown = path.display().to_string();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ArtifactError::Missing { name: name.to_string(), path: shown })
        }
        Err(source) => return Err(ArtifactError::Io { path: shown, source }),
    };
    let decode = |e: serde_json::Error| ArtifactError::Decode { path: shown.clone(), message: e.to_string() };
    let header: Header = serde_json::from_str(&text).map_err(decode)?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(ArtifactError::Schema {
            name: name.to_string(),
            path: shown,
            found: header.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    if header.config_digest != expected_digest {
        if !force {
            return Err(ArtifactError::DigestMismatch {
                name: name.to_string(),
                path: shown,
                found: header.config_digest,
                expected: expected_digest.to_string(),
            });
        }
        log::warn!("using {name} from config {} under --force", header.config_digest);
    }
    serde_json::from_str(&text).map_err(decode)
}
