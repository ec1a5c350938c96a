//! Interview corpora: loading, speaker turns, and question-anchored sections.
//!
//! A corpus is a JSON-lines file with one interview per line:
//!
//! ```json
//! {"id": "p01", "turns": [{"role": "interviewer", "text": "..."}], "demographics": {"race": "Black", "gender": "woman"}}
//! {"id": "p02", "raw_text": "INTERVIEWER: ...\nRESPONDENT: ...", "demographics": {"race": "white", "gender": "man"}}
//! ```
//!
//! In `raw_text`, each line starting with the interviewer tag is one
//! interviewer turn; every other line is respondent speech (an optional
//! respondent tag is stripped). Consecutive respondent lines form one turn.

pub mod anchor;
pub mod tfidf;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::metrics::lexical::tokenize;
pub use anchor::{anchor_questions, AnchorConfig, Anchoring, MatchEvent, MatchOutcome, MatchPass};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("line {line}: schema error: {message}")]
    Schema { line: usize, message: String },
    #[error("no tokens in any text")]
    NoTokens,
    #[error("interview has no interviewer turns")]
    NoInterviewerTurns,
    #[error("section absent: question {0} was not matched")]
    SectionAbsent(String),
    #[error("questions: {0}")]
    Questions(String),
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Interviewer,
    Respondent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
}

impl Turn {
    pub fn new(role: Role, text: impl Into<String>) -> Self {
        Turn { role, text: text.into() }
    }
}

/// One demographic attribute and its admissible values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub values: Vec<String>,
}

/// The configured demographic attributes; their value combinations are the
/// groups under study.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemographicSchema {
    pub attributes: Vec<AttributeSpec>,
}

impl DemographicSchema {
    /// Every combination of attribute values, as group keys, in attribute order.
    pub fn groups(&self) -> Vec<String> {
        let mut keys = vec![Vec::<&str>::new()];
        for attr in &self.attributes {
            keys = keys
                .into_iter()
                .flat_map(|prefix| {
                    attr.values.iter().map(move |v| {
                        let mut k = prefix.clone();
                        k.push(v.as_str());
                        k
                    })
                })
                .collect();
        }
        keys.into_iter().map(|k| k.join(" ")).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.attributes.is_empty() {
            return Err("no demographic attributes configured".into());
        }
        let mut names = BTreeSet::new();
        for a in &self.attributes {
            if !names.insert(a.name.as_str()) {
                return Err(format!("duplicate attribute {}", a.name));
            }
            if a.values.is_empty() {
                return Err(format!("attribute {} has no values", a.name));
            }
        }
        if self.groups().len() < 2 {
            return Err("at least two demographic groups are required".into());
        }
        Ok(())
    }
}

/// Attribute values of one interviewee, in schema order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemographicProfile {
    pub attributes: Vec<(String, String)>,
    pub group_key: String,
}

impl DemographicProfile {
    pub fn new(attributes: Vec<(String, String)>) -> Self {
        let group_key = attributes.iter().map(|(_, v)| v.as_str()).collect::<Vec<_>>().join(" ");
        DemographicProfile { attributes, group_key }
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.attributes.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str())
    }
}

/// One interview, or one section of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub turns: Vec<Turn>,
    /// Respondent turns joined by single spaces, in order.
    pub respondent_text: String,
    pub demographics: DemographicProfile,
    /// Token count of `respondent_text`.
    pub word_count: usize,
}

impl Document {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>, turns: Vec<Turn>, demographics: DemographicProfile) -> Self {
        let respondent_text = turns
            .iter()
            .filter(|t| t.role == Role::Respondent)
            .map(|t| t.text.trim())
            .filter(|t| !t.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        let word_count = tokenize(&respondent_text).len();
        Document {
            id: id.into(),
            raw_text: raw_text.into(),
            turns,
            respondent_text,
            demographics,
            word_count,
        }
    }

    /// Builds from turns, rendering `raw_text` with the given tags.
    pub fn from_turns(id: impl Into<String>, turns: Vec<Turn>, demographics: DemographicProfile, format: &CorpusFormat) -> Self {
        let raw = render_transcript(&turns, format);
        Document::new(id, raw, turns, demographics)
    }

    pub fn interviewer_turns(&self) -> Vec<(usize, &str)> {
        self.turns
            .iter()
            .enumerate()
            .filter(|(_, t)| t.role == Role::Interviewer)
            .map(|(i, t)| (i, t.text.as_str()))
            .collect()
    }
}

/// Speaker tags used to split and render raw transcripts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusFormat {
    pub interviewer_tag: String,
    pub respondent_tag: Option<String>,
}

impl Default for CorpusFormat {
    fn default() -> Self {
        CorpusFormat {
            interviewer_tag: "INTERVIEWER:".into(),
            respondent_tag: Some("RESPONDENT:".into()),
        }
    }
}

/// Splits a tagged transcript into turns.
pub fn split_turns(raw: &str, format: &CorpusFormat) -> Vec<Turn> {
    let mut turns: Vec<Turn> = Vec::new();
    for line in raw.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(format.interviewer_tag.as_str()) {
            turns.push(Turn::new(Role::Interviewer, rest.trim()));
            continue;
        }
        let tagged = format.respondent_tag.as_deref().and_then(|t| line.strip_prefix(t));
        let text = tagged.map_or(line, str::trim);
        match turns.last_mut() {
            Some(last) if last.role == Role::Respondent && tagged.is_none() => {
                last.text.push(' ');
                last.text.push_str(text);
            }
            _ => turns.push(Turn::new(Role::Respondent, text)),
        }
    }
    turns
}

/// One line per turn, prefixed by its speaker tag.
pub fn render_transcript(turns: &[Turn], format: &CorpusFormat) -> String {
    turns
        .iter()
        .map(|t| match t.role {
            Role::Interviewer => format!("{} {}", format.interviewer_tag, t.text),
            Role::Respondent => match &format.respondent_tag {
                Some(tag) => format!("{tag} {}", t.text),
                None => t.text.clone(),
            },
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// A document left out of the analysis, and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub line: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub exclusions: Vec<Exclusion>,
}

#[derive(Deserialize)]
struct Record {
    id: String,
    #[serde(default)]
    turns: Option<Vec<Turn>>,
    #[serde(default)]
    raw_text: Option<String>,
    demographics: BTreeMap<String, serde_json::Value>,
}

pub fn load_corpus(path: &Path, format: &CorpusFormat, schema: &DemographicSchema) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text, format, schema)
}

/// Parses JSON-lines corpus text. Documents whose demographics fall outside
/// the schema are excluded and reported rather than rejected.
pub fn parse_corpus(text: &str, format: &CorpusFormat, schema: &DemographicSchema) -> Result<Corpus, CorpusError> {
    let mut documents = Vec::new();
    let mut exclusions = Vec::new();
    let mut ids = BTreeSet::new();
    let mut records = 0usize;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        records += 1;
        let rec: Record = serde_json::from_str(line).map_err(|e| CorpusError::Record {
            line: lineno,
            message: e.to_string(),
        })?;
        if !ids.insert(rec.id.clone()) {
            return Err(CorpusError::Record { line: lineno, message: format!("duplicate id {}", rec.id) });
        }
        let turns = match (rec.turns, rec.raw_text.as_deref()) {
            (Some(turns), _) => turns,
            (None, Some(raw)) => split_turns(raw, format),
            (None, None) => {
                return Err(CorpusError::Schema { line: lineno, message: "record needs turns or raw_text".into() })
            }
        };
        let mut attributes = Vec::new();
        let mut outside = None;
        for spec in &schema.attributes {
            let value = match rec.demographics.get(&spec.name) {
                Some(serde_json::Value::String(s)) => s.clone(),
                Some(other) => {
                    return Err(CorpusError::Schema {
                        line: lineno,
                        message: format!("demographic {} must be a string, found {other}", spec.name),
                    })
                }
                None => {
                    return Err(CorpusError::Schema {
                        line: lineno,
                        message: format!("missing demographic attribute {}", spec.name),
                    })
                }
            };
            if !spec.values.contains(&value) && outside.is_none() {
                outside = Some(format!("{}={value} is not a studied group", spec.name));
            }
            attributes.push((spec.name.clone(), value));
        }
        if let Some(reason) = outside {
            log::info!("excluding {}: {reason}", rec.id);
            exclusions.push(Exclusion { id: rec.id, line: Some(lineno), reason });
            continue;
        }
        let raw = rec.raw_text.unwrap_or_else(|| render_transcript(&turns, format));
        documents.push(Document::new(rec.id, raw, turns, DemographicProfile::new(attributes)));
    }
    if records == 0 || documents.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(Corpus { documents, exclusions })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
}

/// Reads questions as a JSON array (strings or `{id, text}` objects) or as
/// plain text, one question per non-empty line (`#` starts a comment line).
/// Plain questions are numbered `q1`, `q2`, ...
pub fn parse_questions(text: &str) -> Result<Vec<Question>, CorpusError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Text(String),
        Full { id: String, text: String },
    }
    let questions: Vec<Question> = if text.trim_start().starts_with('[') {
        let entries: Vec<Entry> = serde_json::from_str(text).map_err(|e| CorpusError::Questions(e.to_string()))?;
        entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| match e {
                Entry::Text(text) => Question { id: format!("q{}", i + 1), text },
                Entry::Full { id, text } => Question { id, text },
            })
            .collect()
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .enumerate()
            .map(|(i, l)| Question { id: format!("q{}", i + 1), text: l.to_string() })
            .collect()
    };
    if questions.is_empty() {
        return Err(CorpusError::Questions("no questions".into()));
    }
    let mut seen = BTreeSet::new();
    for q in &questions {
        if !seen.insert(q.id.as_str()) {
            return Err(CorpusError::Questions(format!("duplicate question id {}", q.id)));
        }
    }
    Ok(questions)
}

pub fn load_questions(path: &Path) -> Result<Vec<Question>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_questions(&text)
}

/// A matched question and the turns it covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub question_id: String,
    /// Index of the matched interviewer turn in the document's turns.
    pub anchor_turn: usize,
    pub similarity: f64,
    #[serde(flatten)]
    pub pass: MatchPass,
    /// Turn range `[anchor_turn, next anchor or end)`.
    pub span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedInterview {
    pub document_id: String,
    pub sections: Vec<Section>,
    pub skipped: Vec<String>,
    pub unresolved: Vec<String>,
    pub events: Vec<MatchEvent>,
}

impl ParsedInterview {
    pub fn section(&self, question_id: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.question_id == question_id)
    }
}

/// Anchors `questions` in `doc` and cuts it into sections.
pub fn parse_interview(doc: &Document, questions: &[Question], cfg: &AnchorConfig) -> Result<ParsedInterview, CorpusError> {
    let interviewer = doc.interviewer_turns();
    let texts: Vec<&str> = interviewer.iter().map(|(_, t)| *t).collect();
    let anchoring = anchor_questions(&texts, questions, cfg)?;
    let anchored: Vec<_> = anchoring.matches.iter().flatten().collect();
    let mut sections = Vec::with_capacity(anchored.len());
    for (k, m) in anchored.iter().enumerate() {
        let start = interviewer[m.interviewer_index].0;
        let end = anchored.get(k + 1).map_or(doc.turns.len(), |n| interviewer[n.interviewer_index].0);
        sections.push(Section {
            question_id: m.question_id.clone(),
            anchor_turn: start,
            similarity: m.similarity,
            pass: m.pass,
            span: (start, end),
        });
    }
    Ok(ParsedInterview {
        document_id: doc.id.clone(),
        sections,
        skipped: anchoring.skipped,
        unresolved: anchoring.unresolved,
        events: anchoring.events,
    })
}

/// Respondent speech of one section, joined by single spaces.
pub fn extract_section_respondent_text(parsed: &ParsedInterview, doc: &Document, question_id: &str) -> Result<String, CorpusError> {
    Ok(section_document(parsed, doc, question_id)?.respondent_text)
}

/// The document restricted to one section's turns.
pub fn section_document(parsed: &ParsedInterview, doc: &Document, question_id: &str) -> Result<Document, CorpusError> {
    let section = parsed
        .section(question_id)
        .ok_or_else(|| CorpusError::SectionAbsent(question_id.to_string()))?;
    let turns = doc.turns[section.span.0..section.span.1].to_vec();
    let section_doc = Document::new(doc.id.clone(), String::new(), turns, doc.demographics.clone());
    if section_doc.respondent_text.is_empty() {
        log::warn!("{}: section {question_id} has no respondent speech", doc.id);
    }
    Ok(section_doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> DemographicSchema {
        DemographicSchema {
            attributes: vec![
                AttributeSpec { name: "race".into(), values: vec!["Black".into(), "white".into()] },
                AttributeSpec { name: "gender".into(), values: vec!["man".into(), "woman".into()] },
            ],
        }
    }

    #[test]
    fn groups_are_the_cartesian_product() {
        assert_eq!(schema().groups(), ["Black man", "Black woman", "white man", "white woman"]);
        assert!(schema().validate().is_ok());
    }

    #[test]
    fn loads_and_excludes_out_of_scope_groups() {
        let text = r#"{"id":"a","turns":[{"role":"interviewer","text":"q?"},{"role":"respondent","text":"yes"}],"demographics":{"race":"Black","gender":"woman"}}
{"id":"b","raw_text":"INTERVIEWER: q?\nRESPONDENT: no way","demographics":{"race":"white","gender":"man"}}
{"id":"c","raw_text":"INTERVIEWER: q?\nhm","demographics":{"race":"other","gender":"man"}}
"#;
        let c = parse_corpus(text, &CorpusFormat::default(), &schema()).unwrap();
        assert_eq!(c.documents.len(), 2);
        assert_eq!(c.exclusions.len(), 1);
        assert_eq!(c.exclusions[0].id, "c");
        assert_eq!(c.documents[0].demographics.group_key, "Black woman");
        assert_eq!(c.documents[1].respondent_text, "no way");
        assert_eq!(c.documents[1].word_count, 2);
    }

    #[test]
    fn empty_corpus_is_fatal() {
        let err = parse_corpus("\n\n", &CorpusFormat::default(), &schema()).unwrap_err();
        assert_eq!(err.to_string(), "empty corpus");
    }

    #[test]
    fn missing_attribute_is_a_schema_error() {
        let text = "{\"id\":\"a\",\"raw_text\":\"x\",\"demographics\":{\"race\":\"Black\"}}\n";
        let err = parse_corpus(text, &CorpusFormat::default(), &schema()).unwrap_err();
        assert!(matches!(err, CorpusError::Schema { line: 1, ref message } if message.contains("gender")));
    }

    #[test]
    fn malformed_record_reports_line() {
        let good = r#"{"id":"a","raw_text":"x","demographics":{"race":"Black","gender":"man"}}"#;
        let text = format!("{good}\n{{not json\n");
        let err = parse_corpus(&text, &CorpusFormat::default(), &schema()).unwrap_err();
        assert!(matches!(err, CorpusError::Record { line: 2, .. }));
    }

    #[test]
    fn raw_text_splitting() {
        let raw = "INTERVIEWER: First?\nwell, I\nthink so\nINTERVIEWER: And?\nRESPONDENT: yes\nRESPONDENT: again";
        let turns = split_turns(raw, &CorpusFormat::default());
        assert_eq!(
            turns,
            [
                Turn::new(Role::Interviewer, "First?"),
                Turn::new(Role::Respondent, "well, I think so"),
                Turn::new(Role::Interviewer, "And?"),
                Turn::new(Role::Respondent, "yes"),
                Turn::new(Role::Respondent, "again"),
            ]
        );
        let fmt = CorpusFormat::default();
        assert_eq!(split_turns(&render_transcript(&turns, &fmt), &fmt), turns);
    }

    #[test]
    fn questions_in_both_formats() {
        let q = parse_questions("# header\nWhat?\n\nWhy?\n").unwrap();
        assert_eq!(q[1], Question { id: "q2".into(), text: "Why?".into() });
        let q = parse_questions(r#"["What?", {"id": "life", "text": "Chapters?"}]"#).unwrap();
        assert_eq!(q[0].id, "q1");
        assert_eq!(q[1].id, "life");
        assert!(parse_questions("").is_err());
    }

    fn doc(turns: Vec<Turn>) -> Document {
        Document::new("d", "", turns, DemographicProfile::new(vec![("race".into(), "Black".into())]))
    }

    #[test]
    fn sections_and_extraction() {
        use Role::*;
        let d = doc(vec![
            Turn::new(Interviewer, "tell me about your early life"),
            Turn::new(Respondent, "a"),
            Turn::new(Interviewer, "go on"),
            Turn::new(Respondent, "b"),
            Turn::new(Interviewer, "what do you value most"),
            Turn::new(Interviewer, "describe your future plans"),
            Turn::new(Respondent, "c"),
        ]);
        let questions = vec![
            Question { id: "early".into(), text: "Tell me about your early life.".into() },
            Question { id: "values".into(), text: "What do you value most?".into() },
            Question { id: "future".into(), text: "Describe your future plans.".into() },
        ];
        let p = parse_interview(&d, &questions, &AnchorConfig::default()).unwrap();
        assert_eq!(p.sections.iter().map(|s| s.span).collect::<Vec<_>>(), [(0, 4), (4, 5), (5, 7)]);
        assert_eq!(extract_section_respondent_text(&p, &d, "early").unwrap(), "a b");
        assert_eq!(extract_section_respondent_text(&p, &d, "values").unwrap(), "");
        assert_eq!(extract_section_respondent_text(&p, &d, "future").unwrap(), "c");
        let missing = extract_section_respondent_text(&p, &d, "nope").unwrap_err();
        assert_eq!(missing.to_string(), "section absent: question nope was not matched");
    }
}
