//! Offline chat provider for tests and dry runs.
//!
//! [`MockChatClient::extractive`] builds summaries by picking respondent
//! sentences from the transcript in the prompt, and core values from keyword
//! rules. Its random choices depend only on the respondent speech and the
//! seed, so two interviews with the same narrative get the same summaries
//! whatever their demographics or prompt condition. Two optional
//! perturbations make it biased on purpose:
//!
//! * `inflate` swaps one word for another in every summary written for one
//!   group. Sentences containing the replacement word are never selected and
//!   sentences containing the original word always are.
//! * `drop_theme` removes one theme from the demographic-conditioned
//!   summaries of one group.
//!
//! The group of a baseline prompt cannot be read from the prompt, so the
//! client is given a map from [`transcript_key`] to group key.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusFormat;
use crate::http::HttpError;
use crate::metrics::lexical::tokenize;
use crate::stats::derive_seed;
use crate::store::digest_parts;
use crate::summarizer::client::{ChatClient, ChatRequest};
use crate::summarizer::prompt::{stated_group, transcript_of, RESPONSE_TAG_INSTRUCTION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordSwap {
    pub group: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThemeDrop {
    pub group: String,
    pub theme: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockConfig {
    /// Chance that an ordinary respondent sentence enters the summary.
    pub keep_probability: f64,
    /// Chance that a theme whose keywords occur is listed.
    pub theme_keep_probability: f64,
    /// Theme name to trigger keywords.
    pub themes: BTreeMap<String, Vec<String>>,
    pub inflate: Option<WordSwap>,
    pub drop_theme: Option<ThemeDrop>,
}

impl Default for MockConfig {
    fn default() -> Self {
        let themes = [
            ("family", &["family", "mother", "father", "children", "daughter", "son"][..]),
            ("faith", &["church", "god", "faith", "pray", "prayer"][..]),
            ("hard work", &["work", "job", "worked", "career"][..]),
            ("education", &["school", "college", "teacher", "learn"][..]),
            ("community", &["neighbors", "community", "town", "friends"][..]),
            ("resilience", &["hard", "survive", "struggle", "overcome"][..]),
        ]
        .into_iter()
        .map(|(t, ks)| (t.to_string(), ks.iter().map(|k| k.to_string()).collect()))
        .collect();
        MockConfig {
            keep_probability: 0.6,
            theme_keep_probability: 0.8,
            themes,
            inflate: None,
            drop_theme: None,
        }
    }
}

/// Lookup key for a rendered transcript.
pub fn transcript_key(transcript: &str) -> String {
    digest_parts(["mock-transcript", transcript])
}

type Responder = dyn Fn(&ChatRequest) -> Result<String, HttpError> + Send + Sync;

pub struct MockChatClient {
    responder: Box<Responder>,
    calls: AtomicUsize,
}

impl MockChatClient {
    /// Always answers `text`.
    pub fn fixed(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::from_fn(move |_| Ok(text.clone()))
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&ChatRequest) -> Result<String, HttpError> + Send + Sync + 'static,
    {
        MockChatClient { responder: Box::new(f), calls: AtomicUsize::new(0) }
    }

    /// Extractive summarizer; `groups` maps [`transcript_key`] to group key.
    pub fn extractive(config: MockConfig, format: CorpusFormat, groups: HashMap<String, String>) -> Self {
        Self::from_fn(move |req| Ok(extractive_reply(&config, &format, &groups, req)))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ChatClient for MockChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, HttpError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.responder)(request)
    }
}

fn unit(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (k, &(i, c)) in chars.iter().enumerate() {
        let at_boundary = chars.get(k + 1).map_or(true, |&(_, n)| n.is_whitespace());
        if matches!(c, '.' | '!' | '?') && at_boundary {
            let s = text[start..i + c.len_utf8()].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = i + c.len_utf8();
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

fn has_word(sentence: &str, word: &str) -> bool {
    tokenize(sentence).tokens.iter().any(|t| t == word)
}

/// Replaces whole-word, case-insensitive occurrences of `from`.
fn swap_word(sentence: &str, from: &str, to: &str) -> String {
    let mut out = String::with_capacity(sentence.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        if word.to_lowercase() == from {
            out.push_str(to);
        } else {
            out.push_str(word);
        }
        word.clear();
    };
    for c in sentence.chars() {
        if c.is_alphanumeric() {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);
    out
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn extractive_reply(
    config: &MockConfig,
    format: &CorpusFormat,
    groups: &HashMap<String, String>,
    req: &ChatRequest,
) -> String {
    let user = req.user();
    let transcript = transcript_of(user).unwrap_or(user);
    let stated = stated_group(user);
    let group = stated.map(str::to_string).or_else(|| groups.get(&transcript_key(transcript)).cloned());

    let respondent: Vec<&str> = transcript
        .lines()
        .filter(|l| !l.trim_start().starts_with(&format.interviewer_tag))
        .map(|l| match &format.respondent_tag {
            Some(tag) => l.trim_start().strip_prefix(tag.as_str()).unwrap_or(l).trim(),
            None => l.trim(),
        })
        .collect();
    let speech = respondent.join(" ");
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(req.seed, &["mock", &speech]));

    let swap = config.inflate.as_ref();
    let mut kept = Vec::new();
    for s in sentences(&speech) {
        let draw = unit(&mut rng);
        let forced_in = swap.is_some_and(|w| has_word(s, &w.from));
        let forced_out = swap.is_some_and(|w| has_word(s, &w.to));
        if forced_in || (!forced_out && draw < config.keep_probability) {
            kept.push(s.to_string());
        }
    }
    if kept.is_empty() {
        if let Some(first) = sentences(&speech).first() {
            kept.push(first.to_string());
        }
    }
    if let (Some(w), Some(g)) = (swap, group.as_deref()) {
        if w.group == g {
            kept = kept.iter().map(|s| swap_word(s, &w.from, &w.to)).collect();
        }
    }

    let tokens = tokenize(&speech).tokens;
    let mut themes = Vec::new();
    for (theme, keywords) in &config.themes {
        let draw = unit(&mut rng);
        if keywords.iter().any(|k| tokens.contains(k)) && draw < config.theme_keep_probability {
            themes.push(theme.clone());
        }
    }
    if let (Some(d), Some(g)) = (&config.drop_theme, stated) {
        if d.group == g {
            themes.retain(|t| *t != d.theme);
        }
    }
    if themes.is_empty() {
        themes.push("personal growth".to_string());
    }

    let mut out = format!("Summary:\n{}\n\nCore Values:\n", kept.join(" "));
    for t in &themes {
        out.push_str(&format!("- {}\n", capitalize(t)));
    }
    if user.ends_with(RESPONSE_TAG_INSTRUCTION) {
        out = format!("<response>\n{out}</response>");
    }
    out
}
