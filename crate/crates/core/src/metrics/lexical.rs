//! Tokenization and word-overlap precision metrics.
//!
//! Every text in the pipeline goes through [`tokenize`]: lowercase, split on
//! anything that is not a Unicode alphanumeric character, no stemming and no
//! stop-word removal. ROUGE is computed on these surface forms.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Lowercased word tokens of one text.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    /// Length in bytes of the text the tokens were taken from.
    pub source_len: usize,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let tokens: Vec<String> = iter.into_iter().map(Into::into).collect();
        let source_len = tokens.iter().map(String::len).sum::<usize>()
            + tokens.len().saturating_sub(1);
        TokenSequence { tokens, source_len }
    }
}

/// Splits `text` into lowercase alphanumeric runs.
///
/// Apostrophes split words, so `"Don't"` becomes `["don", "t"]`.
pub fn tokenize(text: &str) -> TokenSequence {
    let tokens = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect();
    TokenSequence {
        tokens,
        source_len: text.len(),
    }
}

/// Clipped unigram precision of `candidate` against `source`.
///
/// Each source token can be matched at most once. An empty candidate scores 0.
pub fn rouge1_precision(candidate: &TokenSequence, source: &TokenSequence) -> f64 {
    if candidate.is_empty() {
        log::warn!("empty candidate summary scored as ROUGE-1 precision 0");
        return 0.0;
    }
    let mut available: HashMap<&str, usize> = HashMap::new();
    for token in &source.tokens {
        *available.entry(token.as_str()).or_default() += 1;
    }
    let mut matched = 0usize;
    for token in &candidate.tokens {
        if let Some(left) = available.get_mut(token.as_str()) {
            if *left > 0 {
                *left -= 1;
                matched += 1;
            }
        }
    }
    matched as f64 / candidate.len() as f64
}

/// Longest-common-subsequence precision of `candidate` against `source`.
pub fn rouge_l_precision(candidate: &TokenSequence, source: &TokenSequence) -> f64 {
    if candidate.is_empty() {
        log::warn!("empty candidate summary scored as ROUGE-L precision 0");
        return 0.0;
    }
    lcs_len(&candidate.tokens, &source.tokens) as f64 / candidate.len() as f64
}

/// LCS length with a single DP row sized by the shorter sequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; short.len() + 1];
    for x in long {
        let mut diag = 0;
        for (j, y) in short.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[short.len()]
}

/// Per-document scores that feed a group-level similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentScores<'a> {
    pub document_id: &'a str,
    /// One metric value per usable baseline sample.
    pub sample_scores: Vec<f64>,
}

/// Mean over samples of one document, or `None` when it has no usable samples.
pub fn document_mean(sample_scores: &[f64]) -> Option<f64> {
    if sample_scores.is_empty() {
        None
    } else {
        Some(sample_scores.iter().sum::<f64>() / sample_scores.len() as f64)
    }
}

/// Group similarity: average each document over its samples, then average
/// the documents with equal weight.
///
/// Documents without usable samples are dropped with a warning. Returns
/// `None` when no document remains.
pub fn sim_group(docs: &[DocumentScores<'_>]) -> Option<f64> {
    let per_doc: Vec<f64> = docs
        .iter()
        .filter_map(|d| {
            let mean = document_mean(&d.sample_scores);
            if mean.is_none() {
                log::warn!("document {} has no usable baseline samples", d.document_id);
            }
            mean
        })
        .collect();
    document_mean(&per_doc)
}
