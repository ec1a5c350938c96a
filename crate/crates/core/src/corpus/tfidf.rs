//! TF-IDF vectors for matching interview questions to interviewer turns.
//!
//! Raw term counts times smoothed IDF, `ln((1 + n) / (1 + df)) + 1`, then L2
//! normalized. With a single text every IDF equals 1. Tokens come from
//! [`tokenize`](crate::metrics::lexical::tokenize).

use std::collections::BTreeMap;

use crate::corpus::CorpusError;
use crate::metrics::lexical::tokenize;

/// Unit-length sparse vector, entries sorted by term index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cosine of two unit vectors (0 if either is zero).
    pub fn cosine(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut sum) = (0, 0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, x) = self.entries[i];
            let (b, y) = other.entries[j];
            match a.cmp(&b) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += x * y;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum.clamp(-1.0, 1.0)
    }
}

/// Vocabulary and IDF weights fitted on a set of texts.
#[derive(Debug, Clone)]
pub struct TfidfModel {
    vocab: BTreeMap<String, usize>,
    idf: Vec<f64>,
}

impl TfidfModel {
    pub fn fit<S: AsRef<str>>(texts: &[S]) -> Result<Self, CorpusError> {
        let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t.as_ref()).tokens).collect();
        if docs.iter().all(Vec::is_empty) {
            return Err(CorpusError::NoTokens);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in &docs {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let n = docs.len() as f64;
        let mut vocab = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (i, (term, count)) in df.into_iter().enumerate() {
            vocab.insert(term.to_string(), i);
            idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
        }
        Ok(TfidfModel { vocab, idf })
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocab.get(term).map(|&i| self.idf[i])
    }

    /// Vector of `text`; terms outside the fitted vocabulary are ignored.
    pub fn transform(&self, text: &str) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokenize(text).tokens {
            if let Some(&i) = self.vocab.get(&t) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts.into_iter().map(|(i, c)| (i, c * self.idf[i])).collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut entries {
                *w /= norm;
            }
        }
        SparseVector { entries }
    }
}

/// Fits on `texts` and returns one vector per text.
pub fn build_tfidf_vectors<S: AsRef<str>>(texts: &[S]) -> Result<Vec<SparseVector>, CorpusError> {
    let model = TfidfModel::fit(texts)?;
    Ok(texts.iter().map(|t| model.transform(t.as_ref())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_vocabulary() {
        let v = build_tfidf_vectors(&["cat sat", "cat ran"]).unwrap();
        let dims = |s: &SparseVector| s.entries().iter().map(|e| e.0).collect::<Vec<_>>();
        let shared: Vec<usize> = dims(&v[0]).into_iter().filter(|d| dims(&v[1]).contains(d)).collect();
        assert_eq!(shared.len(), 1);
        // idf(cat) = 1, idf(sat) = ln(3/2) + 1; cos = 1 / (1 + idf(sat)^2)
        let idf_rare = (1.5f64).ln() + 1.0;
        assert!((v[0].cosine(&v[1]) - 1.0 / (1.0 + idf_rare * idf_rare)).abs() < 1e-12);
    }

    #[test]
    fn single_text_has_flat_idf() {
        let m = TfidfModel::fit(&["a b b"]).unwrap();
        assert_eq!(m.idf("a"), m.idf("b"));
        assert_eq!(m.idf("a"), Some(1.0));
        let v = m.transform("a b b");
        let norm: f64 = v.entries().iter().map(|e| e.1 * e.1).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_texts_have_cosine_one() {
        let v = build_tfidf_vectors(&["a b", "a b"]).unwrap();
        assert!((v[0].cosine(&v[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_texts() {
        assert!(matches!(build_tfidf_vectors(&["", " ,"]), Err(CorpusError::NoTokens)));
        let v = build_tfidf_vectors(&["a", ""]).unwrap();
        assert!(v[1].is_zero());
        assert_eq!(v[0].cosine(&v[1]), 0.0);
    }
}
