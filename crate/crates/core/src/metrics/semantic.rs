//! Embedding-based semantic precision.
//!
//! The score is greedy max-cosine precision: every candidate token is matched
//! to its most similar source token and the similarities are averaged. There
//! is no IDF weighting and no baseline rescaling, so values live in `[-1, 1]`.
//!
//! Embeddings come from an [`EmbeddingBackend`]. Two backends ship: a static
//! word-vector file and an HTTP endpoint returning token-level vectors. The
//! [`Embedder`] wrapper memoizes results in memory and, optionally, in the
//! shared content store.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::http::{post_json, HttpError, RetryPolicy};
use crate::metrics::lexical::tokenize;
use crate::store::{digest_parts, ContentStore};

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid embeddings: {0}")]
    Invalid(String),
    #[error("vector file {path}, line {line}: {message}")]
    VectorFile { path: String, line: usize, message: String },
    #[error("embedding endpoint: {0}")]
    Http(#[from] HttpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One vector per token, all of the same dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEmbeddings {
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    /// `false` for tokens the provider had no vector for (their vector is zero).
    pub known: Vec<bool>,
    pub dimension: usize,
}

impl TokenEmbeddings {
    pub fn new(
        tokens: Vec<String>,
        vectors: Vec<Vec<f64>>,
        dimension: usize,
    ) -> Result<Self, EmbeddingError> {
        let known = vec![true; tokens.len()];
        Self::with_known(tokens, vectors, known, dimension)
    }

    pub fn with_known(
        tokens: Vec<String>,
        vectors: Vec<Vec<f64>>,
        known: Vec<bool>,
        dimension: usize,
    ) -> Result<Self, EmbeddingError> {
        if tokens.len() != vectors.len() || known.len() != tokens.len() {
            return Err(EmbeddingError::Invalid(format!(
                "{} tokens but {} vectors",
                tokens.len(),
                vectors.len()
            )));
        }
        for v in &vectors {
            if v.len() != dimension {
                return Err(EmbeddingError::DimensionMismatch(v.len(), dimension));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::Invalid("non-finite component".into()));
            }
        }
        Ok(TokenEmbeddings { tokens, vectors, known, dimension })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Mean of the vectors of known tokens, `None` if there are none.
    pub fn mean_known(&self) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dimension];
        let mut n = 0usize;
        for (v, &k) in self.vectors.iter().zip(&self.known) {
            if k {
                n += 1;
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
            }
        }
        (n > 0).then(|| sum.into_iter().map(|s| s / n as f64).collect())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; a zero-norm side gives 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot(a, b) / denom
    }
}

/// Greedy max-cosine precision of `candidate` against `source`.
pub fn bertscore_precision(
    candidate: &TokenEmbeddings,
    source: &TokenEmbeddings,
) -> Result<f64, EmbeddingError> {
    if candidate.is_empty() || source.is_empty() {
        return Err(EmbeddingError::EmptyText);
    }
    if candidate.dimension != source.dimension {
        return Err(EmbeddingError::DimensionMismatch(candidate.dimension, source.dimension));
    }
    let source_unit: Vec<Option<Vec<f64>>> = source.vectors.iter().map(|v| unit(v)).collect();
    let mut total = 0.0;
    for c in &candidate.vectors {
        let best = match unit(c) {
            None => 0.0,
            Some(cu) => source_unit
                .iter()
                .map(|s| s.as_ref().map_or(0.0, |su| dot(&cu, su)))
                .fold(f64::NEG_INFINITY, f64::max),
        };
        total += best;
    }
    Ok(total / candidate.len() as f64)
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 0.0).then(|| v.iter().map(|x| x / n).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    HttpEndpoint,
    StaticVectorFile,
}

/// Identity of an embedding provider, recorded in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderInfo {
    pub kind: ProviderKind,
    pub id: String,
    pub dimension: usize,
}

pub trait EmbeddingBackend: Send + Sync {
    fn info(&self) -> ProviderInfo;
    fn embed_uncached(&self, text: &str) -> Result<TokenEmbeddings, EmbeddingError>;
}

/// Word vectors from a text file, one `word v1 v2 ...` per line.
///
/// A leading `count dimension` header line (word2vec text format) is skipped.
/// Texts are split with the pipeline tokenizer; out-of-vocabulary tokens get
/// a zero vector and are marked unknown.
#[derive(Debug, Clone)]
pub struct StaticVectors {
    id: String,
    dimension: usize,
    table: HashMap<String, Vec<f64>>,
}

impl StaticVectors {
    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let text = fs::read_to_string(path)?;
        let digest = digest_parts([text.as_bytes()]);
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        Self::parse(&text, &format!("static:{name}:{}", &digest[..12]), &path.display().to_string())
    }

    pub fn parse(text: &str, id: &str, origin: &str) -> Result<Self, EmbeddingError> {
        let err = |line: usize, message: String| EmbeddingError::VectorFile {
            path: origin.to_string(),
            line,
            message,
        };
        let mut table = HashMap::new();
        let mut dimension = None;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if i == 0 && rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
                continue;
            }
            let vector = rest
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(lineno, e.to_string()))?;
            if vector.is_empty() {
                return Err(err(lineno, "word without a vector".into()));
            }
            if vector.iter().any(|x| !x.is_finite()) {
                return Err(err(lineno, "non-finite component".into()));
            }
            match dimension {
                None => dimension = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(err(lineno, format!("expected {d} components, found {}", vector.len())))
                }
                _ => {}
            }
            table.insert(word.to_lowercase(), vector);
        }
        let dimension = dimension.ok_or_else(|| err(0, "no vectors".into()))?;
        Ok(StaticVectors { id: id.to_string(), dimension, table })
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.table.get(word).map(Vec::as_slice)
    }
}

impl EmbeddingBackend for StaticVectors {
    fn info(&self) -> ProviderInfo {
        ProviderInfo {
            kind: ProviderKind::StaticVectorFile,
            id: self.id.clone(),
            dimension: self.dimension,
        }
    }

    fn embed_uncached(&self, text: &str) -> Result<TokenEmbeddings, EmbeddingError> {
        let tokens = tokenize(text).tokens;
        if tokens.is_empty() {
            return Err(EmbeddingError::EmptyText);
        }
        let mut vectors = Vec::with_capacity(tokens.len());
        let mut known = Vec::with_capacity(tokens.len());
        let mut missing = 0usize;
        for t in &tokens {
            match self.table.get(t) {
                Some(v) => {
                    vectors.push(v.clone());
                    known.push(true);
                }
                None => {
                    missing += 1;
                    vectors.push(vec![0.0; self.dimension]);
                    known.push(false);
                }
            }
        }
        if missing > 0 {
            log::debug!("{missing} of {} tokens missing from {}", tokens.len(), self.id);
        }
        TokenEmbeddings::with_known(tokens, vectors, known, self.dimension)
    }
}

/// Token-level embeddings from an HTTP endpoint.
///
/// Request: `{"model": ..., "input": text}`.
/// Response: `{"tokens": [...], "vectors": [[...], ...]}`.
#[derive(Debug, Clone)]
pub struct HttpEmbeddings {
    pub url: String,
    pub model: String,
    pub dimension: usize,
    pub api_key: Option<String>,
    pub retry: RetryPolicy,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    input: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingBackend for HttpEmbeddings {
    fn info(&self) -> ProviderInfo {
        ProviderInfo {
            kind: ProviderKind::HttpEndpoint,
            id: format!("http:{}:{}", self.url, self.model),
            dimension: self.dimension,
        }
    }

    fn embed_uncached(&self, text: &str) -> Result<TokenEmbeddings, EmbeddingError> {
        let resp: EmbedResponse = post_json(
            &self.url,
            self.api_key.as_deref(),
            &EmbedRequest { model: &self.model, input: text },
            &self.retry,
        )?;
        if resp.tokens.is_empty() {
            return Err(EmbeddingError::Invalid("endpoint returned no tokens".into()));
        }
        TokenEmbeddings::new(resp.tokens, resp.vectors, self.dimension)
    }
}

/// Caching front for an embedding backend.
pub struct Embedder {
    backend: Box<dyn EmbeddingBackend>,
    info: ProviderInfo,
    memo: Mutex<HashMap<String, Arc<TokenEmbeddings>>>,
    store: Option<ContentStore>,
}

impl Embedder {
    pub fn new(backend: Box<dyn EmbeddingBackend>) -> Self {
        let info = backend.info();
        Embedder { backend, info, memo: Mutex::new(HashMap::new()), store: None }
    }

    pub fn with_store(mut self, store: ContentStore) -> Self {
        self.store = Some(store);
        self
    }

    pub fn info(&self) -> &ProviderInfo {
        &self.info
    }

    pub fn embed(&self, text: &str) -> Result<Arc<TokenEmbeddings>, EmbeddingError> {
        if text.trim().is_empty() {
            return Err(EmbeddingError::EmptyText);
        }
        let key = digest_parts([b"embedding".as_slice(), self.info.id.as_bytes(), text.as_bytes()]);
        if let Some(hit) = self.memo.lock().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        let cached = match &self.store {
            Some(store) => store
                .get(&key)?
                .and_then(|s| serde_json::from_str::<TokenEmbeddings>(&s).ok()),
            None => None,
        };
        let emb = match cached {
            Some(e) => e,
            None => {
                let e = self.backend.embed_uncached(text)?;
                if e.dimension != self.info.dimension {
                    return Err(EmbeddingError::DimensionMismatch(e.dimension, self.info.dimension));
                }
                if let Some(store) = &self.store {
                    store.put(&key, &serde_json::to_string(&e).expect("embeddings serialize"))?;
                }
                e
            }
        };
        let emb = Arc::new(emb);
        self.memo.lock().unwrap().insert(key, Arc::clone(&emb));
        Ok(emb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn emb(vectors: &[&[f64]]) -> TokenEmbeddings {
        let dim = vectors[0].len();
        TokenEmbeddings::new(
            (0..vectors.len()).map(|i| format!("t{i}")).collect(),
            vectors.iter().map(|v| v.to_vec()).collect(),
            dim,
        )
        .unwrap()
    }

    #[test]
    fn identical_embeddings_score_one() {
        let e = emb(&[&[1.0, 2.0], &[-3.0, 0.5]]);
        assert!((bertscore_precision(&e, &e).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_enumerated_two_by_three() {
        // cos matrix rows: c1 = (1,0): [1, 0, 1/√2]; c2 = (0,2): [0, 1, 1/√2]
        // plus a negative source direction that never wins.
        let cand = emb(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let src = emb(&[&[3.0, 0.0], &[0.0, 0.5], &[1.0, 1.0]]);
        assert!((bertscore_precision(&cand, &src).unwrap() - 1.0).abs() < 1e-12);

        let cand = emb(&[&[1.0, 1.0], &[1.0, -1.0]]);
        let src = emb(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, -1.0]]);
        // c1: max(1/√2, -1/√2, -1/√2) = 1/√2 ; c2: max(1/√2, -1/√2, 1/√2) = 1/√2
        let expected = std::f64::consts::FRAC_1_SQRT_2;
        assert!((bertscore_precision(&cand, &src).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_scores_zero() {
        let cand = emb(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let src = emb(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, -2.0]]);
        assert_eq!(bertscore_precision(&cand, &src).unwrap(), 0.0);
    }

    #[test]
    fn zero_vectors_contribute_zero() {
        let cand = emb(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let src = emb(&[&[1.0, 0.0]]);
        assert!((bertscore_precision(&cand, &src).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = emb(&[&[1.0, 0.0]]);
        let b = emb(&[&[1.0, 0.0, 0.0]]);
        assert!(matches!(bertscore_precision(&a, &b), Err(EmbeddingError::DimensionMismatch(2, 3))));
    }

    #[test]
    fn static_vectors_lookup_and_oov() {
        let sv = StaticVectors::parse("2 2\ncat 1 0\ndog 0.5 -0.25\n", "t", "mem").unwrap();
        let e = sv.embed_uncached("Dog, cat, emu").unwrap();
        assert_eq!(e.tokens, ["dog", "cat", "emu"]);
        assert_eq!(e.vectors[0], [0.5, -0.25]);
        assert_eq!(e.known, [true, true, false]);
        assert_eq!(e.vectors[2], [0.0, 0.0]);
        assert_eq!(e.mean_known().unwrap(), vec![0.75, -0.125]);
    }

    #[test]
    fn static_vectors_reject_ragged_rows() {
        let err = StaticVectors::parse("a 1 2\nb 1\n", "t", "mem").unwrap_err();
        assert!(matches!(err, EmbeddingError::VectorFile { line: 2, .. }));
    }

    struct Counting {
        inner: StaticVectors,
        calls: Arc<AtomicUsize>,
    }

    impl EmbeddingBackend for Counting {
        fn info(&self) -> ProviderInfo {
            self.inner.info()
        }
        fn embed_uncached(&self, text: &str) -> Result<TokenEmbeddings, EmbeddingError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.inner.embed_uncached(text)
        }
    }

    #[test]
    fn embedder_caches_in_memory_and_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let calls = Arc::new(AtomicUsize::new(0));
        let make = || Counting {
            inner: StaticVectors::parse("a 1 0\n", "t", "mem").unwrap(),
            calls: Arc::clone(&calls),
        };
        let store = ContentStore::open(dir.path()).unwrap();
        let e1 = Embedder::new(Box::new(make())).with_store(store.clone());
        let x = e1.embed("a b").unwrap();
        let y = e1.embed("a b").unwrap();
        assert_eq!(x, y);
        assert_eq!(calls.load(Ordering::SeqCst), 1);

        let e2 = Embedder::new(Box::new(make())).with_store(store);
        assert_eq!(*e2.embed("a b").unwrap(), *x);
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        assert!(matches!(e2.embed("  "), Err(EmbeddingError::EmptyText)));
    }

    #[test]
    fn http_backend_round_trip() {
        use crate::http::testing::CannedServer;
        let server = CannedServer::start(vec![(
            200,
            r#"{"tokens": ["hi", "there"], "vectors": [[1, 0], [0, 1]]}"#.into(),
        )]);
        let backend = HttpEmbeddings {
            url: server.url.clone(),
            model: "m".into(),
            dimension: 2,
            api_key: None,
            retry: RetryPolicy::default(),
        };
        let e = backend.embed_uncached("hi there").unwrap();
        assert_eq!(e.tokens, ["hi", "there"]);
        let reqs = server.finish();
        let body: serde_json::Value = serde_json::from_str(&reqs[0]).unwrap();
        assert_eq!(body["input"], "hi there");
        assert_eq!(body["model"], "m");
    }
}
