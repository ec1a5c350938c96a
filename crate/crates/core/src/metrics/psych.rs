//! Lexicon-based psychological scoring and the symmetric relative shift.
//!
//! Three scorers produce per-text attribute values:
//!
//! * a categorical dictionary (LIWC-style `.dic` file) gives, per category,
//!   the share of tokens that match the category;
//! * a continuous lexicon (VAD-style TSV) gives, per dimension, the mean score
//!   of the tokens found in the lexicon;
//! * the SCM projection gives warmth and competence as dot products of the
//!   mean text embedding with two unit axes derived from seed words.
//!
//! For one document with baseline summaries, the shift of an attribute is
//! `2 (mu - f) / (|mu| + |f|)` where `mu` is the mean over summaries and `f`
//! the document's own value. It is 0 when the denominator is 0.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::metrics::lexical::tokenize;
use crate::metrics::semantic::{dot, norm, EmbeddingError, Embedder};

#[derive(Debug, thiserror::Error)]
pub enum PsychError {
    #[error("{origin}, line {line}: {message}")]
    Format { origin: String, line: usize, message: String },
    #[error("{origin}: word {word:?} references unknown category {id}")]
    UnknownCategory { origin: String, word: String, id: String },
    #[error("SCM axis {axis}: {message}")]
    DegenerateAxis { axis: &'static str, message: String },
    #[error("no document in the group has a defined shift")]
    EmptyGroup,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("SCM seed file: {0}")]
    Seeds(String),
}

/// Attribute name → value for one text. `None` marks an undefined value.
pub type PsychScoreVector = BTreeMap<String, Option<f64>>;

/// A `.dic`-style dictionary: `%`, category table, `%`, word entries.
///
/// ```text
/// %
/// 1   family
/// 2   work
/// %
/// mom     1
/// work*   2
/// ```
#[derive(Debug, Clone, Default)]
pub struct CategoricalLexicon {
    pub categories: Vec<String>,
    literals: HashMap<String, BTreeSet<usize>>,
    stems: HashMap<String, BTreeSet<usize>>,
}

impl CategoricalLexicon {
    pub fn load(path: &Path) -> Result<Self, PsychError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, PsychError> {
        let format = |line: usize, message: &str| PsychError::Format {
            origin: origin.to_string(),
            line,
            message: message.to_string(),
        };
        #[derive(PartialEq)]
        enum Part {
            Start,
            Categories,
            Words,
        }
        let mut part = Part::Start;
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut lex = CategoricalLexicon::default();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line == "%" {
                part = match part {
                    Part::Start => Part::Categories,
                    Part::Categories => Part::Words,
                    Part::Words => return Err(format(lineno, "unexpected third '%' marker")),
                };
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match part {
                Part::Start => return Err(format(lineno, "expected '%' before the category table")),
                Part::Categories => {
                    if fields.len() != 2 {
                        return Err(format(lineno, "category lines need an id and a name"));
                    }
                    if ids.contains_key(fields[0]) {
                        return Err(format(lineno, "duplicate category id"));
                    }
                    ids.insert(fields[0].to_string(), lex.categories.len());
                    lex.categories.push(fields[1].to_string());
                }
                Part::Words => {
                    let word = fields[0].to_lowercase();
                    if fields.len() < 2 {
                        return Err(format(lineno, "word entry without categories"));
                    }
                    let mut cats = BTreeSet::new();
                    for id in &fields[1..] {
                        let idx = ids.get(*id).ok_or_else(|| PsychError::UnknownCategory {
                            origin: origin.to_string(),
                            word: word.clone(),
                            id: id.to_string(),
                        })?;
                        cats.insert(*idx);
                    }
                    let (stem, is_stem) = match word.strip_suffix('*') {
                        Some(s) => (s.to_string(), true),
                        None => (word.clone(), false),
                    };
                    if stem.is_empty() || stem.contains('*') {
                        return Err(format(lineno, "wildcards are only allowed once, at the end of a word"));
                    }
                    let map = if is_stem { &mut lex.stems } else { &mut lex.literals };
                    map.entry(stem).or_default().extend(cats);
                }
            }
        }
        if part != Part::Words {
            return Err(format(text.lines().count(), "missing '%' marker after the category table"));
        }
        Ok(lex)
    }

    pub fn len(&self) -> usize {
        self.literals.len() + self.stems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Category ids of the entry matching `token`.
    ///
    /// An exact literal wins; otherwise the longest matching stem.
    pub fn lookup(&self, token: &str) -> Option<&BTreeSet<usize>> {
        if let Some(c) = self.literals.get(token) {
            return Some(c);
        }
        let ends = std::iter::once(token.len()).chain(token.char_indices().rev().map(|(i, _)| i));
        for end in ends.filter(|&e| e > 0) {
            if let Some(c) = self.stems.get(&token[..end]) {
                return Some(c);
            }
        }
        None
    }

    /// Share of tokens matching each category, keyed `"{prefix}:{category}"`.
    pub fn rates(&self, text: &str, prefix: &str) -> PsychScoreVector {
        let tokens = tokenize(text).tokens;
        let mut counts = vec![0usize; self.categories.len()];
        for t in &tokens {
            if let Some(cats) = self.lookup(t) {
                for &c in cats {
                    counts[c] += 1;
                }
            }
        }
        if tokens.is_empty() {
            log::warn!("categorical rates of an empty text are all zero");
        }
        self.categories
            .iter()
            .zip(counts)
            .map(|(name, n)| {
                let rate = if tokens.is_empty() { 0.0 } else { n as f64 / tokens.len() as f64 };
                (format!("{prefix}:{name}"), Some(rate))
            })
            .collect()
    }
}

/// Word → one score per dimension, from a TSV file.
///
/// A header row (`Word<TAB>Valence<TAB>Arousal<TAB>Dominance`) names the
/// dimensions; without one, three columns are read as valence, arousal and
/// dominance and other widths as `dim1..dimN`.
#[derive(Debug, Clone)]
pub struct ContinuousLexicon {
    pub dimensions: Vec<String>,
    entries: HashMap<String, Vec<f64>>,
}

impl ContinuousLexicon {
    pub fn load(path: &Path) -> Result<Self, PsychError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, PsychError> {
        let format = |line: usize, message: String| PsychError::Format {
            origin: origin.to_string(),
            line,
            message,
        };
        let mut dimensions: Option<Vec<String>> = None;
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if fields.len() < 2 {
                return Err(format(lineno, "expected a word and at least one score".into()));
            }
            let parsed: Result<Vec<f64>, _> = fields[1..].iter().map(|f| f.parse::<f64>()).collect();
            let scores = match (parsed, &dimensions) {
                (Err(_), None) => {
                    dimensions = Some(fields[1..].iter().map(|f| f.to_lowercase()).collect());
                    continue;
                }
                (Err(e), Some(_)) => return Err(format(lineno, e.to_string())),
                (Ok(s), _) => s,
            };
            let dims = dimensions.get_or_insert_with(|| match scores.len() {
                3 => vec!["valence".into(), "arousal".into(), "dominance".into()],
                n => (1..=n).map(|i| format!("dim{i}")).collect(),
            });
            if scores.len() != dims.len() {
                return Err(format(lineno, format!("expected {} scores, found {}", dims.len(), scores.len())));
            }
            if scores.iter().any(|s| !s.is_finite()) {
                return Err(format(lineno, "non-finite score".into()));
            }
            entries.insert(fields[0].to_lowercase(), scores);
        }
        let dimensions = dimensions.filter(|d| !d.is_empty()).ok_or_else(|| format(0, "no dimensions".into()))?;
        Ok(ContinuousLexicon { dimensions, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Token-level mean per dimension over tokens present in the lexicon.
    ///
    /// A dimension with no matched tokens is `None`, not 0.
    pub fn means(&self, text: &str, prefix: &str) -> PsychScoreVector {
        let mut sums = vec![0.0; self.dimensions.len()];
        let mut n = 0usize;
        for t in tokenize(text).tokens {
            if let Some(scores) = self.entries.get(&t) {
                n += 1;
                for (s, x) in sums.iter_mut().zip(scores) {
                    *s += x;
                }
            }
        }
        self.dimensions
            .iter()
            .zip(sums)
            .map(|(d, s)| (format!("{prefix}:{d}"), (n > 0).then(|| s / n as f64)))
            .collect()
    }
}

/// Seed words for the warmth and competence axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmSeeds {
    pub warm: Vec<String>,
    pub cold: Vec<String>,
    pub competent: Vec<String>,
    pub incompetent: Vec<String>,
}

impl Default for ScmSeeds {
    /// Trait words from the published warmth and competence scales of the
    /// Stereotype Content Model literature, with antonyms for the low poles.
    fn default() -> Self {
        let words = |ws: &[&str]| ws.iter().map(|w| w.to_string()).collect();
        ScmSeeds {
            warm: words(&["warm", "friendly", "kind", "sincere", "trustworthy", "caring", "tolerant", "good"]),
            cold: words(&["cold", "unfriendly", "unkind", "insincere", "untrustworthy", "uncaring", "intolerant", "bad"]),
            competent: words(&["competent", "capable", "intelligent", "skilled", "efficient", "confident", "independent", "competitive"]),
            incompetent: words(&["incompetent", "incapable", "unintelligent", "unskilled", "inefficient", "insecure", "dependent", "lazy"]),
        }
    }
}

impl ScmSeeds {
    /// Reads a TOML file with `warm`, `cold`, `competent` and `incompetent` arrays.
    pub fn load(path: &Path) -> Result<Self, PsychError> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| PsychError::Seeds(e.to_string()))
    }
}

/// Unit warmth and competence directions in embedding space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmAxes {
    pub warmth: Vec<f64>,
    pub competence: Vec<f64>,
    /// Seed words that had an embedding, per list, in input order.
    pub seeds_used: ScmSeeds,
}

/// Builds each axis as `mean(high pole) - mean(low pole)`, normalized.
///
/// Seeds without an embedding are dropped with a warning.
pub fn build_scm_axes(seeds: &ScmSeeds, embedder: &Embedder) -> Result<ScmAxes, PsychError> {
    let (warm_mean, warm) = seed_mean(&seeds.warm, "warm", embedder)?;
    let (cold_mean, cold) = seed_mean(&seeds.cold, "cold", embedder)?;
    let (comp_mean, competent) = seed_mean(&seeds.competent, "competent", embedder)?;
    let (incomp_mean, incompetent) = seed_mean(&seeds.incompetent, "incompetent", embedder)?;
    Ok(ScmAxes {
        warmth: unit_difference(&warm_mean, &cold_mean, "warmth")?,
        competence: unit_difference(&comp_mean, &incomp_mean, "competence")?,
        seeds_used: ScmSeeds { warm, cold, competent, incompetent },
    })
}

fn seed_mean(
    words: &[String],
    list: &'static str,
    embedder: &Embedder,
) -> Result<(Vec<f64>, Vec<String>), PsychError> {
    let mut sum: Option<Vec<f64>> = None;
    let mut used = Vec::new();
    for w in words {
        let vector = match embedder.embed(w) {
            Ok(e) => e.mean_known(),
            Err(EmbeddingError::EmptyText) => None,
            Err(e) => return Err(e.into()),
        };
        match vector {
            Some(v) => {
                match &mut sum {
                    None => sum = Some(v),
                    Some(s) => s.iter_mut().zip(&v).for_each(|(a, b)| *a += b),
                }
                used.push(w.clone());
            }
            None => log::warn!("SCM seed {w:?} ({list}) has no embedding; dropped"),
        }
    }
    let sum = sum.ok_or(PsychError::DegenerateAxis {
        axis: list,
        message: "no seed word could be embedded".into(),
    })?;
    let n = used.len() as f64;
    Ok((sum.into_iter().map(|x| x / n).collect(), used))
}

fn unit_difference(high: &[f64], low: &[f64], axis: &'static str) -> Result<Vec<f64>, PsychError> {
    let diff: Vec<f64> = high.iter().zip(low).map(|(a, b)| a - b).collect();
    let n = norm(&diff);
    if n <= 1e-12 {
        return Err(PsychError::DegenerateAxis {
            axis,
            message: "high and low seed means coincide".into(),
        });
    }
    Ok(diff.into_iter().map(|x| x / n).collect())
}

/// Projects a text vector on both axes.
pub fn project_vector(vector: &[f64], axes: &ScmAxes) -> (f64, f64) {
    (dot(vector, &axes.warmth), dot(vector, &axes.competence))
}

/// Warmth and competence of `text`: the mean of its known token vectors
/// projected on each axis. `None` when no token has an embedding.
pub fn scm_project(
    text: &str,
    axes: &ScmAxes,
    embedder: &Embedder,
) -> Result<Option<(f64, f64)>, PsychError> {
    if text.trim().is_empty() {
        log::warn!("SCM projection of an empty text is undefined");
        return Ok(None);
    }
    let emb = match embedder.embed(text) {
        Ok(e) => e,
        Err(EmbeddingError::EmptyText) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    Ok(emb.mean_known().map(|v| project_vector(&v, axes)))
}

/// `2 (mu - f) / (|mu| + |f|)`, or 0 when both are 0.
pub fn psych_shift(summary_mean: f64, document: f64) -> f64 {
    let denom = summary_mean.abs() + document.abs();
    if denom == 0.0 {
        0.0
    } else {
        2.0 * (summary_mean - document) / denom
    }
}

/// Shift of one document given its own score and its usable samples' scores.
///
/// Undefined sample scores are ignored; `None` when no sample score or the
/// document score is undefined.
pub fn document_shift(document: Option<f64>, samples: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = samples.iter().flatten().copied().collect();
    if defined.is_empty() {
        return None;
    }
    let mu = defined.iter().sum::<f64>() / defined.len() as f64;
    document.map(|f| psych_shift(mu, f))
}

/// Unweighted mean of the defined per-document shifts.
pub fn psych_group(shifts: &[Option<f64>]) -> Result<f64, PsychError> {
    let defined: Vec<f64> = shifts.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(PsychError::EmptyGroup);
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}

/// All configured psychological scorers.
pub struct PsychScorer<'a> {
    pub categorical: Option<&'a CategoricalLexicon>,
    pub continuous: Option<&'a ContinuousLexicon>,
    pub scm: Option<(&'a ScmAxes, &'a Embedder)>,
}

impl PsychScorer<'_> {
    /// Attribute names in report order.
    pub fn attributes(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(l) = self.categorical {
            out.extend(l.categories.iter().map(|c| format!("liwc:{c}")));
        }
        if let Some(l) = self.continuous {
            out.extend(l.dimensions.iter().map(|d| format!("vad:{d}")));
        }
        if self.scm.is_some() {
            out.push("scm:warmth".into());
            out.push("scm:competence".into());
        }
        out
    }

    pub fn score(&self, text: &str) -> Result<PsychScoreVector, PsychError> {
        let mut out = PsychScoreVector::new();
        if let Some(l) = self.categorical {
            out.extend(l.rates(text, "liwc"));
        }
        if let Some(l) = self.continuous {
            out.extend(l.means(text, "vad"));
        }
        if let Some((axes, embedder)) = self.scm {
            let p = scm_project(text, axes, embedder)?;
            out.insert("scm:warmth".into(), p.map(|p| p.0));
            out.insert("scm:competence".into(), p.map(|p| p.1));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::semantic::StaticVectors;

    const DIC: &str = "%\n1\tfamily\n2\twork\n%\nmom\t1\ndad\t1\nwork*\t2\n";

    #[test]
    fn loads_small_dictionary() {
        let lex = CategoricalLexicon::parse(DIC, "t").unwrap();
        assert_eq!(lex.categories, ["family", "work"]);
        assert_eq!(lex.len(), 3);
    }

    #[test]
    fn wildcard_matches_stem() {
        let lex = CategoricalLexicon::parse(DIC, "t").unwrap();
        for w in ["work", "working", "worked"] {
            assert!(lex.lookup(w).is_some(), "{w}");
        }
        assert!(lex.lookup("wor").is_none());
    }

    #[test]
    fn longest_prefix_wins() {
        let dic = "%\n1 a\n2 b\n3 c\n%\nhap* 1\nhappi* 2\nhappiness 3\n";
        let lex = CategoricalLexicon::parse(dic, "t").unwrap();
        let ids = |w| lex.lookup(w).unwrap().iter().copied().collect::<Vec<_>>();
        assert_eq!(ids("happy"), [0]);
        assert_eq!(ids("happily"), [1]);
        assert_eq!(ids("happiness"), [2]);
    }

    #[test]
    fn duplicate_words_merge() {
        let dic = "%\n1 a\n2 b\n%\nx 1\nx 2\n";
        let lex = CategoricalLexicon::parse(dic, "t").unwrap();
        assert_eq!(lex.lookup("x").unwrap().len(), 2);
    }

    #[test]
    fn dictionary_errors_carry_location() {
        let err = CategoricalLexicon::parse("%\n1 a\n%\nword\n", "t").unwrap_err();
        assert!(matches!(err, PsychError::Format { line: 4, .. }), "{err}");
        let err = CategoricalLexicon::parse("%\n1 a\n%\nword 7\n", "t").unwrap_err();
        assert!(matches!(err, PsychError::UnknownCategory { ref word, .. } if word == "word"));
        let err = CategoricalLexicon::parse("%\n1 a\n%\nw*rd 1\n", "t").unwrap_err();
        assert!(matches!(err, PsychError::Format { line: 4, .. }));
    }

    #[test]
    fn rates_count_matches() {
        let lex = CategoricalLexicon::parse(DIC, "t").unwrap();
        let r = lex.rates("mom dad ran", "liwc");
        assert!((r["liwc:family"].unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r["liwc:work"], Some(0.0));
        assert_eq!(lex.rates("Working!", "liwc")["liwc:work"], Some(1.0));
        assert_eq!(lex.rates("", "liwc")["liwc:family"], Some(0.0));
    }

    #[test]
    fn continuous_means() {
        let lex = ContinuousLexicon::parse("Word\tValence\nhappy\t0.9\nsad\t0.1\n", "t").unwrap();
        assert_eq!(lex.dimensions, ["valence"]);
        assert!((lex.means("happy sad", "vad")["vad:valence"].unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(lex.means("nothing here", "vad")["vad:valence"], None);
        assert_eq!(lex.means("so happy", "vad")["vad:valence"], Some(0.9));
    }

    #[test]
    fn continuous_headerless_defaults_to_vad() {
        let lex = ContinuousLexicon::parse("a\t1\t2\t3\n", "t").unwrap();
        assert_eq!(lex.dimensions, ["valence", "arousal", "dominance"]);
        assert!(ContinuousLexicon::parse("a\t1\t2\nb\t1\n", "t").is_err());
    }

    fn embedder(vectors: &str) -> Embedder {
        Embedder::new(Box::new(StaticVectors::parse(vectors, "t", "mem").unwrap()))
    }

    fn seeds(w: &[&str], c: &[&str]) -> ScmSeeds {
        let v = |ws: &[&str]| ws.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        ScmSeeds { warm: v(w), cold: v(c), competent: v(w), incompetent: v(c) }
    }

    #[test]
    fn scm_axis_from_two_seeds() {
        let e = embedder("w 1 0\nc 0 1\n");
        let axes = build_scm_axes(&seeds(&["w"], &["c"]), &e).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((axes.warmth[0] - h).abs() < 1e-12 && (axes.warmth[1] + h).abs() < 1e-12);
        assert!((norm(&axes.competence) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scm_degenerate_and_missing_seeds() {
        let e = embedder("w 1 0\nc 0 1\n");
        assert!(matches!(
            build_scm_axes(&seeds(&["w"], &["w"]), &e),
            Err(PsychError::DegenerateAxis { .. })
        ));
        assert!(matches!(
            build_scm_axes(&seeds(&["zz"], &["c"]), &e),
            Err(PsychError::DegenerateAxis { axis: "warm", .. })
        ));
        let axes = build_scm_axes(&seeds(&["w", "zz"], &["c"]), &e).unwrap();
        assert_eq!(axes.seeds_used.warm, ["w"]);
    }

    #[test]
    fn scm_projection_values() {
        let e = embedder("w 1 0\nc 0 1\nx 3 1\ny 1 1\n");
        let axes = build_scm_axes(&seeds(&["w"], &["c"]), &e).unwrap();
        // mean of x and y is (2, 1); warmth axis (1, -1)/√2 → 1/√2
        let (warmth, competence) = scm_project("x y unknown", &axes, &e).unwrap().unwrap();
        assert!((warmth - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((competence - warmth).abs() < 1e-12);
        assert_eq!(scm_project("unknown", &axes, &e).unwrap(), None);
        assert!((project_vector(&axes.warmth.clone(), &axes).0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_formula() {
        assert_eq!(psych_shift(0.3, 0.3), 0.0);
        assert!((psych_shift(2.0, 1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(psych_shift(0.0, 0.0), 0.0);
        assert_eq!(psych_shift(1.0, 0.0), 2.0);
        assert_eq!(psych_shift(-1.0, 1.0), -2.0);
    }

    #[test]
    fn document_and_group_shift() {
        assert_eq!(document_shift(Some(1.0), &[Some(2.0), None, Some(2.0)]), Some(2.0 / 3.0));
        assert_eq!(document_shift(Some(1.0), &[None]), None);
        assert_eq!(document_shift(None, &[Some(1.0)]), None);
        assert_eq!(psych_group(&[Some(0.5), Some(-0.5)]).unwrap(), 0.0);
        assert_eq!(psych_group(&[Some(0.25), None]).unwrap(), 0.25);
        assert!(matches!(psych_group(&[None]), Err(PsychError::EmptyGroup)));
    }
}
