//! Theme canonicalization and the conditioning shift of a theme.
//!
//! A document "has" a theme under a condition when any of its usable samples
//! under that condition lists it. The shift of a theme for a group is the
//! mean, over documents usable under both conditions, of the demographic
//! indicator minus the baseline indicator.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Raw → canonical theme rewrites, applied after normalization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ThemeAliases {
    map: HashMap<String, String>,
}

impl ThemeAliases {
    /// Two-column TSV: raw theme, canonical theme. Both sides are normalized.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(raw), Some(canon), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(format!("line {}: expected two tab-separated columns", i + 1));
            };
            let (Some(raw), Some(canon)) = (clean(raw), clean(canon)) else {
                return Err(format!("line {}: empty theme", i + 1));
            };
            map.insert(raw, canon);
        }
        Ok(ThemeAliases { map })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

fn clean(raw: &str) -> Option<String> {
    let mut s = raw.trim();
    // bullet markers: "-", "*", "•", "1.", "2)"
    loop {
        let before = s;
        s = s.trim_start_matches(['-', '*', '•', '+']).trim_start();
        let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
        if digits > 0 {
            let after = &s[digits..];
            if let Some(rest) = after.strip_prefix('.').or_else(|| after.strip_prefix(')')) {
                s = rest.trim_start();
            }
        }
        if s == before {
            break;
        }
    }
    let s = s.trim_matches(|c: char| !c.is_alphanumeric());
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    (!collapsed.is_empty()).then_some(collapsed)
}

/// Canonical form of a theme: lowercase, trimmed, bullets and surrounding
/// punctuation stripped, whitespace collapsed, aliases applied.
///
/// No stemming: "growth" and "personal growth" stay distinct. Returns `None`
/// (with a warning) when nothing is left.
pub fn normalize_theme(raw: &str, aliases: Option<&ThemeAliases>) -> Option<String> {
    let Some(c) = clean(raw) else {
        log::warn!("theme {raw:?} is empty after normalization; dropped");
        return None;
    };
    Some(aliases.and_then(|a| a.map.get(&c).cloned()).unwrap_or(c))
}

/// Union of theme sets of one document's usable samples, or `None` when
/// there are no usable samples.
pub fn theme_union<'a, I>(sample_themes: I) -> Option<BTreeSet<String>>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut any = false;
    let mut out = BTreeSet::new();
    for themes in sample_themes {
        any = true;
        out.extend(themes.iter().cloned());
    }
    any.then_some(out)
}

/// Indicator of `theme` in a document's union set.
pub fn theme_present(union: &BTreeSet<String>, theme: &str) -> u8 {
    u8::from(union.contains(theme))
}

/// One document's theme unions under both conditions.
#[derive(Debug, Clone, Copy)]
pub struct ConditionPair<'a> {
    pub baseline: Option<&'a BTreeSet<String>>,
    pub demographic: Option<&'a BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeShift {
    /// `None` when no document was usable under both conditions.
    pub value: Option<f64>,
    /// Per included document, demographic minus baseline indicator.
    pub diffs: Vec<f64>,
    pub n_used: usize,
    pub n_excluded: usize,
}

pub fn theme_shift(theme: &str, docs: &[ConditionPair<'_>]) -> ThemeShift {
    let mut diffs = Vec::new();
    let mut excluded = 0;
    for d in docs {
        match (d.baseline, d.demographic) {
            (Some(b), Some(c)) => {
                diffs.push(f64::from(theme_present(c, theme)) - f64::from(theme_present(b, theme)))
            }
            _ => excluded += 1,
        }
    }
    let value = (!diffs.is_empty()).then(|| diffs.iter().sum::<f64>() / diffs.len() as f64);
    ThemeShift { value, n_used: diffs.len(), n_excluded: excluded, diffs }
}

/// Themes with their share of baseline summaries, most frequent first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ThemeVocabulary {
    pub themes: Vec<(String, f64)>,
}

impl ThemeVocabulary {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.themes.iter().map(|(t, _)| t.as_str())
    }

    pub fn len(&self) -> usize {
        self.themes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.themes.is_empty()
    }
}

/// The `k` themes appearing in the largest share of baseline summaries.
///
/// Each summary counts a theme at most once. Ties break lexicographically.
pub fn top_k_themes<'a, I>(baseline_summaries: I, k: usize) -> ThemeVocabulary
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0usize;
    for themes in baseline_summaries {
        total += 1;
        let distinct: BTreeSet<&str> = themes.iter().map(String::as_str).collect();
        for t in distinct {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if ranked.len() < k {
        log::info!("only {} distinct themes for a top-{k} vocabulary", ranked.len());
    }
    ThemeVocabulary {
        themes: ranked
            .into_iter()
            .take(k)
            .map(|(t, n)| (t.to_string(), n as f64 / total as f64))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize_theme("- Personal Growth ", None).unwrap(), "personal growth");
        assert_eq!(normalize_theme("**Resilience**", None).unwrap(), "resilience");
        assert_eq!(normalize_theme("2. Family  ties.", None).unwrap(), "family ties");
        assert_eq!(normalize_theme("* **Faith**:", None).unwrap(), "faith");
        assert_ne!(normalize_theme("Growth", None), normalize_theme("Personal Growth", None));
        assert_eq!(normalize_theme(" - ** ", None), None);
        assert_eq!(normalize_theme("1990s nostalgia", None).unwrap(), "1990s nostalgia");
    }

    #[test]
    fn aliases_apply_after_normalization() {
        let a = ThemeAliases::parse("Family Bonds\tfamily\n").unwrap();
        assert_eq!(normalize_theme("- family bonds", Some(&a)).unwrap(), "family");
        assert!(ThemeAliases::parse("only one column\n").is_err());
    }

    #[test]
    fn union_semantics() {
        let s1 = vec!["a".to_string()];
        let s2: Vec<String> = vec![];
        let u = theme_union([s1.as_slice(), s2.as_slice()]).unwrap();
        assert_eq!(theme_present(&u, "a"), 1);
        assert_eq!(theme_present(&u, "b"), 0);
        assert_eq!(theme_union(std::iter::empty::<&[String]>()), None);
    }

    #[test]
    fn shift_examples() {
        let (on, off) = (set(&["t"]), set(&[]));
        let docs = [
            ConditionPair { baseline: Some(&off), demographic: Some(&on) },
            ConditionPair { baseline: Some(&off), demographic: Some(&off) },
        ];
        assert_eq!(theme_shift("t", &docs).value, Some(0.5));

        let same = [ConditionPair { baseline: Some(&on), demographic: Some(&on) }];
        assert_eq!(theme_shift("t", &same).value, Some(0.0));

        let drop = [
            ConditionPair { baseline: Some(&on), demographic: Some(&off) },
            ConditionPair { baseline: Some(&on), demographic: Some(&off) },
        ];
        assert_eq!(theme_shift("t", &drop).value, Some(-1.0));
    }

    #[test]
    fn one_sided_documents_are_excluded() {
        let on = set(&["t"]);
        let docs = [
            ConditionPair { baseline: None, demographic: Some(&on) },
            ConditionPair { baseline: Some(&on), demographic: Some(&on) },
        ];
        let s = theme_shift("t", &docs);
        assert_eq!((s.n_used, s.n_excluded, s.value), (1, 1, Some(0.0)));
        assert_eq!(theme_shift("t", &docs[..1]).value, None);
    }

    #[test]
    fn top_k_counts_and_ties() {
        let mut summaries: Vec<Vec<String>> = Vec::new();
        for _ in 0..10 {
            summaries.push(vec!["resilience".into()]);
        }
        for s in summaries.iter_mut().take(8) {
            s.push("family".into());
        }
        summaries[0].push("faith".into());
        summaries[1].push("faith".into());
        let vocab = top_k_themes(summaries.iter().map(Vec::as_slice), 2);
        assert_eq!(vocab.names().collect::<Vec<_>>(), ["resilience", "family"]);
        assert_eq!(vocab.themes[1].1, 0.8);

        let all = top_k_themes(summaries.iter().map(Vec::as_slice), 50);
        assert_eq!(all.len(), 3);

        let tied = [vec!["b".to_string()], vec!["a".to_string()]];
        let v = top_k_themes(tied.iter().map(Vec::as_slice), 1);
        assert_eq!(v.names().collect::<Vec<_>>(), ["a"]);
    }

    #[test]
    fn duplicate_mentions_count_once() {
        let s = [vec!["a".to_string(), "a".to_string()]];
        assert_eq!(top_k_themes(s.iter().map(Vec::as_slice), 1).themes[0].1, 1.0);
    }
}
