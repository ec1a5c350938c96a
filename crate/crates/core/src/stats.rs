//! Bootstrap confidence intervals and one-sided bootstrap significance tests.
//!
//! # Random numbers
//!
//! All resampling draws from ChaCha20 (`rand_chacha::ChaCha20Rng`), seeded
//! with `seed_from_u64`. Draws are produced in chunks of
//! [`CHUNK_DRAWS`] bootstrap replicates; chunk `i` uses stream `i` of the
//! generator, so chunks can run in parallel and are merged in index order.
//! Indices are drawn with Lemire's multiply-and-reject method on `next_u64`
//! (see [`draw_index`]). Together these make every p-value and interval a
//! pure function of the data and the seed, on every platform.
//!
//! Per-test seeds are derived from the run seed and the test's labels
//! (attribute, groups) with SHA-256, so results do not depend on the order in
//! which tests are run or groups are listed.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::store::digest_parts;

pub const DEFAULT_N_BOOTSTRAP: usize = 5000;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_CI_LEVEL: f64 = 0.83;
pub const CHUNK_DRAWS: usize = 1000;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("no values to resample")]
    Empty,
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_bootstrap: usize,
    pub alpha: f64,
    pub ci_level: f64,
    pub rng_seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_bootstrap: DEFAULT_N_BOOTSTRAP,
            alpha: DEFAULT_ALPHA,
            ci_level: DEFAULT_CI_LEVEL,
            rng_seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<(), StatsError> {
        if self.n_bootstrap == 0 {
            return Err(StatsError::Parameter("n_bootstrap must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(StatsError::Parameter(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(StatsError::Parameter(format!("ci_level {} not in (0, 1)", self.ci_level)));
        }
        Ok(())
    }
}

/// Uniform index in `0..n`, Lemire's method with rejection.
pub fn draw_index(rng: &mut ChaCha20Rng, n: usize) -> usize {
    let range = n as u64;
    let mut m = u128::from(rng.next_u64()) * u128::from(range);
    if (m as u64) < range {
        let threshold = range.wrapping_neg() % range;
        while (m as u64) < threshold {
            m = u128::from(rng.next_u64()) * u128::from(range);
        }
    }
    (m >> 64) as usize
}

/// Generator for chunk `chunk` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Seed for one named test, derived from the run seed.
pub fn derive_seed(base: u64, labels: &[&str]) -> u64 {
    let base = base.to_le_bytes();
    let parts = std::iter::once(&base[..]).chain(labels.iter().map(|l| l.as_bytes()));
    let hex = digest_parts(parts);
    u64::from_str_radix(&hex[..16], 16).expect("hex digest")
}

/// Mean of one resample (with replacement) of `values`.
pub fn resample_mean(values: &[f64], rng: &mut ChaCha20Rng) -> f64 {
    let mut sum = 0.0;
    for _ in 0..values.len() {
        sum += values[draw_index(rng, values.len())];
    }
    sum / values.len() as f64
}

/// Runs `n` replicates of `stat`, chunked and parallel, merged in order.
fn replicates<F>(n: usize, seed: u64, stat: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha20Rng) -> f64 + Sync,
{
    let chunks = n.div_ceil(CHUNK_DRAWS);
    let per_chunk: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let len = CHUNK_DRAWS.min(n - c * CHUNK_DRAWS);
            (0..len).map(|_| stat(&mut rng)).collect()
        })
        .collect();
    per_chunk.concat()
}

/// Bootstrap distribution of the mean of `values`.
pub fn bootstrap_means(values: &[f64], n: usize, seed: u64) -> Vec<f64> {
    replicates(n, seed, |rng| resample_mean(values, rng))
}

fn mean(values: &[f64]) -> f64 {
    if is_constant(values) {
        return values[0];
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn is_constant(values: &[f64]) -> bool {
    values.iter().all(|&v| v == values[0])
}

/// Linear-interpolation quantile of sorted data (the "type 7" definition).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_ci(values: &[f64], level: f64, n: usize, seed: u64) -> Result<Interval, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if n == 0 || !(level > 0.0 && level < 1.0) {
        return Err(StatsError::Parameter(format!("level {level}, n {n}")));
    }
    if values.len() == 1 {
        log::warn!("bootstrap interval of a single value is degenerate");
    }
    if is_constant(values) {
        return Ok(Interval { low: values[0], high: values[0] });
    }
    let mut means = bootstrap_means(values, n, seed);
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(Interval {
        low: quantile_sorted(&means, tail),
        high: quantile_sorted(&means, 1.0 - tail),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Greater,
    Less,
}

impl Direction {
    /// Whether a bootstrap statistic contradicts the hypothesized direction.
    fn contradicts(self, stat: f64) -> bool {
        match self {
            Direction::Greater => stat <= 0.0,
            Direction::Less => stat >= 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Paired,
    TwoSample,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Comparison {
    /// `group` against `other`.
    Groups { group: String, other: String },
    /// Mean paired difference within `group` against zero.
    ShiftVsZero { group: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub attribute: String,
    pub comparison: Comparison,
    pub test: TestKind,
    pub direction: Direction,
    /// Observed statistic: mean difference.
    pub observed: f64,
    pub p_value: f64,
    pub n_bootstrap: usize,
    pub alpha: f64,
    pub significant: bool,
    /// All differences were zero; p is reported as 1.
    pub degenerate: bool,
}

/// Bare outcome of a test before it is labelled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub observed: f64,
    pub p_value: f64,
    pub degenerate: bool,
}

/// One-sided paired test on per-document differences.
///
/// `p` is the share of bootstrap means that are `<= 0` (greater) or `>= 0`
/// (less).
pub fn paired_bootstrap(diffs: &[f64], direction: Direction, n: usize, seed: u64) -> Result<TestOutcome, StatsError> {
    if diffs.is_empty() {
        return Err(StatsError::Empty);
    }
    if n == 0 {
        return Err(StatsError::Parameter("n_bootstrap must be at least 1".into()));
    }
    if diffs.iter().all(|&d| d == 0.0) {
        return Ok(TestOutcome { observed: 0.0, p_value: 1.0, degenerate: true });
    }
    let means = bootstrap_means(diffs, n, seed);
    let bad = means.iter().filter(|&&m| direction.contradicts(m)).count();
    Ok(TestOutcome {
        observed: mean(diffs),
        p_value: bad as f64 / n as f64,
        degenerate: false,
    })
}

/// One-sided unpaired test on `mean(a) - mean(b)`, resampling each group
/// independently.
pub fn two_sample_bootstrap(a: &[f64], b: &[f64], direction: Direction, n: usize, seed: u64) -> Result<TestOutcome, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    if n == 0 {
        return Err(StatsError::Parameter("n_bootstrap must be at least 1".into()));
    }
    let first = a[0];
    if a.iter().chain(b).all(|&x| x == first) {
        return Ok(TestOutcome { observed: 0.0, p_value: 1.0, degenerate: true });
    }
    let diffs = replicates(n, seed, |rng| resample_mean(a, rng) - resample_mean(b, rng));
    let bad = diffs.iter().filter(|&&d| direction.contradicts(d)).count();
    Ok(TestOutcome {
        observed: mean(a) - mean(b),
        p_value: bad as f64 / n as f64,
        degenerate: false,
    })
}

fn label(
    outcome: TestOutcome,
    attribute: &str,
    comparison: Comparison,
    test: TestKind,
    direction: Direction,
    cfg: &BootstrapConfig,
) -> SignificanceResult {
    SignificanceResult {
        attribute: attribute.to_string(),
        comparison,
        test,
        direction,
        observed: outcome.observed,
        p_value: outcome.p_value,
        n_bootstrap: cfg.n_bootstrap,
        alpha: cfg.alpha,
        significant: outcome.p_value < cfg.alpha,
        degenerate: outcome.degenerate,
    }
}

/// Paired test of a within-group shift against zero, seeded from the labels.
pub fn paired_bootstrap_test(
    attribute: &str,
    group: &str,
    diffs: &[f64],
    direction: Direction,
    cfg: &BootstrapConfig,
) -> Result<SignificanceResult, StatsError> {
    let dir = match direction {
        Direction::Greater => "greater",
        Direction::Less => "less",
    };
    let seed = derive_seed(cfg.rng_seed, &["paired", attribute, group, dir]);
    let outcome = paired_bootstrap(diffs, direction, cfg.n_bootstrap, seed)?;
    Ok(label(
        outcome,
        attribute,
        Comparison::ShiftVsZero { group: group.to_string() },
        TestKind::Paired,
        direction,
        cfg,
    ))
}

/// Two-sample test of `group` against `other`, seeded from the labels.
pub fn two_sample_bootstrap_test(
    attribute: &str,
    (group, a): (&str, &[f64]),
    (other, b): (&str, &[f64]),
    direction: Direction,
    cfg: &BootstrapConfig,
) -> Result<SignificanceResult, StatsError> {
    let dir = match direction {
        Direction::Greater => "greater",
        Direction::Less => "less",
    };
    let seed = derive_seed(cfg.rng_seed, &["two_sample", attribute, group, other, dir]);
    let outcome = two_sample_bootstrap(a, b, direction, cfg.n_bootstrap, seed)?;
    Ok(label(
        outcome,
        attribute,
        Comparison::Groups { group: group.to_string(), other: other.to_string() },
        TestKind::TwoSample,
        direction,
        cfg,
    ))
}

/// Mean of one group's per-document values with its bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStatistic {
    pub attribute: String,
    pub group: String,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_level: f64,
    pub n_documents: usize,
}

pub fn group_statistic(
    attribute: &str,
    group: &str,
    values: &[f64],
    cfg: &BootstrapConfig,
) -> Result<GroupStatistic, StatsError> {
    let seed = derive_seed(cfg.rng_seed, &["ci", attribute, group]);
    let ci = bootstrap_ci(values, cfg.ci_level, cfg.n_bootstrap, seed)?;
    Ok(GroupStatistic {
        attribute: attribute.to_string(),
        group: group.to_string(),
        mean: mean(values),
        ci_low: ci.low,
        ci_high: ci.high,
        ci_level: cfg.ci_level,
        n_documents: values.len(),
    })
}

/// How many other groups one group significantly exceeds on an attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupWins {
    pub group: String,
    /// `None` when the group has fewer than two documents.
    pub wins: Option<usize>,
    pub comparisons: Vec<SignificanceResult>,
}

pub const MIN_GROUP_DOCUMENTS: usize = 2;

/// One-sided "greater" two-sample tests of every group against every other.
///
/// Groups with fewer than [`MIN_GROUP_DOCUMENTS`] documents are neither
/// tested nor used as opponents.
pub fn pairwise_wins(
    attribute: &str,
    groups: &[(String, Vec<f64>)],
    cfg: &BootstrapConfig,
) -> Result<Vec<GroupWins>, StatsError> {
    let eligible = |v: &Vec<f64>| v.len() >= MIN_GROUP_DOCUMENTS;
    let mut out = Vec::with_capacity(groups.len());
    for (g, a) in groups {
        if !eligible(a) {
            log::warn!("{attribute}: group {g} has {} documents; not compared", a.len());
            out.push(GroupWins { group: g.clone(), wins: None, comparisons: Vec::new() });
            continue;
        }
        let mut comparisons = Vec::new();
        for (h, b) in groups {
            if h == g || !eligible(b) {
                continue;
            }
            comparisons.push(two_sample_bootstrap_test(attribute, (g, a), (h, b), Direction::Greater, cfg)?);
        }
        let wins = comparisons.iter().filter(|c| c.significant).count();
        out.push(GroupWins { group: g.clone(), wins: Some(wins), comparisons });
    }
    Ok(out)
}
