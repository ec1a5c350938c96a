//! Anchoring interview questions to interviewer turns.
//!
//! Questions and interviewer turns of one interview are embedded with a
//! TF-IDF model fitted on that interview (turns plus questions). Matching
//! then runs in passes:
//!
//! 1. Every question takes its most similar interviewer turn. Questions whose
//!    best similarity is at least `hi` become anchors, most confident first;
//!    a candidate that would break turn order against an accepted anchor is
//!    rejected and left for the later passes. Questions whose best similarity
//!    is below `lo` are skipped.
//! 2. The threshold drops by `step` per pass down to `lo`. In each pass the
//!    remaining questions, in interview order, are searched only among the
//!    turns strictly between the neighbouring anchored questions.
//!
//! Questions still unmatched afterwards are reported as unresolved. Ties go
//! to the earliest turn. Every decision is recorded as a [`MatchEvent`].

use serde::{Deserialize, Serialize};

use crate::corpus::tfidf::TfidfModel;
use crate::corpus::{CorpusError, Question};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorConfig {
    pub hi: f64,
    pub lo: f64,
    pub step: f64,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        AnchorConfig { hi: 0.7, lo: 0.3, step: 0.1 }
    }
}

impl AnchorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.lo) || !(self.lo..=1.0).contains(&self.hi) {
            return Err(format!("need 0 <= lo <= hi <= 1, got lo={} hi={}", self.lo, self.hi));
        }
        if self.step <= 0.0 {
            return Err(format!("step must be positive, got {}", self.step));
        }
        Ok(())
    }

    /// Thresholds of the lowered passes, from `hi - step` down to `lo`.
    pub fn lowered_thresholds(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for k in 1.. {
            let t = ((self.hi - k as f64 * self.step) * 1e9).round() / 1e9;
            if t < self.lo - 1e-9 {
                break;
            }
            out.push(t);
        }
        out
    }
}

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pass", rename_all = "snake_case")]
pub enum MatchPass {
    Initial,
    /// `iteration` counts from 1 for the first lowered threshold.
    Lowered { iteration: usize, threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchOutcome {
    Accepted,
    /// The candidate turn would precede an earlier anchor or follow a later one.
    OrderViolation,
    BelowThreshold,
    Skipped,
    /// No interviewer turn lies between the neighbouring anchors.
    EmptyWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEvent {
    pub question_id: String,
    #[serde(flatten)]
    pub pass: MatchPass,
    pub candidate: Option<usize>,
    pub similarity: f64,
    pub outcome: MatchOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionMatch {
    pub question_id: String,
    /// Index into the interviewer-turn list.
    pub interviewer_index: usize,
    pub similarity: f64,
    #[serde(flatten)]
    pub pass: MatchPass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchoring {
    /// One slot per question, in question order.
    pub matches: Vec<Option<QuestionMatch>>,
    pub skipped: Vec<String>,
    pub unresolved: Vec<String>,
    pub events: Vec<MatchEvent>,
}

impl Anchoring {
    pub fn initial_anchor_count(&self) -> usize {
        self.matches
            .iter()
            .flatten()
            .filter(|m| m.pass == MatchPass::Initial)
            .count()
    }
}

/// Best turn in `lo..hi` (earliest on ties).
fn best_in(sims: &[f64], range: std::ops::Range<usize>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for i in range {
        if best.map_or(true, |(_, s)| sims[i] > s) {
            best = Some((i, sims[i]));
        }
    }
    best
}

pub fn anchor_questions<S: AsRef<str>>(
    interviewer_turns: &[S],
    questions: &[Question],
    cfg: &AnchorConfig,
) -> Result<Anchoring, CorpusError> {
    if interviewer_turns.is_empty() {
        return Err(CorpusError::NoInterviewerTurns);
    }
    cfg.validate().map_err(CorpusError::Config)?;
    let mut texts: Vec<&str> = interviewer_turns.iter().map(AsRef::as_ref).collect();
    texts.extend(questions.iter().map(|q| q.text.as_str()));
    let model = TfidfModel::fit(&texts)?;
    let turn_vecs: Vec<_> = interviewer_turns.iter().map(|t| model.transform(t.as_ref())).collect();
    let sims: Vec<Vec<f64>> = questions
        .iter()
        .map(|q| {
            let qv = model.transform(&q.text);
            turn_vecs.iter().map(|t| qv.cosine(t)).collect()
        })
        .collect();

    let n_turns = interviewer_turns.len();
    let mut matches: Vec<Option<QuestionMatch>> = vec![None; questions.len()];
    let mut skipped = vec![false; questions.len()];
    let mut events = Vec::new();

    // Initial pass: most confident first, earlier question on ties.
    let mut order: Vec<(usize, usize, f64)> = Vec::new();
    for (q, row) in sims.iter().enumerate() {
        let (turn, sim) = best_in(row, 0..n_turns).expect("at least one turn");
        if sim + EPS < cfg.lo {
            skipped[q] = true;
            events.push(MatchEvent {
                question_id: questions[q].id.clone(),
                pass: MatchPass::Initial,
                candidate: Some(turn),
                similarity: sim,
                outcome: MatchOutcome::Skipped,
            });
        } else if sim + EPS >= cfg.hi {
            order.push((q, turn, sim));
        } else {
            events.push(MatchEvent {
                question_id: questions[q].id.clone(),
                pass: MatchPass::Initial,
                candidate: Some(turn),
                similarity: sim,
                outcome: MatchOutcome::BelowThreshold,
            });
        }
    }
    order.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    for (q, turn, sim) in order {
        let consistent = matches.iter().enumerate().all(|(other, m)| match m {
            None => true,
            Some(m) if other < q => m.interviewer_index < turn,
            Some(m) => m.interviewer_index > turn,
        });
        let outcome = if consistent {
            matches[q] = Some(QuestionMatch {
                question_id: questions[q].id.clone(),
                interviewer_index: turn,
                similarity: sim,
                pass: MatchPass::Initial,
            });
            MatchOutcome::Accepted
        } else {
            MatchOutcome::OrderViolation
        };
        events.push(MatchEvent {
            question_id: questions[q].id.clone(),
            pass: MatchPass::Initial,
            candidate: Some(turn),
            similarity: sim,
            outcome,
        });
    }

    // Lowered passes, restricted to the window between neighbouring anchors.
    for (k, threshold) in cfg.lowered_thresholds().into_iter().enumerate() {
        let pass = MatchPass::Lowered { iteration: k + 1, threshold };
        for q in 0..questions.len() {
            if matches[q].is_some() || skipped[q] {
                continue;
            }
            let start = matches[..q].iter().flatten().last().map_or(0, |m| m.interviewer_index + 1);
            let end = matches[q + 1..].iter().flatten().next().map_or(n_turns, |m| m.interviewer_index);
            let event = |candidate, similarity, outcome| MatchEvent {
                question_id: questions[q].id.clone(),
                pass,
                candidate,
                similarity,
                outcome,
            };
            match best_in(&sims[q], start..end.max(start)) {
                None => events.push(event(None, 0.0, MatchOutcome::EmptyWindow)),
                Some((turn, sim)) if sim + EPS >= threshold => {
                    matches[q] = Some(QuestionMatch {
                        question_id: questions[q].id.clone(),
                        interviewer_index: turn,
                        similarity: sim,
                        pass,
                    });
                    events.push(event(Some(turn), sim, MatchOutcome::Accepted));
                }
                Some((turn, sim)) => events.push(event(Some(turn), sim, MatchOutcome::BelowThreshold)),
            }
        }
    }

    let mut skipped_ids = Vec::new();
    let mut unresolved = Vec::new();
    for (q, question) in questions.iter().enumerate() {
        if skipped[q] {
            skipped_ids.push(question.id.clone());
        } else if matches[q].is_none() {
            unresolved.push(question.id.clone());
        }
    }
    Ok(Anchoring { matches, skipped: skipped_ids, unresolved, events })
}
