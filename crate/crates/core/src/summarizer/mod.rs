//! Summary generation under baseline and demographic-conditioned prompts.

pub mod client;
pub mod mock;
pub mod parse;
pub mod prompt;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusFormat, DemographicProfile, Document};
use crate::http::HttpError;
use client::{ChatClient, ChatRequest};
use parse::parse_output;
use prompt::build_prompt;

#[derive(Debug, thiserror::Error)]
pub enum SummarizerError {
    #[error("document {0} has no respondent text to summarize")]
    EmptySection(String),
    #[error("demographic condition without demographics: {0}")]
    MissingDemographics(String),
    #[error("invalid generation parameters: {0}")]
    Params(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SummaryCondition {
    Baseline,
    Demographic(DemographicProfile),
}

impl SummaryCondition {
    pub fn is_baseline(&self) -> bool {
        matches!(self, SummaryCondition::Baseline)
    }

    pub fn label(&self) -> &'static str {
        match self {
            SummaryCondition::Baseline => "baseline",
            SummaryCondition::Demographic(_) => "demographic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationParams {
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub n_seeds: u32,
    /// Samples use seeds `seed_base .. seed_base + n_seeds`.
    pub seed_base: u64,
    pub response_tag_mode: bool,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            model: String::new(),
            temperature: 0.7,
            max_output_tokens: 6000,
            n_seeds: 5,
            seed_base: 0,
            response_tag_mode: false,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), SummarizerError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(SummarizerError::Params(format!("temperature {} is negative", self.temperature)));
        }
        if self.n_seeds == 0 {
            return Err(SummarizerError::Params("n_seeds must be at least 1".into()));
        }
        Ok(())
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> {
        let base = self.seed_base;
        (0..u64::from(self.n_seeds)).map(move |i| base + i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySample {
    pub document_id: String,
    pub condition: SummaryCondition,
    pub seed: u64,
    pub raw_output: String,
    pub summary_text: String,
    pub themes: Vec<String>,
    pub parse_ok: bool,
    /// Transport or parse failure, if any.
    pub error: Option<String>,
}

/// Requests `n_seeds` completions for one document and condition.
///
/// Transport failures become samples with `parse_ok = false` and an error
/// message; they do not abort the document.
pub fn generate_samples(
    document: &Document,
    condition: &SummaryCondition,
    params: &GenerationParams,
    format: &CorpusFormat,
    client: &dyn ChatClient,
) -> Result<Vec<SummarySample>, SummarizerError> {
    params.validate()?;
    let prompt = build_prompt(document, condition, params, format)?;
    let samples: Vec<SummarySample> = params
        .seeds()
        .map(|seed| {
            let req = ChatRequest::new(
                &params.model,
                &prompt.system,
                &prompt.user,
                params.temperature,
                params.max_output_tokens,
                seed,
            );
            sample_from(document, condition, seed, client.complete(&req), params.response_tag_mode)
        })
        .collect();
    if samples.iter().all(|s| !s.parse_ok) {
        log::warn!("document {}: no usable {} sample", document.id, condition.label());
    }
    Ok(samples)
}

fn sample_from(
    document: &Document,
    condition: &SummaryCondition,
    seed: u64,
    reply: Result<String, HttpError>,
    tagged: bool,
) -> SummarySample {
    let mut sample = SummarySample {
        document_id: document.id.clone(),
        condition: condition.clone(),
        seed,
        raw_output: String::new(),
        summary_text: String::new(),
        themes: Vec::new(),
        parse_ok: false,
        error: None,
    };
    match reply {
        Err(e) => {
            log::warn!("document {} seed {seed}: {e}", document.id);
            sample.error = Some(e.to_string());
        }
        Ok(raw) => {
            match parse_output(&raw, tagged) {
                Ok(p) => {
                    if p.untagged {
                        log::warn!("document {} seed {seed}: no <response> tags, used whole output", document.id);
                    }
                    sample.summary_text = p.summary;
                    sample.themes = p.themes;
                    sample.parse_ok = true;
                }
                Err(e) => sample.error = Some(e.to_string()),
            }
            sample.raw_output = raw;
        }
    }
    sample
}

/// Runs `f` over `items` on at most `max_in_flight` threads, keeping order.
pub fn run_bounded<T, R, F>(items: &[T], max_in_flight: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = max_in_flight.clamp(1, items.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every item processed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Role, Turn};
    use mock::MockChatClient;

    const GOOD: &str = "Summary:\nS.\n\nCore Values:\n- Resilience\n- Family";

    fn doc() -> Document {
        Document::from_turns(
            "d1",
            vec![Turn::new(Role::Interviewer, "Life chapters?"), Turn::new(Role::Respondent, "Many.")],
            DemographicProfile::new(vec![("race".into(), "Black".into()), ("gender".into(), "woman".into())]),
            &CorpusFormat::default(),
        )
    }

    #[test]
    fn five_seeds_all_parse() {
        let client = MockChatClient::fixed(GOOD);
        let s = generate_samples(&doc(), &SummaryCondition::Baseline, &Default::default(), &CorpusFormat::default(), &client)
            .unwrap();
        assert_eq!(s.len(), 5);
        assert!(s.iter().all(|x| x.parse_ok && x.themes == ["resilience", "family"]));
        let seeds: Vec<u64> = s.iter().map(|x| x.seed).collect();
        assert_eq!(seeds, [0, 1, 2, 3, 4]);
        assert!(s.windows(2).all(|w| w[0].summary_text == w[1].summary_text));
        assert_eq!(client.calls(), 5);
    }

    #[test]
    fn malformed_completion_is_flagged() {
        let client = MockChatClient::from_fn(|req| {
            Ok(if req.seed == 2 { "Summary:\nS.".to_string() } else { GOOD.to_string() })
        });
        let s = generate_samples(&doc(), &SummaryCondition::Baseline, &Default::default(), &CorpusFormat::default(), &client)
            .unwrap();
        assert_eq!(s.iter().filter(|x| x.parse_ok).count(), 4);
        assert!(!s[2].parse_ok);
        assert!(s[2].error.as_deref().unwrap().contains("Core Values"));
    }

    #[test]
    fn transport_errors_become_sample_errors() {
        let client = MockChatClient::from_fn(|_| Err(HttpError::Transport("down".into())));
        let s = generate_samples(&doc(), &SummaryCondition::Baseline, &Default::default(), &CorpusFormat::default(), &client)
            .unwrap();
        assert!(s.iter().all(|x| !x.parse_ok && x.error.is_some()));
    }

    #[test]
    fn params_are_validated() {
        let client = MockChatClient::fixed(GOOD);
        let bad = GenerationParams { n_seeds: 0, ..Default::default() };
        assert!(generate_samples(&doc(), &SummaryCondition::Baseline, &bad, &CorpusFormat::default(), &client).is_err());
    }

    #[test]
    fn bounded_runner_keeps_order() {
        let items: Vec<u32> = (0..50).collect();
        let out = run_bounded(&items, 4, |x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(run_bounded(&Vec::<u32>::new(), 4, |x| *x).is_empty());
    }
}
