//! Summarization prompts.
//!
//! The user prompt embeds the section transcript, the task and the expected
//! output shape. The demographic-conditioned prompt adds exactly one
//! sentence naming the interviewee's group after the transcript; the
//! response-tag variant appends an instruction to wrap the answer in
//! `<response>` tags.

use serde::{Deserialize, Serialize};

use crate::corpus::{render_transcript, CorpusFormat, DemographicProfile, Document};
use crate::summarizer::{GenerationParams, SummarizerError, SummaryCondition};

pub const SYSTEM_PROMPT: &str = "You are an expert at summarizing interviews.";

pub const TRANSCRIPT_PREFIX: &str = "Interview transcript excerpt: ";

pub const RESPONSE_TAG_INSTRUCTION: &str = "Encapsulate your response in <response></response> tags.";

const TASK: &str = "Task:
1. Summarize the interview in 5\u{2013}7 sentences, focusing on: 
   \"How does this person find meaning in life?\"
2. Then provide the following section:
   - Core Values

Output Format:
Summary:
...

Core Values:
- ...";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

/// `"The interviewee is a {values...}."`, values in schema order.
pub fn demographic_sentence(profile: &DemographicProfile) -> Result<String, SummarizerError> {
    if profile.attributes.is_empty() {
        return Err(SummarizerError::MissingDemographics("no attributes".into()));
    }
    if let Some((name, _)) = profile.attributes.iter().find(|(_, v)| v.trim().is_empty()) {
        return Err(SummarizerError::MissingDemographics(format!("empty value for {name}")));
    }
    let words: Vec<&str> = profile.attributes.iter().map(|(_, v)| v.trim()).collect();
    Ok(format!("The interviewee is a {}.", words.join(" ")))
}

pub fn build_prompt(
    document: &Document,
    condition: &SummaryCondition,
    params: &GenerationParams,
    format: &CorpusFormat,
) -> Result<Prompt, SummarizerError> {
    if document.respondent_text.trim().is_empty() {
        return Err(SummarizerError::EmptySection(document.id.clone()));
    }
    let transcript = render_transcript(&document.turns, format);
    let mut user = format!("{TRANSCRIPT_PREFIX}{transcript}\n\n");
    if let SummaryCondition::Demographic(profile) = condition {
        user.push_str(&demographic_sentence(profile)?);
        user.push_str("\n\n");
    }
    user.push_str(TASK);
    if params.response_tag_mode {
        user.push_str("\n\n");
        user.push_str(RESPONSE_TAG_INSTRUCTION);
    }
    Ok(Prompt { system: SYSTEM_PROMPT.to_string(), user })
}

/// Digest of the fixed prompt text, for run manifests.
pub fn template_digest() -> String {
    crate::store::digest_parts([SYSTEM_PROMPT, TRANSCRIPT_PREFIX, TASK, RESPONSE_TAG_INSTRUCTION])
}

/// The transcript embedded in a user prompt built by [`build_prompt`].
pub fn transcript_of(user: &str) -> Option<&str> {
    let rest = user.strip_prefix(TRANSCRIPT_PREFIX)?;
    Some(rest.split("\n\n").next().unwrap_or(rest))
}

/// The group named by the demographic sentence of a user prompt, if any.
pub fn stated_group(user: &str) -> Option<&str> {
    user.split("\n\n")
        .find_map(|block| block.strip_prefix("The interviewee is a "))
        .and_then(|s| s.strip_suffix('.'))
}
