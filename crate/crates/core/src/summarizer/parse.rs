//! Splitting a completion into summary text and core-value themes.

use serde::{Deserialize, Serialize};

use crate::metrics::theme::normalize_theme;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "snake_case")]
pub enum ParseFailure {
    #[error("no Summary section")]
    MissingSummary,
    #[error("no Core Values section")]
    MissingCoreValues,
    #[error("Summary section is empty")]
    EmptySummary,
    #[error("Core Values section has no items")]
    NoThemes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedOutput {
    pub summary: String,
    pub themes: Vec<String>,
    /// Tag mode was requested but no `<response>` pair was found.
    pub untagged: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Header {
    Summary,
    CoreValues,
}

/// Recognises `Summary:` / `Core Values:` header lines, tolerating markdown
/// decoration and a missing colon on an otherwise empty line. Returns the
/// header and any text following the colon.
fn header(line: &str) -> Option<(Header, &str)> {
    let t = line.trim_start().trim_start_matches(|c: char| matches!(c, '#' | '*' | '_' | '>') || c.is_whitespace());
    let lower = t.to_lowercase();
    let (kind, len) = if lower.starts_with("summary") {
        (Header::Summary, "summary".len())
    } else if lower.starts_with("core values") {
        (Header::CoreValues, "core values".len())
    } else {
        return None;
    };
    let rest = t[len..].trim_start_matches(['*', '_']);
    if rest.trim().is_empty() {
        return Some((kind, ""));
    }
    let rest = rest.strip_prefix(':')?;
    Some((kind, rest.trim_start_matches(['*', '_']).trim()))
}

fn bullet_item(line: &str) -> Option<&str> {
    let t = line.trim();
    for b in ["- ", "* ", "\u{2022} ", "+ "] {
        if let Some(rest) = t.strip_prefix(b) {
            return Some(rest);
        }
    }
    let digits = t.find(|c: char| !c.is_ascii_digit())?;
    if digits == 0 {
        return None;
    }
    let rest = &t[digits..];
    rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") "))
}

fn inside_response_tags(raw: &str) -> Option<&str> {
    let start = raw.find("<response>")? + "<response>".len();
    let end = raw[start..].find("</response>")? + start;
    Some(&raw[start..end])
}

/// Parses a completion. With `tagged`, only the first `<response>` block is
/// read; if there is none the whole text is used and `untagged` is set.
pub fn parse_output(raw: &str, tagged: bool) -> Result<ParsedOutput, ParseFailure> {
    let (body, untagged) = if tagged {
        match inside_response_tags(raw) {
            Some(b) => (b, false),
            None => (raw, true),
        }
    } else {
        (raw, false)
    };

    let mut current = None;
    let mut summary: Option<Vec<&str>> = None;
    let mut values: Option<Vec<&str>> = None;
    for line in body.lines() {
        if let Some((h, rest)) = header(line) {
            current = Some(h);
            let slot = match h {
                Header::Summary => &mut summary,
                Header::CoreValues => &mut values,
            };
            let lines = slot.get_or_insert_with(Vec::new);
            if !rest.is_empty() {
                lines.push(rest);
            }
            continue;
        }
        match current {
            Some(Header::Summary) => summary.as_mut().expect("opened").push(line),
            Some(Header::CoreValues) => values.as_mut().expect("opened").push(line),
            None => {}
        }
    }

    let summary = summary.ok_or(ParseFailure::MissingSummary)?;
    let values = values.ok_or(ParseFailure::MissingCoreValues)?;
    let summary_text = summary
        .iter()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    if summary_text.is_empty() {
        return Err(ParseFailure::EmptySummary);
    }
    let mut themes: Vec<String> = Vec::new();
    for line in values {
        let Some(item) = bullet_item(line) else { continue };
        if let Some(theme) = normalize_theme(item, None) {
            if !themes.contains(&theme) {
                themes.push(theme);
            }
        }
    }
    if themes.is_empty() {
        return Err(ParseFailure::NoThemes);
    }
    Ok(ParsedOutput { summary: summary_text, themes, untagged })
}
