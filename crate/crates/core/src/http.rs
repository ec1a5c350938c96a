//! Blocking JSON POST with bounded retries.

use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone, thiserror::Error)]
pub enum HttpError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("could not decode response: {0}")]
    Decode(String),
}

impl HttpError {
    fn retryable(&self) -> bool {
        match self {
            HttpError::Transport(_) => true,
            HttpError::Status { status, .. } => *status >= 500 || *status == 429,
            HttpError::Decode(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(500),
            timeout: Duration::from_secs(600),
        }
    }
}

pub(crate) fn post_json<B: Serialize, T: DeserializeOwned>(
    url: &str,
    api_key: Option<&str>,
    body: &B,
    policy: &RetryPolicy,
) -> Result<T, HttpError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(policy.timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let attempts = policy.attempts.max(1);
    let mut last = HttpError::Transport("no attempt made".into());
    for attempt in 0..attempts {
        if attempt > 0 {
            thread::sleep(policy.base_delay * 2u32.pow(attempt - 1));
        }
        match post_once(&agent, url, api_key, body) {
            Ok(v) => return Ok(v),
            Err(e) if e.retryable() && attempt + 1 < attempts => {
                log::warn!("request to {url} failed (attempt {}): {e}", attempt + 1);
                last = e;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

fn post_once<B: Serialize, T: DeserializeOwned>(
    agent: &ureq::Agent,
    url: &str,
    api_key: Option<&str>,
    body: &B,
) -> Result<T, HttpError> {
    let mut req = agent.post(url);
    if let Some(key) = api_key {
        req = req.header("Authorization", &format!("Bearer {key}"));
    }
    let mut resp = req
        .send_json(body)
        .map_err(|e| HttpError::Transport(e.to_string()))?;
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| HttpError::Transport(e.to_string()))?;
    if !(200..300).contains(&status) {
        return Err(HttpError::Status { status, body: text });
    }
    serde_json::from_str(&text).map_err(|e| HttpError::Decode(e.to_string()))
}


#[cfg(test)]
mod tests {
    use super::testing::CannedServer;
    use super::*;

    fn fast() -> RetryPolicy {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(1),
            timeout: Duration::from_secs(5),
        }
    }

    #[test]
    fn retries_server_errors_then_succeeds() {
        let server = CannedServer::start(vec![
            (503, "{}".into()),
            (500, "{}".into()),
            (200, r#"{"ok": 1}"#.into()),
        ]);
        let got: serde_json::Value =
            post_json(&server.url, Some("k"), &serde_json::json!({"a": 1}), &fast()).unwrap();
        assert_eq!(got["ok"], 1);
        assert_eq!(server.finish().len(), 3);
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let server = CannedServer::start(vec![(502, "a".into()), (502, "b".into()), (502, "c".into())]);
        let err = post_json::<_, serde_json::Value>(&server.url, None, &1, &fast()).unwrap_err();
        assert!(matches!(err, HttpError::Status { status: 502, .. }));
        assert_eq!(server.finish().len(), 3);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let server = CannedServer::start(vec![(400, "bad".into())]);
        let err = post_json::<_, serde_json::Value>(&server.url, None, &1, &fast()).unwrap_err();
        assert!(matches!(err, HttpError::Status { status: 400, .. }));
        assert_eq!(server.finish().len(), 1);
    }
}
