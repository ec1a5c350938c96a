//! Chat-completion clients.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::http::{post_json, HttpError, RetryPolicy};
use crate::store::{digest_parts, ContentStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: u64,
}

impl ChatRequest {
    pub fn new(model: &str, system: &str, user: &str, temperature: f64, max_tokens: u32, seed: u64) -> Self {
        ChatRequest {
            model: model.to_string(),
            messages: vec![
                ChatMessage { role: "system".into(), content: system.to_string() },
                ChatMessage { role: "user".into(), content: user.to_string() },
            ],
            temperature,
            max_tokens,
            seed,
        }
    }

    fn content_of(&self, role: &str) -> &str {
        self.messages
            .iter()
            .find(|m| m.role == role)
            .map_or("", |m| m.content.as_str())
    }

    pub fn system(&self) -> &str {
        self.content_of("system")
    }

    pub fn user(&self) -> &str {
        self.content_of("user")
    }
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, HttpError>;
}

impl<C: ChatClient + ?Sized> ChatClient for Box<C> {
    fn complete(&self, request: &ChatRequest) -> Result<String, HttpError> {
        (**self).complete(request)
    }
}

/// Cache key of one completion.
pub fn cache_key(model: &str, system: &str, user: &str, seed: u64, temperature: f64) -> String {
    digest_parts([
        b"chat".as_slice(),
        model.as_bytes(),
        system.as_bytes(),
        user.as_bytes(),
        &seed.to_le_bytes(),
        &temperature.to_bits().to_le_bytes(),
    ])
}

/// Client for endpoints speaking the OpenAI-style `/chat/completions` API.
#[derive(Debug, Clone)]
pub struct OpenAiCompatClient {
    url: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

impl OpenAiCompatClient {
    /// `endpoint` is the API base (`.../v1`) or the full completions URL.
    pub fn new(endpoint: &str, api_key: Option<String>) -> Self {
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        };
        OpenAiCompatClient { url, api_key, retry: RetryPolicy::default() }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl ChatClient for OpenAiCompatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, HttpError> {
        let resp: CompletionResponse = post_json(&self.url, self.api_key.as_deref(), request, &self.retry)?;
        resp.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| HttpError::Decode("response has no message content".into()))
    }
}

/// Serves completions from a content store, forwarding misses to `inner`.
pub struct CachedClient<C> {
    inner: C,
    store: ContentStore,
    forwarded: AtomicUsize,
}

impl<C: ChatClient> CachedClient<C> {
    pub fn new(inner: C, store: ContentStore) -> Self {
        CachedClient { inner, store, forwarded: AtomicUsize::new(0) }
    }

    /// Number of requests that reached the inner client.
    pub fn forwarded(&self) -> usize {
        self.forwarded.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &C {
        &self.inner
    }
}

impl<C: ChatClient> ChatClient for CachedClient<C> {
    fn complete(&self, request: &ChatRequest) -> Result<String, HttpError> {
        let key = cache_key(&request.model, request.system(), request.user(), request.seed, request.temperature);
        match self.store.get(&key) {
            Ok(Some(hit)) => return Ok(hit),
            Ok(None) => {}
            Err(e) => log::warn!("completion cache read failed: {e}"),
        }
        self.forwarded.fetch_add(1, Ordering::SeqCst);
        let text = self.inner.complete(request)?;
        if let Err(e) = self.store.put(&key, &text) {
            log::warn!("completion cache write failed: {e}");
        }
        Ok(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::testing::CannedServer;
    use crate::summarizer::mock::MockChatClient;

    #[test]
    fn cache_key_covers_every_field() {
        let base = cache_key("m", "s", "u", 1, 0.7);
        assert_eq!(base, cache_key("m", "s", "u", 1, 0.7));
        for other in [
            cache_key("m2", "s", "u", 1, 0.7),
            cache_key("m", "s2", "u", 1, 0.7),
            cache_key("m", "s", "u2", 1, 0.7),
            cache_key("m", "s", "u", 2, 0.7),
            cache_key("m", "s", "u", 1, 0.8),
        ] {
            assert_ne!(base, other);
        }
    }

    #[test]
    fn cached_client_forwards_only_misses() {
        let dir = tempfile::tempdir().unwrap();
        let client = CachedClient::new(MockChatClient::fixed("hello"), ContentStore::open(dir.path()).unwrap());
        let r1 = ChatRequest::new("m", "s", "u", 0.7, 10, 1);
        let r2 = ChatRequest::new("m", "s", "u", 0.7, 10, 2);
        assert_eq!(client.complete(&r1).unwrap(), "hello");
        assert_eq!(client.complete(&r1).unwrap(), "hello");
        assert_eq!(client.complete(&r2).unwrap(), "hello");
        assert_eq!(client.forwarded(), 2);
        assert_eq!(client.inner().calls(), 2);
    }

    #[test]
    fn openai_client_round_trip() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"Summary:\nx"}}]}"#;
        let server = CannedServer::start(vec![(200, body.to_string())]);
        let client = OpenAiCompatClient::new(&format!("{}/v1/", server.url), Some("k".into()));
        assert!(client.url().ends_with("/v1/chat/completions"));
        let out = client.complete(&ChatRequest::new("m", "sys", "usr", 0.7, 6000, 3)).unwrap();
        assert_eq!(out, "Summary:\nx");
        let sent: serde_json::Value = serde_json::from_str(&server.finish()[0]).unwrap();
        assert_eq!(sent["model"], "m");
        assert_eq!(sent["seed"], 3);
        assert_eq!(sent["max_tokens"], 6000);
        assert_eq!(sent["messages"][1]["content"], "usr");
    }

    #[test]
    fn missing_content_is_a_decode_error() {
        let server = CannedServer::start(vec![(200, r#"{"choices":[]}"#.to_string())]);
        let client = OpenAiCompatClient::new(&server.url, None);
        let err = client.complete(&ChatRequest::new("m", "s", "u", 0.7, 1, 0)).unwrap_err();
        assert!(matches!(err, HttpError::Decode(_)));
        server.finish();
    }
}
