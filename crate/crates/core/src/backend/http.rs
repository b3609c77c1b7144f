use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Backend, BackendRequest, BackendResponse, Capabilities, Usage};
use crate::error::{Error, Result};
use crate::grammar::PromptText;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay_ms: 500,
        }
    }
}

/// Connection settings for an OpenAI-compatible server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub tag: String,
    /// e.g. `http://localhost:8000/v1`
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token; unset or empty means no auth header.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    /// Whether `/completions` with `echo` and `logprobs` is available. Without it
    /// the backend cannot rank options.
    #[serde(default = "default_true")]
    pub completions_logprobs: bool,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}

fn default_true() -> bool {
    true
}

fn default_timeout() -> u64 {
    60
}

impl HttpConfig {
    pub fn new(
        tag: impl Into<String>,
        base_url: impl Into<String>,
        model: impl Into<String>,
    ) -> Self {
        Self {
            tag: tag.into(),
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: default_key_env(),
            completions_logprobs: true,
            timeout_secs: default_timeout(),
            retry: RetryPolicy::default(),
        }
    }
}

/// Client for `/completions` (ranking via echoed log-probabilities) and
/// `/chat/completions` (greedy decoding at temperature 0).
pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty());
        Self {
            config,
            agent,
            api_key,
        }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn url(&self, endpoint: &str) -> String {
        format!("{}/{endpoint}", self.config.base_url.trim_end_matches('/'))
    }

    fn post_once(&self, url: &str, body: &Value) -> std::result::Result<Value, (bool, Error)> {
        let mut req = self.agent.post(url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| (true, Error::Transport(format!("{url}: {e}"))))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| (true, Error::Transport(format!("{url}: reading body: {e}"))))?;
        if status == 429 || status >= 500 {
            return Err((
                true,
                Error::Transport(format!("{url}: HTTP {status}: {text}")),
            ));
        }
        if status >= 400 {
            return Err((
                false,
                Error::Transport(format!("{url}: HTTP {status}: {text}")),
            ));
        }
        serde_json::from_str(&text)
            .map_err(|e| (false, Error::Backend(format!("{url}: malformed JSON: {e}"))))
    }

    fn post(&self, endpoint: &str, body: &Value) -> Result<Value> {
        let url = self.url(endpoint);
        let attempts = self.config.retry.attempts.max(1);
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self
                    .config
                    .retry
                    .base_delay_ms
                    .saturating_mul(1 << (attempt - 1));
                log::warn!(
                    "retrying {url} in {delay} ms (attempt {}/{attempts})",
                    attempt + 1
                );
                std::thread::sleep(Duration::from_millis(delay));
            }
            match self.post_once(&url, body) {
                Ok(v) => return Ok(v),
                Err((true, e)) => last = Some(e),
                Err((false, e)) => return Err(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn candidate_logprob(
        &self,
        prompt: &str,
        candidate: &str,
        normalize: bool,
    ) -> Result<(f64, Usage)> {
        let body = json!({
            "model": self.config.model,
            "prompt": format!("{prompt}{candidate}"),
            "max_tokens": 0,
            "echo": true,
            "logprobs": 0,
            "temperature": 0,
        });
        let value = self.post("completions", &body)?;
        let logprobs = &value["choices"][0]["logprobs"];
        let offsets = logprobs["text_offset"]
            .as_array()
            .ok_or_else(|| Error::Capability("completion response lacks token offsets".into()))?;
        let token_logprobs = logprobs["token_logprobs"].as_array().ok_or_else(|| {
            Error::Capability("completion response lacks token log-probabilities".into())
        })?;
        let boundary = prompt.chars().count() as u64;
        let mut total = 0.0;
        let mut count = 0usize;
        for (offset, lp) in offsets.iter().zip(token_logprobs) {
            if offset.as_u64().is_some_and(|o| o >= boundary) {
                let lp = lp.as_f64().ok_or_else(|| {
                    Error::Backend("candidate token without log-probability".into())
                })?;
                total += lp;
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::Backend(format!(
                "no tokens found for candidate {candidate:?}"
            )));
        }
        if normalize {
            total /= count as f64;
        }
        Ok((total, parse_usage(&value)))
    }
}

fn parse_usage(value: &Value) -> Usage {
    Usage {
        prompt_tokens: value["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
        completion_tokens: value["usage"]["completion_tokens"].as_u64().unwrap_or(0),
    }
}

impl Backend for HttpBackend {
    fn tag(&self) -> &str {
        &self.config.tag
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            ranking: self.config.completions_logprobs,
            greedy: true,
        }
    }

    /// One echo request per candidate; the score is the sum of log-probabilities
    /// of the tokens starting at or after the end of the prompt.
    fn score_options(&self, request: &BackendRequest) -> Result<BackendResponse> {
        if !self.config.completions_logprobs {
            return Err(Error::Capability(format!(
                "backend {} exposes no completion log-probabilities",
                self.config.tag
            )));
        }
        let candidates = request
            .candidates()
            .ok_or_else(|| Error::Backend("score_options called with a greedy request".into()))?;
        let normalize = matches!(
            request.mode,
            super::BackendMode::Ranking {
                length_normalize: true,
                ..
            }
        );
        let prompt = request.prompt.flat();
        let start = Instant::now();
        let mut scores = Vec::with_capacity(candidates.len());
        let mut usage = Usage::default();
        for candidate in candidates {
            let (lp, u) = self.candidate_logprob(&prompt, candidate, normalize)?;
            scores.push(lp);
            usage.prompt_tokens += u.prompt_tokens;
            usage.completion_tokens += u.completion_tokens;
        }
        Ok(BackendResponse {
            option_logprobs: Some(scores),
            generated_text: None,
            usage,
            latency_ms: start.elapsed().as_millis() as u64,
        })
    }

    fn generate_greedy(&self, request: &BackendRequest) -> Result<BackendResponse> {
        let super::BackendMode::Greedy { max_new_tokens } = request.mode else {
            return Err(Error::Backend(
                "generate_greedy called with a ranking request".into(),
            ));
        };
        let start = Instant::now();
        let (value, text) = match &request.prompt {
            PromptText::Chat { system, user } => {
                let body = json!({
                    "model": self.config.model,
                    "messages": [
                        {"role": "system", "content": system},
                        {"role": "user", "content": user},
                    ],
                    "max_tokens": max_new_tokens,
                    "temperature": 0,
                });
                let value = self.post("chat/completions", &body)?;
                let text = value["choices"][0]["message"]["content"]
                    .as_str()
                    .map(String::from);
                (value, text)
            }
            PromptText::Completion { text } => {
                let body = json!({
                    "model": self.config.model,
                    "prompt": text,
                    "max_tokens": max_new_tokens,
                    "temperature": 0,
                });
                let value = self.post("completions", &body)?;
                let text = value["choices"][0]["text"].as_str().map(String::from);
                (value, text)
            }
        };
        let text = text.ok_or_else(|| Error::Backend("response has no generated text".into()))?;
        Ok(BackendResponse {
            option_logprobs: None,
            generated_text: Some(text),
            usage: parse_usage(&value),
            latency_ms: start.elapsed().as_millis() as u64,
        })
    }
}
