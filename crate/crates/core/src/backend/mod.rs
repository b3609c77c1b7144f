//! Uniform inference surface over model backends.
//!
//! Every backend answers two kinds of [`BackendRequest`]: ranking requests
//! (score each candidate continuation by log-probability) and greedy requests
//! (generate text at temperature zero).

mod cache;
mod http;
mod scripted;
mod synthetic;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::PromptText;
use crate::seed;

pub use cache::{with_cache, CacheRecord, CachedBackend};
pub use http::{HttpBackend, HttpConfig, RetryPolicy};
pub use scripted::ScriptedBackend;
pub use synthetic::{FormatBiasScale, SyntheticBiasBackend};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BackendMode {
    Ranking {
        candidates: Vec<String>,
        #[serde(default)]
        length_normalize: bool,
    },
    Greedy {
        max_new_tokens: usize,
    },
}

/// Side information for synthetic backends. Real backends ignore it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestContext {
    pub task_id: String,
    pub instance_uid: String,
    /// Gold answer surface form.
    pub gold: Option<String>,
    /// Canonical class order of the task; synthetic class biases index into it.
    pub classes: Vec<String>,
    pub format_fingerprint: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub prompt: PromptText,
    #[serde(flatten)]
    pub mode: BackendMode,
    /// Tag of the backend the request is meant for.
    pub route: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<RequestContext>,
}

impl BackendRequest {
    pub fn ranking(prompt: PromptText, candidates: Vec<String>, route: impl Into<String>) -> Self {
        Self {
            prompt,
            mode: BackendMode::Ranking {
                candidates,
                length_normalize: false,
            },
            route: route.into(),
            context: None,
        }
    }

    pub fn greedy(prompt: PromptText, max_new_tokens: usize, route: impl Into<String>) -> Self {
        Self {
            prompt,
            mode: BackendMode::Greedy { max_new_tokens },
            route: route.into(),
            context: None,
        }
    }

    pub fn with_context(mut self, context: RequestContext) -> Self {
        self.context = Some(context);
        self
    }

    pub fn with_length_normalization(mut self, on: bool) -> Self {
        if let BackendMode::Ranking {
            length_normalize, ..
        } = &mut self.mode
        {
            *length_normalize = on;
        }
        self
    }

    pub fn candidates(&self) -> Option<&[String]> {
        match &self.mode {
            BackendMode::Ranking { candidates, .. } => Some(candidates),
            BackendMode::Greedy { .. } => None,
        }
    }

    /// Content hash over prompt, mode, candidates, decode parameters, route and context.
    pub fn cache_key(&self) -> String {
        let canonical = serde_json::to_string(self).expect("request serializes");
        seed::stable_hex([canonical])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    /// Aligned with the request's candidates (ranking mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option_logprobs: Option<Vec<f64>>,
    /// Raw generated text (greedy mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_text: Option<String>,
    #[serde(default)]
    pub usage: Usage,
    #[serde(default)]
    pub latency_ms: u64,
}

impl BackendResponse {
    pub fn scores(logprobs: Vec<f64>) -> Self {
        Self {
            option_logprobs: Some(logprobs),
            generated_text: None,
            usage: Usage::default(),
            latency_ms: 0,
        }
    }

    pub fn text(text: impl Into<String>) -> Self {
        Self {
            option_logprobs: None,
            generated_text: Some(text.into()),
            usage: Usage::default(),
            latency_ms: 0,
        }
    }

    /// Option log-probabilities, checked for alignment with `request`.
    pub fn logprobs_for(&self, request: &BackendRequest) -> Result<&[f64]> {
        let expected = request
            .candidates()
            .ok_or_else(|| Error::Backend("greedy request has no candidates".into()))?
            .len();
        let scores = self
            .option_logprobs
            .as_deref()
            .ok_or_else(|| Error::Backend("response carries no option log-probabilities".into()))?;
        if scores.len() != expected {
            return Err(Error::Backend(format!(
                "{} log-probabilities for {expected} candidates",
                scores.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite option log-probability {bad}"
            )));
        }
        Ok(scores)
    }

    pub fn text_for(&self) -> Result<&str> {
        self.generated_text
            .as_deref()
            .ok_or_else(|| Error::Backend("response carries no generated text".into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub ranking: bool,
    pub greedy: bool,
}

/// A model that can score options and/or generate greedily.
///
/// Implementations must accept concurrent calls.
pub trait Backend: Send + Sync {
    fn tag(&self) -> &str;

    fn capabilities(&self) -> Capabilities;

    fn score_options(&self, request: &BackendRequest) -> Result<BackendResponse>;

    fn generate_greedy(&self, request: &BackendRequest) -> Result<BackendResponse>;

    /// Dispatch on the request mode.
    fn call(&self, request: &BackendRequest) -> Result<BackendResponse> {
        match request.mode {
            BackendMode::Ranking { ref candidates, .. } => {
                if candidates.is_empty() {
                    return Err(Error::Backend("ranking request without candidates".into()));
                }
                self.score_options(request)
            }
            BackendMode::Greedy { max_new_tokens } => {
                if max_new_tokens == 0 {
                    return Err(Error::Backend("max_new_tokens must be at least 1".into()));
                }
                self.generate_greedy(request)
            }
        }
    }
}

impl<B: Backend + ?Sized> Backend for Arc<B> {
    fn tag(&self) -> &str {
        (**self).tag()
    }
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }
    fn score_options(&self, request: &BackendRequest) -> Result<BackendResponse> {
        (**self).score_options(request)
    }
    fn generate_greedy(&self, request: &BackendRequest) -> Result<BackendResponse> {
        (**self).generate_greedy(request)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn tag(&self) -> &str {
        (**self).tag()
    }
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }
    fn score_options(&self, request: &BackendRequest) -> Result<BackendResponse> {
        (**self).score_options(request)
    }
    fn generate_greedy(&self, request: &BackendRequest) -> Result<BackendResponse> {
        (**self).generate_greedy(request)
    }
}

/// `log_softmax` over a score vector.
pub fn log_softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln() + max;
    scores.iter().map(|s| s - log_sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompt(text: &str) -> PromptText {
        PromptText::Completion { text: text.into() }
    }

    #[test]
    fn cache_key_sensitivity() {
        let a = BackendRequest::ranking(prompt("p"), vec!["Yes".into(), "No".into()], "m");
        let b = BackendRequest::ranking(prompt("p"), vec!["Yes".into(), "Nope".into()], "m");
        let c = BackendRequest::ranking(prompt("p"), vec!["Yes".into(), "No".into()], "other");
        assert_eq!(a.cache_key(), a.clone().cache_key());
        assert_ne!(a.cache_key(), b.cache_key());
        assert_ne!(a.cache_key(), c.cache_key());
        assert_ne!(
            a.cache_key(),
            a.clone().with_length_normalization(true).cache_key()
        );
    }

    #[test]
    fn log_softmax_normalizes() {
        let out = log_softmax(&[1.0, 2.0, 3.0]);
        let total: f64 = out.iter().map(|x| x.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn misaligned_response_is_rejected() {
        let req = BackendRequest::ranking(prompt("p"), vec!["a".into(), "b".into()], "m");
        assert!(BackendResponse::scores(vec![-1.0])
            .logprobs_for(&req)
            .is_err());
        assert!(BackendResponse::scores(vec![-1.0, f64::NAN])
            .logprobs_for(&req)
            .is_err());
        assert!(BackendResponse::scores(vec![-1.0, -2.0])
            .logprobs_for(&req)
            .is_ok());
    }
}
