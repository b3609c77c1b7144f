use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{log_softmax, Backend, BackendRequest, BackendResponse, Capabilities, RequestContext};
use crate::error::{Error, Result};
use crate::seed;

/// Per-format multiplier applied to the class-bias vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FormatBiasScale {
    Constant {
        value: f64,
    },
    /// Uniform in `[min, max]`, drawn from the backend seed and the format fingerprint.
    Hashed {
        min: f64,
        max: f64,
    },
    /// Looked up by format fingerprint; unknown fingerprints are an error.
    Explicit {
        scales: BTreeMap<String, f64>,
    },
}

impl Default for FormatBiasScale {
    fn default() -> Self {
        Self::Constant { value: 1.0 }
    }
}

/// Model with a controllable preference for some classes.
///
/// The logit of a candidate is `s·[candidate is gold] + b[class]·m_f + σ·ε`
/// where `ε ~ N(0, 1)` is drawn from a hash of the seed, the prompt text and
/// the candidate, and `m_f` is the [`FormatBiasScale`] of the request's format.
/// Responses are `log_softmax` over the candidates.
///
/// Gold and class order come from the request's [`RequestContext`]. Without a
/// context no candidate is gold and class biases are applied by position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBiasBackend {
    pub tag: String,
    pub bias: Vec<f64>,
    pub signal: f64,
    pub noise: f64,
    pub seed: u64,
    #[serde(default)]
    pub format_scale: FormatBiasScale,
}

impl SyntheticBiasBackend {
    pub fn new(bias: Vec<f64>, signal: f64, noise: f64, seed: u64) -> Self {
        Self {
            tag: "synthetic".into(),
            bias,
            signal,
            noise,
            seed,
            format_scale: FormatBiasScale::default(),
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn with_format_scale(mut self, scale: FormatBiasScale) -> Self {
        self.format_scale = scale;
        self
    }

    fn format_multiplier(&self, context: Option<&RequestContext>) -> Result<f64> {
        let fingerprint = context.and_then(|c| c.format_fingerprint.as_deref());
        match (&self.format_scale, fingerprint) {
            (FormatBiasScale::Constant { value }, _) => Ok(*value),
            (_, None) => Ok(1.0),
            (FormatBiasScale::Hashed { min, max }, Some(fp)) => {
                Ok(min + (max - min) * seed::unit_interval(self.seed, &["format-scale", fp]))
            }
            (FormatBiasScale::Explicit { scales }, Some(fp)) => scales
                .get(fp)
                .copied()
                .ok_or_else(|| Error::Backend(format!("no bias scale for format {fp}"))),
        }
    }

    /// Raw logits for `candidates` under `prompt`.
    pub fn logits(
        &self,
        prompt: &str,
        candidates: &[String],
        context: Option<&RequestContext>,
    ) -> Result<Vec<f64>> {
        let scale = self.format_multiplier(context)?;
        let gold = context.and_then(|c| c.gold.as_deref());
        Ok(candidates
            .iter()
            .enumerate()
            .map(|(position, candidate)| {
                let class = match context {
                    Some(c) if !c.classes.is_empty() => {
                        c.classes.iter().position(|k| k == candidate)
                    }
                    _ => Some(position),
                };
                let bias = class.and_then(|k| self.bias.get(k)).copied().unwrap_or(0.0);
                let signal = if gold == Some(candidate.as_str()) {
                    self.signal
                } else {
                    0.0
                };
                let noise = if self.noise == 0.0 {
                    0.0
                } else {
                    let draw_seed = seed::derive_seed(self.seed, &["noise", prompt, candidate]);
                    let eps: f64 = seed::rng_from_seed(draw_seed).sample(StandardNormal);
                    self.noise * eps
                };
                signal + bias * scale + noise
            })
            .collect())
    }
}

impl Backend for SyntheticBiasBackend {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            ranking: true,
            greedy: true,
        }
    }

    fn score_options(&self, request: &BackendRequest) -> Result<BackendResponse> {
        let candidates = request
            .candidates()
            .ok_or_else(|| Error::Backend("score_options called with a greedy request".into()))?;
        let logits = self.logits(&request.prompt.flat(), candidates, request.context.as_ref())?;
        Ok(BackendResponse::scores(log_softmax(&logits)))
    }

    /// Emits the highest-scoring class string of the request context verbatim.
    fn generate_greedy(&self, request: &BackendRequest) -> Result<BackendResponse> {
        let context = request
            .context
            .as_ref()
            .filter(|c| !c.classes.is_empty())
            .ok_or_else(|| {
                Error::Capability("synthetic greedy decoding needs the task classes".into())
            })?;
        let logits = self.logits(&request.prompt.flat(), &context.classes, Some(context))?;
        let mut best = 0;
        for (i, v) in logits.iter().enumerate() {
            if *v > logits[best] {
                best = i;
            }
        }
        Ok(BackendResponse::text(context.classes[best].clone()))
    }
}
