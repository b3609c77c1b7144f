use std::path::Path;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rules::{argmax, softmax};
use super::{MethodPrediction, MethodTag};
use crate::backend::{Backend, BackendRequest};
use crate::error::{Error, Result};
use crate::seed;

/// 10,000 frequent English words, one per line.
pub const DEFAULT_TOKEN_POOL: &str = include_str!("../../data/token_pool.txt");

fn default_pool() -> Arc<[String]> {
    DEFAULT_TOKEN_POOL
        .lines()
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

fn default_rate() -> f64 {
    0.15
}

fn default_perturbations() -> usize {
    5
}

/// Random token substitution used to probe a model's sensitivity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    #[serde(default = "default_rate")]
    pub substitution_rate: f64,
    #[serde(default = "default_perturbations")]
    pub n_perturbations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip, default = "default_pool")]
    pub token_pool: Arc<[String]>,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            substitution_rate: default_rate(),
            n_perturbations: default_perturbations(),
            seed: 0,
            token_pool: default_pool(),
        }
    }
}

impl PerturbationConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_token_pool(mut self, pool: Vec<String>) -> Self {
        self.token_pool = pool.into();
        self
    }

    /// Replace the pool with the whitespace-separated words of a file.
    pub fn with_token_pool_file(self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(self.with_token_pool(text.split_whitespace().map(String::from).collect()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.substitution_rate > 0.0 && self.substitution_rate < 1.0) {
            return Err(Error::Config(format!(
                "substitution rate {} outside (0, 1)",
                self.substitution_rate
            )));
        }
        if self.n_perturbations == 0 {
            return Err(Error::Config("n_perturbations must be at least 1".into()));
        }
        if self.token_pool.is_empty() {
            return Err(Error::Config("token pool is empty".into()));
        }
        Ok(())
    }
}

/// Replace `max(1, round(rate · n))` of the `n` whitespace-separated tokens
/// of `text` with words from the token pool. Whitespace is preserved.
/// Deterministic in `(config.seed, draw, text)`.
pub fn perturb_tokens(text: &str, config: &PerturbationConfig, draw: usize) -> Result<String> {
    config.validate()?;
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    if spans.is_empty() {
        return Err(Error::Config("cannot perturb text without tokens".into()));
    }
    let n = spans.len();
    let k = ((config.substitution_rate * n as f64).round() as usize).clamp(1, n);
    let mut rng = seed::rng_from_seed(seed::derive_seed(
        config.seed,
        &["perturb", &draw.to_string(), text],
    ));
    let mut positions = index::sample(&mut rng, n, k).into_vec();
    positions.sort_unstable();
    let replacements: Vec<&str> = positions
        .iter()
        .map(|_| config.token_pool[rng.random_range(0..config.token_pool.len())].as_str())
        .collect();

    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for (pos, word) in positions.iter().zip(replacements) {
        let (s, e) = spans[*pos];
        out.push_str(&text[cursor..s]);
        out.push_str(word);
        cursor = e;
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}

/// Per-option population variance of probability rows.
pub fn sensitivity(perturbed_probs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = perturbed_probs
        .first()
        .ok_or_else(|| Error::Shape("no perturbed rows".into()))?;
    let width = first.len();
    if perturbed_probs.iter().any(|r| r.len() != width) {
        return Err(Error::Shape("perturbed rows differ in option count".into()));
    }
    let n = perturbed_probs.len() as f64;
    Ok((0..width)
        .map(|j| {
            let mean = perturbed_probs.iter().map(|r| r[j]).sum::<f64>() / n;
            perturbed_probs
                .iter()
                .map(|r| (r[j] - mean).powi(2))
                .sum::<f64>()
                / n
        })
        .collect())
}

/// `α · P(y) − (1 − α) · s_y` per option.
pub fn sad_scores(probs: &[f64], sensitivities: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    if probs.len() != sensitivities.len() || probs.is_empty() {
        return Err(Error::Shape(format!(
            "{} probabilities vs {} sensitivities",
            probs.len(),
            sensitivities.len()
        )));
    }
    Ok(probs
        .iter()
        .zip(sensitivities)
        .map(|(p, s)| alpha * p - (1.0 - alpha) * s)
        .collect())
}

/// Sensitivity-aware decoding for one instance.
///
/// `build_request` renders the full request for a given instance input; it is
/// called once with the clean `input` and once per perturbation draw.
pub fn sad_predict<F>(
    backend: &dyn Backend,
    input: &str,
    build_request: F,
    alpha: f64,
    config: &PerturbationConfig,
) -> Result<MethodPrediction>
where
    F: Fn(&str) -> Result<BackendRequest>,
{
    config.validate()?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    if !backend.capabilities().ranking {
        return Err(Error::Capability(format!(
            "sensitivity-aware decoding needs option scores; backend {} cannot rank",
            backend.tag()
        )));
    }
    let score = |text: &str| -> Result<Vec<f64>> {
        let request = build_request(text)?;
        let response = backend.call(&request)?;
        Ok(softmax(response.logprobs_for(&request)?))
    };
    let base = score(input)?;
    let perturbed = (0..config.n_perturbations)
        .map(|draw| score(&perturb_tokens(input, config, draw)?))
        .collect::<Result<Vec<_>>>()?;
    let s = sensitivity(&perturbed)?;
    let scores = sad_scores(&base, &s, alpha)?;
    Ok(
        MethodPrediction::new(MethodTag::SensitivityAware, argmax(&scores), Some(scores))
            .with_diagnostic("sensitivity", &s)
            .with_diagnostic("base_probs", &base)
            .with_diagnostic("alpha", alpha),
    )
}
