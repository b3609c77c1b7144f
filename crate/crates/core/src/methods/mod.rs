//! Prediction rules and inference-time robustness methods.
//!
//! The pure rules ([`predict_ranking`], [`batch_calibrate`],
//! [`template_ensemble_avg`], ...) operate on score matrices. [`run_method`]
//! drives them against a [`Backend`](crate::backend::Backend) over a task and a
//! set of formats.

mod rules;
mod run;
mod sad;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use rules::{
    argmax, batch_calibrate, batch_calibrate_chunked, normalize_answer, predict_greedy,
    predict_ranking, softmax, template_ensemble_avg, template_ensemble_avg_logprobs,
    template_ensemble_vote, template_ensemble_vote_abstaining,
};
pub use run::{
    ensemble_formats, run_method, run_method_partial, EvalInput, IndexedFormat, MethodConfig,
    MethodOutput,
};
pub use sad::{
    perturb_tokens, sad_predict, sad_scores, sensitivity, PerturbationConfig, DEFAULT_TOKEN_POOL,
};

/// Default number of formats in a template ensemble.
pub const DEFAULT_ENSEMBLE_SIZE: usize = 5;

/// Default weight of the clean-prompt probability in sensitivity-aware decoding.
pub const DEFAULT_SAD_ALPHA: f64 = 0.7;

/// Free-form per-prediction details, serialized into result rows.
pub type Diagnostics = BTreeMap<String, serde_json::Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    FewShotRanking,
    FewShotGreedy,
    BatchCalibration,
    TemplateEnsembleAvg,
    TemplateEnsembleVote,
    SensitivityAware,
}

impl MethodTag {
    pub const ALL: [MethodTag; 6] = [
        Self::FewShotRanking,
        Self::FewShotGreedy,
        Self::BatchCalibration,
        Self::TemplateEnsembleAvg,
        Self::TemplateEnsembleVote,
        Self::SensitivityAware,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::FewShotRanking => "few_shot_ranking",
            Self::FewShotGreedy => "few_shot_greedy",
            Self::BatchCalibration => "batch_calibration",
            Self::TemplateEnsembleAvg => "template_ensemble_avg",
            Self::TemplateEnsembleVote => "template_ensemble_vote",
            Self::SensitivityAware => "sensitivity_aware",
        }
    }

    /// Whether the method can run on a backend without option scoring.
    pub fn supports_greedy(self) -> bool {
        matches!(self, Self::FewShotGreedy | Self::TemplateEnsembleVote)
    }

    /// Whether the method can run on a ranking backend.
    pub fn supports_ranking(self) -> bool {
        self != Self::FewShotGreedy
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, Self::FewShotRanking | Self::FewShotGreedy)
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Inference regime: score options, or generate and match.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceMode {
    #[default]
    Ranking,
    Greedy,
}

/// Outcome of one method on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodPrediction {
    /// `None` when the method abstains (greedy text matched no option).
    pub chosen_index: Option<usize>,
    pub per_option_scores: Option<Vec<f64>>,
    pub method: MethodTag,
    pub diagnostics: Diagnostics,
}

impl MethodPrediction {
    pub fn new(
        method: MethodTag,
        chosen_index: Option<usize>,
        per_option_scores: Option<Vec<f64>>,
    ) -> Self {
        Self {
            chosen_index,
            per_option_scores,
            method,
            diagnostics: Diagnostics::new(),
        }
    }

    pub fn with_diagnostic(mut self, key: &str, value: impl Serialize) -> Self {
        self.diagnostics.insert(
            key.to_string(),
            serde_json::to_value(value).expect("diagnostic serializes"),
        );
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for tag in MethodTag::ALL {
            assert_eq!(tag.as_str().parse::<MethodTag>().unwrap(), tag);
            assert_eq!(serde_json::to_string(&tag).unwrap(), format!("\"{tag}\""));
        }
        assert!("nope".parse::<MethodTag>().is_err());
    }
}
