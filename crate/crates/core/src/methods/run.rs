use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::rules::{
    argmax, batch_calibrate, batch_calibrate_chunked, predict_greedy, predict_ranking,
    template_ensemble_avg_logprobs, template_ensemble_vote_abstaining,
};
use super::sad::{sad_predict, PerturbationConfig};
use super::{InferenceMode, MethodPrediction, MethodTag, DEFAULT_ENSEMBLE_SIZE, DEFAULT_SAD_ALPHA};
use crate::backend::{Backend, BackendRequest, BackendResponse, Capabilities, RequestContext};
use crate::data::{Instance, Task};
use crate::error::{Error, Result};
use crate::grammar::{FormatComponentCatalog, FormatSpec, RenderMode, RenderedPrompt, Renderer};
use crate::runner::{EvalRecord, UnitFailure};
use crate::seed;

fn default_ensemble_size() -> usize {
    DEFAULT_ENSEMBLE_SIZE
}

fn default_alpha() -> f64 {
    DEFAULT_SAD_ALPHA
}

fn default_max_new_tokens() -> usize {
    16
}

/// Parameters shared by all methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    #[serde(default = "default_ensemble_size")]
    pub ensemble_size: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    /// Batch calibration chunk size; `None` calibrates over the whole evaluation set.
    #[serde(default)]
    pub batch_size: Option<usize>,
    /// How ensemble members predict in `template_ensemble_vote`.
    #[serde(default)]
    pub inference: InferenceMode,
    #[serde(default = "default_max_new_tokens")]
    pub max_new_tokens: usize,
    #[serde(default)]
    pub length_normalize: bool,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            ensemble_size: DEFAULT_ENSEMBLE_SIZE,
            alpha: DEFAULT_SAD_ALPHA,
            perturbation: PerturbationConfig::default(),
            batch_size: None,
            inference: InferenceMode::Ranking,
            max_new_tokens: default_max_new_tokens(),
            length_normalize: false,
        }
    }
}

/// A format together with its position in the task's format list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedFormat {
    pub id: usize,
    pub spec: FormatSpec,
}

impl IndexedFormat {
    pub fn enumerate(formats: &[FormatSpec]) -> Vec<IndexedFormat> {
        formats
            .iter()
            .enumerate()
            .map(|(id, spec)| IndexedFormat { id, spec: *spec })
            .collect()
    }
}

/// What a method is evaluated on.
#[derive(Clone, Copy, Debug)]
pub struct EvalInput<'a> {
    pub model: &'a str,
    pub scenario: &'a str,
    pub catalog: &'a FormatComponentCatalog,
    /// The task the instances belong to; its label order defines class indices.
    pub task: &'a Task,
    pub instances: &'a [Instance],
    pub demonstrations: &'a [Instance],
    pub render_mode: RenderMode,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MethodOutput {
    pub records: Vec<EvalRecord>,
    pub failures: Vec<UnitFailure>,
}

/// Ensemble for evaluation format `format`: the format itself followed by
/// `size − 1` distinct other formats from the catalog universe, sampled with a
/// seed derived from `(seed, task_id, fingerprint)`.
pub fn ensemble_formats(
    catalog: &FormatComponentCatalog,
    task_id: &str,
    format: &FormatSpec,
    size: usize,
    seed: u64,
) -> Result<Vec<FormatSpec>> {
    if size == 0 {
        return Err(Error::Config("ensemble size must be at least 1".into()));
    }
    let with_options = format.has_options();
    let universe = catalog.format_universe_size(with_options);
    if (size as u64) > universe {
        return Err(Error::Capacity(format!(
            "ensemble of {size} formats exceeds the {universe}-format universe"
        )));
    }
    let fingerprint = format.fingerprint(catalog)?;
    let member_seed = seed::derive_seed(seed, &["ensemble", task_id, &fingerprint]);
    let mut members = vec![*format];
    members.extend(
        catalog
            .sample_formats(with_options, size, member_seed)?
            .into_iter()
            .filter(|f| f != format)
            .take(size - 1),
    );
    Ok(members)
}

struct Evaluator<'a> {
    input: EvalInput<'a>,
    backend: &'a dyn Backend,
    config: &'a MethodConfig,
    method: MethodTag,
    labels: Vec<String>,
}

struct Scored<T> {
    value: T,
    elapsed_ms: u64,
}

impl<'a> Evaluator<'a> {
    fn render(&self, instance: &Instance, format: &FormatSpec) -> Result<RenderedPrompt> {
        Renderer::new(self.input.catalog).render(
            self.input.task,
            instance,
            self.input.demonstrations,
            format,
            self.input.render_mode,
        )
    }

    fn context(&self, instance: &Instance, format: &FormatSpec) -> Result<RequestContext> {
        Ok(RequestContext {
            task_id: self.input.task.id.clone(),
            instance_uid: instance.uid.clone(),
            gold: Some(instance.gold.clone()),
            classes: self.labels.clone(),
            format_fingerprint: Some(format.fingerprint(self.input.catalog)?),
        })
    }

    fn ranking_request(&self, instance: &Instance, format: &FormatSpec) -> Result<BackendRequest> {
        let rendered = self.render(instance, format)?;
        Ok(BackendRequest::ranking(
            rendered.prompt,
            rendered.answer_surface_forms,
            self.backend.tag(),
        )
        .with_length_normalization(self.config.length_normalize)
        .with_context(self.context(instance, format)?))
    }

    fn logprobs(&self, instance: &Instance, format: &FormatSpec) -> Result<Scored<Vec<f64>>> {
        let request = self.ranking_request(instance, format)?;
        let response = self.backend.call(&request)?;
        Ok(Scored {
            value: response.logprobs_for(&request)?.to_vec(),
            elapsed_ms: response.latency_ms,
        })
    }

    fn greedy(&self, instance: &Instance, format: &FormatSpec) -> Result<Scored<MethodPrediction>> {
        let rendered = self.render(instance, format)?;
        let request = BackendRequest::greedy(
            rendered.prompt,
            self.config.max_new_tokens,
            self.backend.tag(),
        )
        .with_context(self.context(instance, format)?);
        let response = self.backend.call(&request)?;
        let prediction = predict_greedy(
            response.text_for()?,
            &rendered.answer_surface_forms,
            &rendered.option_labels,
        );
        Ok(Scored {
            value: prediction,
            elapsed_ms: response.latency_ms,
        })
    }

    fn ensemble(
        &self,
        instance: &Instance,
        members: &[FormatSpec],
    ) -> Result<Scored<MethodPrediction>> {
        let mut elapsed_ms = 0;
        let prediction = if self.method == MethodTag::TemplateEnsembleAvg {
            let mut rows = Vec::with_capacity(members.len());
            for member in members {
                let scored = self.logprobs(instance, member)?;
                elapsed_ms += scored.elapsed_ms;
                rows.push(scored.value);
            }
            template_ensemble_avg_logprobs(&rows)?
        } else {
            let mut votes = Vec::with_capacity(members.len());
            for member in members {
                let vote = match self.config.inference {
                    InferenceMode::Ranking => {
                        let scored = self.logprobs(instance, member)?;
                        elapsed_ms += scored.elapsed_ms;
                        argmax(&scored.value)
                    }
                    InferenceMode::Greedy => {
                        let scored = self.greedy(instance, member)?;
                        elapsed_ms += scored.elapsed_ms;
                        scored.value.chosen_index
                    }
                };
                votes.push(vote);
            }
            template_ensemble_vote_abstaining(&votes, self.labels.len())?
                .with_diagnostic("member_votes", &votes)
        };
        Ok(Scored {
            value: prediction,
            elapsed_ms,
        })
    }

    fn sad(&self, instance: &Instance, format: &FormatSpec) -> Result<Scored<MethodPrediction>> {
        let elapsed = AtomicU64::new(0);
        let build = |text: &str| {
            let perturbed = Instance {
                input: text.to_string(),
                ..instance.clone()
            };
            let rendered = self.render(&perturbed, format)?;
            Ok(BackendRequest::ranking(
                rendered.prompt,
                rendered.answer_surface_forms,
                self.backend.tag(),
            )
            .with_length_normalization(self.config.length_normalize)
            .with_context(self.context(&perturbed, format)?))
        };
        let timed = TimedBackend {
            inner: self.backend,
            elapsed: &elapsed,
        };
        let value = sad_predict(
            &timed,
            &instance.input,
            build,
            self.config.alpha,
            &self.config.perturbation,
        )?;
        Ok(Scored {
            value,
            elapsed_ms: elapsed.load(Ordering::Relaxed),
        })
    }

    fn record(
        &self,
        format: &IndexedFormat,
        fingerprint: &str,
        instance: &Instance,
        scored: Scored<MethodPrediction>,
    ) -> EvalRecord {
        let mut prediction = scored.value;
        prediction.method = self.method;
        let gold = self
            .input
            .task
            .class_index(&instance.gold)
            .expect("gold validated against labels");
        EvalRecord {
            model: self.input.model.to_string(),
            task: self.input.task.id.clone(),
            scenario: self.input.scenario.to_string(),
            format_id: format.id,
            fingerprint: fingerprint.to_string(),
            format: format.spec,
            complexity: format.spec.complexity(),
            method: self.method,
            uid: instance.uid.clone(),
            chosen: prediction.chosen_index,
            gold,
            chosen_answer: prediction.chosen_index.map(|i| self.labels[i].clone()),
            gold_answer: instance.gold.clone(),
            correct: prediction.chosen_index == Some(gold),
            n_options: self.labels.len(),
            diagnostics: prediction.diagnostics,
            elapsed_ms: scored.elapsed_ms,
        }
    }

    fn failure(
        &self,
        format: &IndexedFormat,
        fingerprint: &str,
        instance: &Instance,
        error: &Error,
    ) -> UnitFailure {
        UnitFailure {
            model: self.input.model.to_string(),
            task: self.input.task.id.clone(),
            scenario: self.input.scenario.to_string(),
            format_id: format.id,
            fingerprint: fingerprint.to_string(),
            method: self.method,
            uid: instance.uid.clone(),
            error: error.to_string(),
        }
    }

    fn run_format(&self, format: &IndexedFormat, out: &mut MethodOutput) -> Result<()> {
        let fingerprint = format.spec.fingerprint(self.input.catalog)?;
        let mut push =
            |instance: &Instance, outcome: Result<Scored<MethodPrediction>>| match outcome {
                Ok(scored) => out
                    .records
                    .push(self.record(format, &fingerprint, instance, scored)),
                Err(e) => {
                    log::warn!(
                        "{} {} f{} {}: {e}",
                        self.method,
                        self.input.task.id,
                        format.id,
                        instance.uid
                    );
                    out.failures
                        .push(self.failure(format, &fingerprint, instance, &e));
                }
            };
        match self.method {
            MethodTag::FewShotRanking => {
                for instance in self.input.instances {
                    let outcome = self.logprobs(instance, &format.spec).and_then(|s| {
                        Ok(Scored {
                            value: predict_ranking(&s.value)?,
                            elapsed_ms: s.elapsed_ms,
                        })
                    });
                    push(instance, outcome);
                }
            }
            MethodTag::FewShotGreedy => {
                for instance in self.input.instances {
                    push(instance, self.greedy(instance, &format.spec));
                }
            }
            MethodTag::BatchCalibration => {
                let scored: Vec<Result<Scored<Vec<f64>>>> = self
                    .input
                    .instances
                    .iter()
                    .map(|i| self.logprobs(i, &format.spec))
                    .collect();
                let rows: Vec<Vec<f64>> =
                    scored.iter().flatten().map(|s| s.value.clone()).collect();
                let mut predictions = if rows.is_empty() {
                    Vec::new()
                } else {
                    match self.config.batch_size {
                        Some(b) => batch_calibrate_chunked(&rows, b)?,
                        None => batch_calibrate(&rows)?,
                    }
                }
                .into_iter();
                for (instance, outcome) in self.input.instances.iter().zip(scored) {
                    let outcome = outcome.map(|s| Scored {
                        value: predictions.next().expect("one prediction per scored row"),
                        elapsed_ms: s.elapsed_ms,
                    });
                    push(instance, outcome);
                }
            }
            MethodTag::TemplateEnsembleAvg | MethodTag::TemplateEnsembleVote => {
                let members = ensemble_formats(
                    self.input.catalog,
                    &self.input.task.id,
                    &format.spec,
                    self.config.ensemble_size,
                    self.input.seed,
                )?;
                for instance in self.input.instances {
                    push(instance, self.ensemble(instance, &members));
                }
            }
            MethodTag::SensitivityAware => {
                for instance in self.input.instances {
                    push(instance, self.sad(instance, &format.spec));
                }
            }
        }
        Ok(())
    }
}

/// Accumulates backend latency for calls made inside [`sad_predict`].
struct TimedBackend<'a> {
    inner: &'a dyn Backend,
    elapsed: &'a AtomicU64,
}

impl Backend for TimedBackend<'_> {
    fn tag(&self) -> &str {
        self.inner.tag()
    }
    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }
    fn score_options(&self, request: &BackendRequest) -> Result<BackendResponse> {
        let response = self.inner.score_options(request)?;
        self.elapsed
            .fetch_add(response.latency_ms, Ordering::Relaxed);
        Ok(response)
    }
    fn generate_greedy(&self, request: &BackendRequest) -> Result<BackendResponse> {
        let response = self.inner.generate_greedy(request)?;
        self.elapsed
            .fetch_add(response.latency_ms, Ordering::Relaxed);
        Ok(response)
    }
}

fn check_capabilities(
    method: MethodTag,
    backend: &dyn Backend,
    config: &MethodConfig,
) -> Result<()> {
    let caps = backend.capabilities();
    let needs_greedy = method == MethodTag::FewShotGreedy
        || (method == MethodTag::TemplateEnsembleVote && config.inference == InferenceMode::Greedy);
    if needs_greedy && !caps.greedy {
        return Err(Error::Capability(format!(
            "{method} needs greedy generation; backend {} lacks it",
            backend.tag()
        )));
    }
    if !needs_greedy && !caps.ranking {
        return Err(Error::Capability(format!(
            "{method} needs option scores; backend {} cannot rank",
            backend.tag()
        )));
    }
    if method == MethodTag::SensitivityAware {
        config.perturbation.validate()?;
        if !(0.0..=1.0).contains(&config.alpha) {
            return Err(Error::Config(format!(
                "alpha {} outside [0, 1]",
                config.alpha
            )));
        }
    }
    Ok(())
}

/// Run `method` on every (format, instance) pair. Per-instance failures are
/// collected rather than aborting; configuration and capability problems
/// abort the whole call.
pub fn run_method_partial(
    method: MethodTag,
    input: EvalInput<'_>,
    formats: &[IndexedFormat],
    backend: &dyn Backend,
    config: &MethodConfig,
) -> Result<MethodOutput> {
    if formats.is_empty() {
        return Err(Error::Config("no evaluation formats".into()));
    }
    check_capabilities(method, backend, config)?;
    let evaluator = Evaluator {
        input,
        backend,
        config,
        method,
        labels: input.task.labels(),
    };
    let mut out = MethodOutput::default();
    for format in formats {
        evaluator.run_format(format, &mut out)?;
    }
    Ok(out)
}

/// One record per (format, instance); the first failed instance aborts.
pub fn run_method(
    method: MethodTag,
    input: EvalInput<'_>,
    formats: &[IndexedFormat],
    backend: &dyn Backend,
    config: &MethodConfig,
) -> Result<Vec<EvalRecord>> {
    let out = run_method_partial(method, input, formats, backend, config)?;
    match out.failures.first() {
        Some(f) => Err(Error::Backend(format!(
            "{} on {}: {}",
            f.method, f.uid, f.error
        ))),
        None => Ok(out.records),
    }
}
