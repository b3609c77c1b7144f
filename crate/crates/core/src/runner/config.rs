use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::{
    with_cache, Backend, Capabilities, FormatBiasScale, HttpBackend, HttpConfig, RetryPolicy,
    ScriptedBackend, SyntheticBiasBackend,
};
use crate::error::{Error, Result};
use crate::grammar::RenderMode;
use crate::methods::{InferenceMode, MethodConfig, MethodTag};

/// Distribution shift applied before evaluation.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    None,
    Imbalance,
    Compositional,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::None => "none",
            Scenario::Imbalance => "imbalance",
            Scenario::Compositional => "compositional",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    Synthetic {
        bias: Vec<f64>,
        signal: f64,
        noise: f64,
        /// Defaults to a seed derived from the run seed and the backend tag.
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        format_scale: FormatBiasScale,
    },
    Scripted {
        /// JSONL file in the cache record layout.
        fixture: PathBuf,
    },
    Http {
        base_url: String,
        model: String,
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_true")]
        completions_logprobs: bool,
        #[serde(default)]
        timeout_secs: Option<u64>,
        #[serde(default)]
        retry: Option<RetryPolicy>,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub tag: String,
    #[serde(flatten)]
    pub kind: BackendKind,
    /// Optional response cache (JSONL).
    #[serde(default)]
    pub cache: Option<PathBuf>,
}

impl BackendSpec {
    pub fn capabilities(&self) -> Capabilities {
        match &self.kind {
            BackendKind::Synthetic { .. } | BackendKind::Scripted { .. } => Capabilities {
                ranking: true,
                greedy: true,
            },
            BackendKind::Http {
                completions_logprobs,
                ..
            } => Capabilities {
                ranking: *completions_logprobs,
                greedy: true,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: MethodTag,
    #[serde(flatten)]
    pub config: MethodConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSource {
    /// Directory of task files or a single task file.
    pub path: PathBuf,
    /// Restrict to these ids, in this order; all tasks found when absent.
    #[serde(default)]
    pub ids: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormatSampling {
    #[serde(default = "default_n_formats")]
    pub n: usize,
    /// Defaults to the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_n_formats() -> usize {
    10
}

impl Default for FormatSampling {
    fn default() -> Self {
        Self {
            n: default_n_formats(),
            seed: None,
        }
    }
}

fn default_n_eval() -> usize {
    100
}

fn default_demonstrations() -> usize {
    2
}

fn default_ratio() -> f64 {
    0.9
}

fn default_concurrency() -> usize {
    4
}

/// One experiment: backends × tasks × methods × formats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub tasks: TaskSource,
    #[serde(default)]
    pub formats: FormatSampling,
    /// Optional catalog file; the built-in catalog otherwise.
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    #[serde(default = "default_n_eval")]
    pub n_eval: usize,
    #[serde(default = "default_demonstrations")]
    pub n_demonstrations: usize,
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default = "default_ratio")]
    pub majority_ratio: f64,
    #[serde(default)]
    pub inference: InferenceMode,
    #[serde(default)]
    pub render_mode: RenderMode,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    pub backends: Vec<BackendSpec>,
    pub methods: Vec<MethodSpec>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Parse a config file. Relative paths inside are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.tasks.path);
        if let Some(c) = self.catalog.as_mut() {
            fix(c);
        }
        for b in &mut self.backends {
            if let BackendKind::Scripted { fixture } = &mut b.kind {
                fix(fixture);
            }
            if let Some(c) = b.cache.as_mut() {
                fix(c);
            }
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn format_seed(&self) -> u64 {
        self.formats.seed.unwrap_or(self.seed)
    }

    /// Every problem found, as a single validation error.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.backends.is_empty() {
            problems.push("no backends configured".to_string());
        }
        if self.methods.is_empty() {
            problems.push("no methods configured".to_string());
        }
        if self.formats.n == 0 {
            problems.push("formats.n must be at least 1".to_string());
        }
        if self.scenario == Scenario::Compositional && self.formats.n < 4 {
            problems.push("the compositional scenario needs at least 4 formats".to_string());
        }
        if self.n_eval == 0 {
            problems.push("n_eval must be at least 1".to_string());
        }
        if self.concurrency == 0 {
            problems.push("concurrency must be at least 1".to_string());
        }
        if !(self.majority_ratio > 0.0 && self.majority_ratio < 1.0) {
            problems.push(format!(
                "majority_ratio {} outside (0, 1)",
                self.majority_ratio
            ));
        }
        let mut tags = BTreeSet::new();
        for b in &self.backends {
            if !tags.insert(b.tag.as_str()) {
                problems.push(format!("duplicate backend tag `{}`", b.tag));
            }
        }
        let mut seen = BTreeMap::new();
        for m in &self.methods {
            if seen.insert(m.name, ()).is_some() {
                problems.push(format!("method `{}` listed twice", m.name));
            }
            if self.inference == InferenceMode::Greedy && !m.name.supports_greedy() {
                problems.push(format!("method `{}` requires ranking inference", m.name));
            }
            if m.config.ensemble_size == 0 {
                problems.push(format!(
                    "method `{}`: ensemble_size must be at least 1",
                    m.name
                ));
            }
            if m.config.batch_size == Some(0) {
                problems.push(format!(
                    "method `{}`: batch_size must be at least 1",
                    m.name
                ));
            }
            if m.name == MethodTag::SensitivityAware {
                if !(0.0..=1.0).contains(&m.config.alpha) {
                    problems.push(format!(
                        "method `{}`: alpha {} outside [0, 1]",
                        m.name, m.config.alpha
                    ));
                }
                if let Err(e) = m.config.perturbation.validate() {
                    problems.push(format!("method `{}`: {e}", m.name));
                }
            }
            let needs_greedy = m.name == MethodTag::FewShotGreedy
                || (m.name == MethodTag::TemplateEnsembleVote
                    && self.effective_inference(m) == InferenceMode::Greedy);
            for b in &self.backends {
                let caps = b.capabilities();
                if needs_greedy && !caps.greedy {
                    problems.push(format!(
                        "backend `{}` cannot generate, required by `{}`",
                        b.tag, m.name
                    ));
                }
                if !needs_greedy && !caps.ranking {
                    problems.push(format!(
                        "backend `{}` cannot rank options, required by `{}`",
                        b.tag, m.name
                    ));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Method config with the run-level inference mode applied to voting ensembles.
    pub fn effective_method_config(&self, spec: &MethodSpec) -> MethodConfig {
        let mut config = spec.config.clone();
        config.inference = self.effective_inference(spec);
        config
    }

    fn effective_inference(&self, spec: &MethodSpec) -> InferenceMode {
        if self.inference == InferenceMode::Greedy {
            InferenceMode::Greedy
        } else {
            spec.config.inference
        }
    }

    /// Instantiate every backend, wrapping it with its cache when configured.
    pub fn build_backends(&self) -> Result<BTreeMap<String, Arc<dyn Backend>>> {
        let mut out: BTreeMap<String, Arc<dyn Backend>> = BTreeMap::new();
        for spec in &self.backends {
            let backend: Arc<dyn Backend> = match &spec.kind {
                BackendKind::Synthetic {
                    bias,
                    signal,
                    noise,
                    seed,
                    format_scale,
                } => {
                    let seed = seed.unwrap_or_else(|| {
                        crate::seed::derive_seed(self.seed, &["backend", &spec.tag])
                    });
                    wrap(
                        SyntheticBiasBackend::new(bias.clone(), *signal, *noise, seed)
                            .with_tag(spec.tag.clone())
                            .with_format_scale(format_scale.clone()),
                        spec.cache.as_deref(),
                    )?
                }
                BackendKind::Scripted { fixture } => wrap(
                    ScriptedBackend::from_cache_file(spec.tag.clone(), fixture)?,
                    spec.cache.as_deref(),
                )?,
                BackendKind::Http {
                    base_url,
                    model,
                    api_key_env,
                    completions_logprobs,
                    timeout_secs,
                    retry,
                } => {
                    let mut http =
                        HttpConfig::new(spec.tag.clone(), base_url.clone(), model.clone());
                    if let Some(env) = api_key_env {
                        http.api_key_env = env.clone();
                    }
                    http.completions_logprobs = *completions_logprobs;
                    if let Some(t) = timeout_secs {
                        http.timeout_secs = *t;
                    }
                    if let Some(r) = retry {
                        http.retry = *r;
                    }
                    wrap(HttpBackend::new(http), spec.cache.as_deref())?
                }
            };
            out.insert(spec.tag.clone(), backend);
        }
        Ok(out)
    }
}

fn wrap<B: Backend + 'static>(backend: B, cache: Option<&Path>) -> Result<Arc<dyn Backend>> {
    Ok(match cache {
        Some(path) => Arc::new(with_cache(backend, path)?),
        None => Arc::new(backend),
    })
}
