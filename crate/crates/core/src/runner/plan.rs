use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::config::{MethodSpec, RunConfig, Scenario};
use crate::data::{
    eval_subsample, imbalance_downsample, load_tasks, select_demonstrations, train_split, Instance,
    Task,
};
use crate::error::{Error, Result};
use crate::grammar::{compositional_split, FormatComponentCatalog, FormatSpec, RenderMode};
use crate::methods::IndexedFormat;
use crate::seed;

/// Everything needed to evaluate one task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedTask {
    /// The task after any scenario shift; its labels define class indices.
    pub task: Task,
    pub eval: Vec<Instance>,
    pub demonstrations: Vec<Instance>,
    /// Every sampled format, in sampling order; record format ids index into it.
    pub formats: Vec<FormatSpec>,
    /// The formats evaluated (all of them, or the test side of a compositional split).
    pub eval_formats: Vec<IndexedFormat>,
    /// Format ids on the train side of a compositional split.
    pub train_format_ids: Vec<usize>,
}

/// Deterministic enumeration of work for a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub fingerprint: String,
    pub seed: u64,
    pub scenario: Scenario,
    pub render_mode: RenderMode,
    pub models: Vec<String>,
    pub methods: Vec<MethodSpec>,
    pub tasks: Vec<PlannedTask>,
}

/// A batch of units sharing (model, task, method, format).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkGroup {
    pub model: usize,
    pub task: usize,
    pub method: usize,
    pub format: usize,
}

impl RunPlan {
    /// Number of (model, task, method, format, instance) units.
    pub fn unit_count(&self) -> usize {
        let per_model: usize = self
            .tasks
            .iter()
            .map(|t| t.eval.len() * t.eval_formats.len())
            .sum();
        per_model * self.models.len() * self.methods.len()
    }

    /// Work groups in execution order.
    pub fn groups(&self) -> Vec<WorkGroup> {
        let mut out = Vec::new();
        for model in 0..self.models.len() {
            for (task, planned) in self.tasks.iter().enumerate() {
                for method in 0..self.methods.len() {
                    for format in 0..planned.eval_formats.len() {
                        out.push(WorkGroup {
                            model,
                            task,
                            method,
                            format,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Plan over tasks loaded from the configured source.
pub fn plan(config: &RunConfig, catalog: &FormatComponentCatalog) -> Result<RunPlan> {
    config.validate()?;
    let tasks = load_tasks(&config.tasks.path, config.tasks.ids.as_deref())?;
    plan_tasks(config, catalog, tasks)
}

/// Plan over already loaded tasks.
pub fn plan_tasks(
    config: &RunConfig,
    catalog: &FormatComponentCatalog,
    tasks: Vec<Task>,
) -> Result<RunPlan> {
    config.validate()?;
    if tasks.is_empty() {
        return Err(Error::Config("no tasks to evaluate".into()));
    }
    let planned = tasks
        .into_iter()
        .map(|t| plan_task(config, catalog, t))
        .collect::<Result<Vec<_>>>()?;
    let models: Vec<String> = config.backends.iter().map(|b| b.tag.clone()).collect();
    let methods: Vec<MethodSpec> = config
        .methods
        .iter()
        .map(|m| MethodSpec {
            name: m.name,
            config: config.effective_method_config(m),
        })
        .collect();

    /// Task id, options, demonstration uids, eval uids, format fingerprints, eval format ids.
    type TaskIdentity<'a> = (
        String,
        Option<&'a str>,
        Vec<&'a str>,
        Vec<&'a str>,
        Vec<String>,
        Vec<usize>,
    );
    #[derive(Serialize)]
    struct Identity<'a> {
        seed: u64,
        scenario: Scenario,
        render_mode: RenderMode,
        models: &'a [String],
        methods: &'a [MethodSpec],
        tasks: Vec<TaskIdentity<'a>>,
    }
    let identity = Identity {
        seed: config.seed,
        scenario: config.scenario,
        render_mode: config.render_mode,
        models: &models,
        methods: &methods,
        tasks: planned
            .iter()
            .map(|p| {
                Ok((
                    p.task.id.clone(),
                    p.task.source_hash.as_deref(),
                    p.eval.iter().map(|i| i.uid.as_str()).collect(),
                    p.demonstrations.iter().map(|i| i.uid.as_str()).collect(),
                    p.formats
                        .iter()
                        .map(|f| f.fingerprint(catalog))
                        .collect::<Result<Vec<_>>>()?,
                    p.eval_formats.iter().map(|f| f.id).collect(),
                ))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let fingerprint = seed::stable_hex([serde_json::to_string(&identity)?]);
    Ok(RunPlan {
        fingerprint,
        seed: config.seed,
        scenario: config.scenario,
        render_mode: config.render_mode,
        models,
        methods,
        tasks: planned,
    })
}

/// Format samples tried per task before a compositional split is declared infeasible.
const MAX_SPLIT_ATTEMPTS: usize = 1000;

fn plan_task(
    config: &RunConfig,
    catalog: &FormatComponentCatalog,
    task: Task,
) -> Result<PlannedTask> {
    let id = task.id.clone();
    let original = task;
    let task = match config.scenario {
        Scenario::Imbalance => imbalance_downsample(
            &original,
            config.majority_ratio,
            seed::derive_seed(config.seed, &["imbalance", &id]),
        )?,
        _ => original.clone(),
    };
    let eval = eval_subsample(
        &task,
        config.n_eval,
        seed::derive_seed(config.seed, &["eval", &id]),
    )
    .instances;
    let demonstrations = if config.n_demonstrations == 0 {
        Vec::new()
    } else {
        let eval_uids: BTreeSet<String> = eval.iter().map(|i| i.uid.clone()).collect();
        // the shift applies to the evaluation distribution; demonstrations come from the unshifted pool
        let train = train_split(&original, &eval_uids)?;
        select_demonstrations(
            &train,
            config.n_demonstrations,
            seed::derive_seed(config.seed, &["demos", &id]),
        )?
    };
    let sample = |attempt: usize| {
        let keys: Vec<String> = match attempt {
            0 => vec!["formats".into(), id.clone()],
            n => vec!["formats".into(), id.clone(), n.to_string()],
        };
        let keys: Vec<&str> = keys.iter().map(String::as_str).collect();
        catalog.sample_formats(
            task.has_options(),
            config.formats.n,
            seed::derive_seed(config.format_seed(), &keys),
        )
    };
    let mut formats = sample(0)?;
    let (eval_formats, train_format_ids) = match config.scenario {
        Scenario::Compositional => {
            let split_seed = seed::derive_seed(config.seed, &["split", &id]);
            let mut attempt = 0;
            let (train, test) = loop {
                match compositional_split(&formats, split_seed) {
                    Ok(split) => break split,
                    Err(Error::SplitInfeasible(_)) if attempt < MAX_SPLIT_ATTEMPTS => {
                        attempt += 1;
                        formats = sample(attempt)?;
                    }
                    Err(e) => return Err(e),
                }
            };
            if attempt > 0 {
                log::info!("{id}: format sample {attempt} admits a compositional split");
            }
            let index_of = |f: &FormatSpec| {
                formats
                    .iter()
                    .position(|g| g == f)
                    .expect("split returns sampled formats")
            };
            let mut test_ids: Vec<usize> = test.iter().map(index_of).collect();
            test_ids.sort_unstable();
            let mut train_ids: Vec<usize> = train.iter().map(index_of).collect();
            train_ids.sort_unstable();
            (
                test_ids
                    .into_iter()
                    .map(|id| IndexedFormat {
                        id,
                        spec: formats[id],
                    })
                    .collect(),
                train_ids,
            )
        }
        _ => (IndexedFormat::enumerate(&formats), Vec::new()),
    };
    Ok(PlannedTask {
        task,
        eval,
        demonstrations,
        formats,
        eval_formats,
        train_format_ids,
    })
}
