use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::plan::{RunPlan, WorkGroup};
use super::record::{EvalRecord, UnitFailure, UnitKey};
use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::grammar::FormatComponentCatalog;
use crate::methods::{run_method_partial, EvalInput, MethodOutput};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const FAILURES_FILE: &str = "failures.jsonl";
pub const PLAN_FILE: &str = "plan.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExecuteOptions {
    /// Keep existing results and skip their units.
    pub resume: bool,
    /// Number of worker threads issuing backend calls.
    pub concurrency: usize,
    /// Stop after writing this many units (records plus failures).
    pub max_units: Option<usize>,
}

impl Default for ExecuteOptions {
    fn default() -> Self {
        Self {
            resume: false,
            concurrency: 4,
            max_units: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub planned_units: usize,
    /// Units already present before this invocation.
    pub skipped: usize,
    pub written_records: usize,
    pub written_failures: usize,
    pub total_records: usize,
    pub total_failures: usize,
    /// Stopped early because of `max_units`.
    pub interrupted: bool,
}

impl RunSummary {
    pub fn complete(&self) -> bool {
        self.total_records + self.total_failures == self.planned_units
    }
}

/// Read a JSONL file, skipping lines that do not parse.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push(v),
            Err(e) => log::warn!("{}:{}: skipping unreadable row: {e}", path.display(), n + 1),
        }
    }
    Ok(out)
}

fn open_append(path: &Path) -> Result<File> {
    let mut file = OpenOptions::new()
        .create(true)
        .read(true)
        .append(true)
        .open(path)?;
    let len = file.metadata()?.len();
    if len > 0 {
        file.seek(SeekFrom::Start(len - 1))?;
        let mut last = [0u8; 1];
        file.read_exact(&mut last)?;
        if last[0] != b'\n' {
            file.write_all(b"\n")?;
        }
    }
    Ok(file)
}

fn write_line<T: Serialize>(file: &mut File, value: &T) -> Result<()> {
    let mut line = serde_json::to_string(value)?;
    line.push('\n');
    file.write_all(line.as_bytes())?;
    Ok(())
}

fn group_keys(plan: &RunPlan, group: &WorkGroup) -> Vec<UnitKey> {
    let planned = &plan.tasks[group.task];
    let format_id = planned.eval_formats[group.format].id;
    planned
        .eval
        .iter()
        .map(|i| UnitKey {
            model: plan.models[group.model].clone(),
            task: planned.task.id.clone(),
            format_id,
            method: plan.methods[group.method].name,
            uid: i.uid.clone(),
        })
        .collect()
}

fn run_group(
    plan: &RunPlan,
    catalog: &FormatComponentCatalog,
    backend: &dyn Backend,
    group: &WorkGroup,
) -> MethodOutput {
    let planned = &plan.tasks[group.task];
    let spec = &plan.methods[group.method];
    let model = &plan.models[group.model];
    let input = EvalInput {
        model,
        scenario: plan.scenario.as_str(),
        catalog,
        task: &planned.task,
        instances: &planned.eval,
        demonstrations: &planned.demonstrations,
        render_mode: plan.render_mode,
        seed: plan.seed,
    };
    let format = planned.eval_formats[group.format];
    match run_method_partial(spec.name, input, &[format], backend, &spec.config) {
        Ok(out) => out,
        Err(e) => {
            log::error!("{} {} f{}: {e}", spec.name, planned.task.id, format.id);
            let fingerprint = format.spec.fingerprint(catalog).unwrap_or_default();
            MethodOutput {
                records: Vec::new(),
                failures: planned
                    .eval
                    .iter()
                    .map(|i| UnitFailure {
                        model: model.clone(),
                        task: planned.task.id.clone(),
                        scenario: plan.scenario.as_str().to_string(),
                        format_id: format.id,
                        fingerprint: fingerprint.clone(),
                        method: spec.name,
                        uid: i.uid.clone(),
                        error: e.to_string(),
                    })
                    .collect(),
            }
        }
    }
}

/// Run every unit of `plan` not yet present in `out_dir`, appending records and
/// failures as JSONL. Groups run on `concurrency` threads; results are written
/// by this thread in plan order.
pub fn execute(
    plan: &RunPlan,
    catalog: &FormatComponentCatalog,
    backends: &BTreeMap<String, Arc<dyn Backend>>,
    out_dir: &Path,
    options: ExecuteOptions,
) -> Result<RunSummary> {
    if options.concurrency == 0 {
        return Err(Error::Config("concurrency must be at least 1".into()));
    }
    let missing: Vec<&String> = plan
        .models
        .iter()
        .filter(|m| !backends.contains_key(*m))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Config(format!(
            "no backend instantiated for {missing:?}"
        )));
    }
    std::fs::create_dir_all(out_dir)?;
    let records_path = out_dir.join(RECORDS_FILE);
    let failures_path = out_dir.join(FAILURES_FILE);
    let plan_path = out_dir.join(PLAN_FILE);

    if options.resume && plan_path.exists() {
        let previous: RunPlan = serde_json::from_str(&std::fs::read_to_string(&plan_path)?)?;
        if previous.fingerprint != plan.fingerprint {
            return Err(Error::Config(format!(
                "cannot resume: {} was written by plan {}, current plan is {}",
                out_dir.display(),
                previous.fingerprint,
                plan.fingerprint
            )));
        }
    }
    std::fs::write(&plan_path, serde_json::to_string_pretty(plan)? + "\n")?;

    let mut done: HashSet<UnitKey> = HashSet::new();
    if options.resume {
        done.extend(
            read_jsonl::<EvalRecord>(&records_path)?
                .iter()
                .map(EvalRecord::key),
        );
        done.extend(
            read_jsonl::<UnitFailure>(&failures_path)?
                .iter()
                .map(UnitFailure::key),
        );
    } else {
        File::create(&records_path)?;
        File::create(&failures_path)?;
    }
    let planned_keys: BTreeSet<UnitKey> = plan
        .groups()
        .iter()
        .flat_map(|g| group_keys(plan, g))
        .collect();
    let skipped = planned_keys.iter().filter(|k| done.contains(*k)).count();

    let jobs: Vec<WorkGroup> = plan
        .groups()
        .into_iter()
        .filter(|g| group_keys(plan, g).iter().any(|k| !done.contains(k)))
        .collect();
    log::info!(
        "plan {}: {} units, {} already done, {} groups to run",
        plan.fingerprint,
        plan.unit_count(),
        skipped,
        jobs.len()
    );

    let mut records_file = open_append(&records_path)?;
    let mut failures_file = open_append(&failures_path)?;
    let mut summary = RunSummary {
        planned_units: plan.unit_count(),
        skipped,
        ..Default::default()
    };
    let next_job = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let workers = options.concurrency.min(jobs.len()).max(1);

    let write_result: Result<()> = std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(usize, MethodOutput)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, next_job, stop) = (&jobs, &next_job, &stop);
            scope.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next_job.fetch_add(1, Ordering::SeqCst);
                let Some(group) = jobs.get(i) else { break };
                let backend = backends[&plan.models[group.model]].as_ref();
                let out = run_group(plan, catalog, backend, group);
                if tx.send((i, out)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<usize, MethodOutput> = BTreeMap::new();
        let mut next_write = 0;
        let mut written = 0usize;
        let mut drain = || -> Result<()> {
            'receive: for (i, out) in rx.iter() {
                pending.insert(i, out);
                while let Some(out) = pending.remove(&next_write) {
                    next_write += 1;
                    for record in out.records.iter().filter(|r| !done.contains(&r.key())) {
                        if options.max_units.is_some_and(|m| written >= m) {
                            break 'receive;
                        }
                        write_line(&mut records_file, record)?;
                        summary.written_records += 1;
                        written += 1;
                    }
                    for failure in out.failures.iter().filter(|f| !done.contains(&f.key())) {
                        if options.max_units.is_some_and(|m| written >= m) {
                            break 'receive;
                        }
                        write_line(&mut failures_file, failure)?;
                        summary.written_failures += 1;
                        written += 1;
                    }
                }
            }
            Ok(())
        };
        let result = drain();
        stop.store(true, Ordering::SeqCst);
        result
    });
    write_result?;
    records_file.flush()?;
    failures_file.flush()?;

    summary.total_records = read_jsonl::<EvalRecord>(&records_path)?.len();
    summary.total_failures = read_jsonl::<UnitFailure>(&failures_path)?.len();
    summary.interrupted = !summary.complete();
    log::info!(
        "wrote {} records and {} failures ({} records, {} failures in total)",
        summary.written_records,
        summary.written_failures,
        summary.total_records,
        summary.total_failures
    );
    Ok(summary)
}
