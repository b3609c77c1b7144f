//! Natural-Instructions style task documents.
//!
//! A task file is a JSON object:
//!
//! ```json
//! {
//!   "Definition": ["In this task ..."],
//!   "Positive Examples": [{"input": "...", "output": "...", "explanation": "..."}],
//!   "Instances": [{"id": "task050-1", "input": "...", "output": ["Yes"]}],
//!   "Options": ["Yes", "No"],
//!   "Descriptors": ["Sentence", "Answer"]
//! }
//! ```
//!
//! `Options` and `Descriptors` are optional extensions. The file name starts
//! with the task id (`task050_multirc_answerability.json`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::task::{Descriptors, Instance, Task};
use crate::error::{Error, Result};
use crate::seed;

/// The 52 evaluation tasks.
pub const DEFAULT_TASK_IDS: [&str; 52] = [
    "task050", "task065", "task069", "task070", "task114", "task133", "task155", "task158",
    "task161", "task162", "task163", "task213", "task214", "task220", "task279", "task280",
    "task286", "task296", "task297", "task316", "task317", "task319", "task320", "task322",
    "task323", "task325", "task326", "task327", "task328", "task335", "task337", "task385",
    "task580", "task607", "task608", "task609", "task904", "task905", "task1186", "task1283",
    "task1284", "task1297", "task1347", "task1387", "task1419", "task1420", "task1421", "task1423",
    "task1502", "task1612", "task1678", "task1724",
];

/// Subset used for black-box frontier models.
pub const FRONTIER_TASK_IDS: [&str; 10] = [
    "task114", "task161", "task296", "task320", "task322", "task323", "task1387", "task1419",
    "task1420", "task1423",
];

#[derive(Debug, Deserialize, Serialize)]
struct TaskDocument {
    #[serde(rename = "Definition")]
    definition: DefinitionText,
    #[serde(
        rename = "Positive Examples",
        default,
        skip_serializing_if = "Vec::is_empty"
    )]
    positive_examples: Vec<Value>,
    #[serde(rename = "Instances")]
    instances: Vec<InstanceDocument>,
    #[serde(rename = "Options", default, skip_serializing_if = "Option::is_none")]
    options: Option<Vec<String>>,
    #[serde(
        rename = "Descriptors",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    descriptors: Option<[String; 2]>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum DefinitionText {
    Lines(Vec<String>),
    Single(String),
}

#[derive(Debug, Deserialize, Serialize)]
struct InstanceDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    input: String,
    output: OutputText,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum OutputText {
    Many(Vec<String>),
    One(String),
}

/// Task id encoded in a file name: the stem up to the first `_`.
pub fn task_id_from_path(path: &Path) -> Option<String> {
    let stem = path.file_stem()?.to_str()?;
    Some(stem.split('_').next().unwrap_or(stem).to_string())
}

pub fn parse_task(id: &str, text: &str, path: &Path) -> Result<Task> {
    let load_err = |message: String| Error::TaskLoad {
        path: path.to_path_buf(),
        message,
    };
    let doc: TaskDocument = serde_json::from_str(text)
        .map_err(|e| load_err(format!("malformed task document: {e}")))?;

    let instruction = match doc.definition {
        DefinitionText::Lines(lines) => lines.join("\n"),
        DefinitionText::Single(line) => line,
    };
    let instances =
        doc.instances
            .into_iter()
            .enumerate()
            .map(|(i, inst)| {
                let uid = inst.id.unwrap_or_else(|| format!("{id}-{i}"));
                let gold = match inst.output {
                    OutputText::One(s) => s,
                    OutputText::Many(v) => v.into_iter().next().ok_or_else(|| {
                        load_err(format!("instance {uid} has an empty output list"))
                    })?,
                };
                Ok(Instance {
                    uid,
                    input: inst.input,
                    gold,
                })
            })
            .collect::<Result<Vec<_>>>()?;
    let descriptors = doc
        .descriptors
        .map(|[input, output]| Descriptors { input, output })
        .unwrap_or_default();

    let mut task = Task::new(id, instruction, doc.options, descriptors, instances)?;
    task.source_hash = Some(seed::stable_hex([text]));
    Ok(task)
}

pub fn load_task_file(path: &Path) -> Result<Task> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::TaskLoad {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let id = task_id_from_path(path).ok_or_else(|| Error::TaskLoad {
        path: path.to_path_buf(),
        message: "cannot derive a task id from the file name".into(),
    })?;
    parse_task(&id, &text, path)
}

fn task_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::TaskLoad {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Load every task in `path` (a directory or a single file), optionally
/// restricted to `allowed_ids` and returned in that order.
pub fn load_tasks(path: &Path, allowed_ids: Option<&[String]>) -> Result<Vec<Task>> {
    let files = if path.is_file() {
        vec![path.to_path_buf()]
    } else {
        task_files(path)?
    };
    let indexed: Vec<(String, PathBuf)> = files
        .into_iter()
        .filter_map(|f| task_id_from_path(&f).map(|id| (id, f)))
        .collect();

    match allowed_ids {
        None => indexed.iter().map(|(_, f)| load_task_file(f)).collect(),
        Some(ids) => ids
            .iter()
            .map(|id| {
                let (_, file) = indexed
                    .iter()
                    .find(|(found, _)| found == id)
                    .ok_or_else(|| Error::UnknownTask(id.clone()))?;
                load_task_file(file)
            })
            .collect(),
    }
}

/// Serialize a task back into the document layout.
pub fn task_to_document(task: &Task) -> Value {
    let doc = TaskDocument {
        definition: DefinitionText::Lines(vec![task.instruction.clone()]),
        positive_examples: Vec::new(),
        instances: task
            .instances
            .iter()
            .map(|i| InstanceDocument {
                id: Some(i.uid.clone()),
                input: i.input.clone(),
                output: OutputText::Many(vec![i.gold.clone()]),
            })
            .collect(),
        options: task.options.clone(),
        descriptors: Some([
            task.descriptors.input.clone(),
            task.descriptors.output.clone(),
        ]),
    };
    serde_json::to_value(doc).expect("task document serializes")
}

/// Write `task` as `<dir>/<id>.json` and return the path.
pub fn save_task(task: &Task, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.json", task.id));
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&task_to_document(task))?,
    )?;
    Ok(path)
}
