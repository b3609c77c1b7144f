//! Run configuration, planning, resumable execution and reports.

mod config;
mod execute;
mod plan;
mod record;
mod report;

pub use config::{
    BackendKind, BackendSpec, FormatSampling, MethodSpec, RunConfig, Scenario, TaskSource,
};
pub use execute::{
    execute, read_jsonl, ExecuteOptions, RunSummary, FAILURES_FILE, PLAN_FILE, RECORDS_FILE,
};
pub use plan::{plan, plan_tasks, PlannedTask, RunPlan, WorkGroup};
pub use record::{EvalRecord, UnitFailure, UnitKey};
pub use report::{report, report_files, ReportBundle, ReportOptions};
