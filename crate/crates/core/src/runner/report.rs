use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use super::execute::read_jsonl;
use super::record::{EvalRecord, UnitFailure};
use crate::error::Result;
use crate::methods::MethodTag;
use crate::metrics::{
    aggregate, median, rank_deltas, rank_methods, series_from_records, spread_diff_test,
    spread_vs_complexity, tally_verdicts, AggregateRow, ComplexityPoint, FormatSeries, MccCell,
    MethodRank, Metric, SignificanceVerdict, DEFAULT_ALPHA,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportOptions {
    /// Significance level of the spread-difference tests.
    pub alpha: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
        }
    }
}

/// Report files by name. Contents depend only on the input rows.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReportBundle {
    pub files: BTreeMap<String, String>,
    pub gaps: Vec<String>,
}

impl ReportBundle {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            std::fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        format!("{v}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    fn markdown(&self) -> String {
        if self.rows.is_empty() {
            return "_no rows_\n".to_string();
        }
        let mut out = format!("| {} |\n", self.header.join(" | "));
        out += &format!("|{}\n", " --- |".repeat(self.header.len()));
        for row in &self.rows {
            out += &format!("| {} |\n", row.join(" | "));
        }
        out
    }
}

struct Tables {
    aggregate: Table,
    per_task: Table,
    verdicts: Table,
    tally: Table,
    rankings: Table,
    rank_deltas: Table,
    greedy_vs_ranking: Table,
    complexity: Table,
    gaps: Vec<String>,
}

fn baseline_for(methods: &BTreeSet<MethodTag>) -> Option<MethodTag> {
    [MethodTag::FewShotRanking, MethodTag::FewShotGreedy]
        .into_iter()
        .find(|m| methods.contains(m))
}

fn aggregate_model(
    series: &[FormatSeries],
    scenario: &str,
    metric: Metric,
    gaps: &mut Vec<String>,
) -> Vec<AggregateRow> {
    match aggregate(series) {
        Ok(rows) => rows,
        Err(e) => {
            gaps.push(format!(
                "{scenario}: {} aggregate incomplete: {e}",
                metric.as_str()
            ));
            let methods: BTreeSet<MethodTag> = series.iter().map(|s| s.method).collect();
            methods
                .into_iter()
                .filter_map(|m| {
                    let own: Vec<FormatSeries> =
                        series.iter().filter(|s| s.method == m).cloned().collect();
                    aggregate(&own).ok()
                })
                .flatten()
                .collect()
        }
    }
}

fn scenario_tables(
    scenario: &str,
    records: &[EvalRecord],
    options: &ReportOptions,
    tables: &mut Tables,
) -> Result<Vec<MethodRank>> {
    let acc = series_from_records(records, Metric::Accuracy)?;
    let mcc = series_from_records(records, Metric::Mcc)?;
    let models: BTreeSet<&str> = acc.iter().map(|s| s.model.as_str()).collect();

    for (metric, series) in [(Metric::Accuracy, &acc), (Metric::Mcc, &mcc)] {
        for model in &models {
            let own: Vec<FormatSeries> = series
                .iter()
                .filter(|s| s.model == *model)
                .cloned()
                .collect();
            for row in aggregate_model(&own, scenario, metric, &mut tables.gaps) {
                tables.aggregate.push(vec![
                    scenario.to_string(),
                    row.model.clone(),
                    row.method.to_string(),
                    metric.as_str().to_string(),
                    row.n_tasks.to_string(),
                    num(row.mean_median),
                    opt(row.mean_std),
                    opt(row.error_bar()),
                    num(row.mean_spread),
                ]);
                if metric == Metric::Accuracy
                    && matches!(
                        row.method,
                        MethodTag::FewShotRanking | MethodTag::FewShotGreedy
                    )
                {
                    tables.greedy_vs_ranking.push(vec![
                        scenario.to_string(),
                        row.model.clone(),
                        row.method.to_string(),
                        num(row.mean_median),
                        opt(row.mean_std),
                    ]);
                }
            }
        }
    }

    for (a, m) in acc.iter().zip(&mcc) {
        tables.per_task.push(vec![
            scenario.to_string(),
            a.model.clone(),
            a.task.clone(),
            a.method.to_string(),
            a.values.len().to_string(),
            num(a.median()?),
            num(a.spread()?),
            opt(a.std().ok()),
            num(m.median()?),
        ]);
    }

    let mut verdicts: Vec<SignificanceVerdict> = Vec::new();
    for model in &models {
        let own: Vec<&FormatSeries> = acc.iter().filter(|s| s.model == *model).collect();
        let methods: BTreeSet<MethodTag> = own.iter().map(|s| s.method).collect();
        let Some(baseline) = baseline_for(&methods) else {
            tables.gaps.push(format!(
                "{scenario}: model {model} has no few-shot baseline; no verdicts"
            ));
            continue;
        };
        let base: Vec<FormatSeries> = own
            .iter()
            .filter(|s| s.method == baseline)
            .map(|s| (*s).clone())
            .collect();
        for method in methods
            .iter()
            .filter(|m| **m != baseline && !m.is_baseline())
        {
            let other: Vec<FormatSeries> = own
                .iter()
                .filter(|s| s.method == *method)
                .map(|s| (*s).clone())
                .collect();
            match spread_diff_test(model, &base, &other, options.alpha) {
                Ok(v) => verdicts.push(v),
                Err(e) => tables
                    .gaps
                    .push(format!("{scenario}: {model} {method} vs {baseline}: {e}")),
            }
        }
    }
    for v in &verdicts {
        tables.verdicts.push(vec![
            scenario.to_string(),
            v.model.clone(),
            v.baseline.to_string(),
            v.method.to_string(),
            v.n_tasks.to_string(),
            num(v.mean_diff),
            num(v.t),
            num(v.p),
            v.verdict.to_string(),
        ]);
    }
    for t in tally_verdicts(&verdicts) {
        tables.tally.push(vec![
            scenario.to_string(),
            t.method.to_string(),
            t.wins.to_string(),
            t.ties.to_string(),
            t.losses.to_string(),
        ]);
    }

    let cells = mcc
        .iter()
        .map(|s| {
            Ok(MccCell {
                model: s.model.clone(),
                task: s.task.clone(),
                method: s.method,
                mcc: median(&s.values())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ranks = match rank_methods(&cells) {
        Ok(r) => r,
        Err(e) => {
            tables
                .gaps
                .push(format!("{scenario}: ranking skipped: {e}"));
            Vec::new()
        }
    };
    for r in &ranks {
        tables.rankings.push(vec![
            scenario.to_string(),
            r.method.to_string(),
            num(r.mean_rank),
            r.n_cells.to_string(),
        ]);
    }

    let points: Vec<ComplexityPoint> = spread_vs_complexity(records)?;
    for p in points {
        tables.complexity.push(vec![
            scenario.to_string(),
            p.complexity.to_string(),
            p.n_groups.to_string(),
            num(p.mean_spread),
            num(p.p5),
            num(p.p95),
        ]);
    }
    Ok(ranks)
}

/// Build every report table from result rows.
pub fn report(
    records: &[EvalRecord],
    failures: &[UnitFailure],
    options: &ReportOptions,
) -> Result<ReportBundle> {
    let mut tables = Tables {
        aggregate: Table::new(&[
            "scenario",
            "model",
            "method",
            "metric",
            "n_tasks",
            "mean_median",
            "mean_std",
            "error_bar_2std",
            "mean_spread",
        ]),
        per_task: Table::new(&[
            "scenario",
            "model",
            "task",
            "method",
            "n_formats",
            "median_accuracy",
            "spread_accuracy",
            "std_accuracy",
            "median_mcc",
        ]),
        verdicts: Table::new(&[
            "scenario",
            "model",
            "baseline",
            "method",
            "n_tasks",
            "mean_spread_diff",
            "t",
            "p",
            "verdict",
        ]),
        tally: Table::new(&["scenario", "method", "wins", "ties", "losses"]),
        rankings: Table::new(&["scenario", "method", "mean_rank", "n_cells"]),
        rank_deltas: Table::new(&[
            "scenario",
            "method",
            "default_rank",
            "shifted_rank",
            "delta",
        ]),
        greedy_vs_ranking: Table::new(&[
            "scenario",
            "model",
            "method",
            "mean_median_accuracy",
            "mean_std",
        ]),
        complexity: Table::new(&[
            "scenario",
            "complexity",
            "n_groups",
            "mean_spread",
            "p5",
            "p95",
        ]),
        gaps: Vec::new(),
    };

    let mut by_scenario: BTreeMap<&str, Vec<EvalRecord>> = BTreeMap::new();
    for r in records {
        by_scenario.entry(&r.scenario).or_default().push(r.clone());
    }
    let mut ranks_by_scenario = BTreeMap::new();
    for (scenario, rows) in &by_scenario {
        let ranks = scenario_tables(scenario, rows, options, &mut tables)?;
        ranks_by_scenario.insert(*scenario, ranks);
    }
    if let Some(default) = ranks_by_scenario.get("none").filter(|r| !r.is_empty()) {
        for (scenario, shifted) in ranks_by_scenario
            .iter()
            .filter(|(s, r)| **s != "none" && !r.is_empty())
        {
            match rank_deltas(default, shifted) {
                Ok(deltas) => {
                    for d in deltas {
                        tables.rank_deltas.push(vec![
                            scenario.to_string(),
                            d.method.to_string(),
                            num(d.default_rank),
                            num(d.shifted_rank),
                            num(d.delta),
                        ]);
                    }
                }
                Err(e) => tables
                    .gaps
                    .push(format!("{scenario}: rank deltas skipped: {e}")),
            }
        }
    }

    let mut failure_counts: BTreeMap<(&str, &str, &str, MethodTag), (usize, &str)> =
        BTreeMap::new();
    for f in failures {
        let entry = failure_counts
            .entry((&f.scenario, &f.model, &f.task, f.method))
            .or_insert((0, &f.error));
        entry.0 += 1;
    }
    for ((scenario, model, task, method), (n, error)) in failure_counts {
        tables.gaps.push(format!(
            "{scenario}: {model} {task} {method}: {n} failed unit(s), first error: {error}"
        ));
    }

    let mut files = BTreeMap::new();
    files.insert("aggregate.csv".to_string(), tables.aggregate.csv()?);
    files.insert("per_task.csv".to_string(), tables.per_task.csv()?);
    files.insert("verdicts.csv".to_string(), tables.verdicts.csv()?);
    files.insert("verdict_tally.csv".to_string(), tables.tally.csv()?);
    files.insert("rankings.csv".to_string(), tables.rankings.csv()?);
    files.insert("rank_deltas.csv".to_string(), tables.rank_deltas.csv()?);
    files.insert(
        "greedy_vs_ranking.csv".to_string(),
        tables.greedy_vs_ranking.csv()?,
    );
    files.insert("complexity.csv".to_string(), tables.complexity.csv()?);

    let mut md = String::from("# Format robustness report\n\n");
    let _ = writeln!(
        md,
        "{} records, {} failed units. Standard deviations use the population formula; \
         spread-difference tests are two-sided one-sample t-tests at alpha = {}; \
         method ranks are averaged jointly over (model, task) cells of median MCC.\n",
        records.len(),
        failures.len(),
        options.alpha
    );
    for (title, table) in [
        (
            "Aggregates (mean over tasks of the median over formats)",
            &tables.aggregate,
        ),
        ("Spread-difference verdicts", &tables.verdicts),
        ("Wins, ties and losses against the baseline", &tables.tally),
        ("Method ranking by MCC", &tables.rankings),
        ("Rank change under shift", &tables.rank_deltas),
        (
            "Greedy decoding versus probability ranking",
            &tables.greedy_vs_ranking,
        ),
        (
            "Spread versus number of non-default components",
            &tables.complexity,
        ),
        ("Per-task spread", &tables.per_task),
    ] {
        let _ = writeln!(md, "## {title}\n\n{}", table.markdown());
    }
    md += "## Gaps\n\n";
    if tables.gaps.is_empty() {
        md += "None.\n";
    } else {
        for g in &tables.gaps {
            let _ = writeln!(md, "- {g}");
        }
    }
    files.insert("report.md".to_string(), md);
    Ok(ReportBundle {
        files,
        gaps: tables.gaps,
    })
}

/// [`report`] over one or more run directories (each holding records and failures files).
pub fn report_files(run_dirs: &[&Path], options: &ReportOptions) -> Result<ReportBundle> {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for dir in run_dirs {
        records.extend(read_jsonl::<EvalRecord>(&dir.join(super::RECORDS_FILE))?);
        failures.extend(read_jsonl::<UnitFailure>(&dir.join(super::FAILURES_FILE))?);
    }
    report(&records, &failures, options)
}
