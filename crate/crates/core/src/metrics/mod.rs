//! Accuracy, spread, MCC, cross-task aggregation, significance tests and rankings.

mod basic;
mod ranking;
mod series;
mod significance;

pub use basic::{accuracy, mcc, mcc_records, mean, median, percentile, spread, std_over_formats};
pub use ranking::{average_ranks_desc, rank_deltas, rank_methods, MccCell, MethodRank, RankDelta};
pub use series::{
    aggregate, series_from_records, spread_vs_complexity, AggregateRow, ComplexityPoint,
    FormatSeries, Metric,
};
pub use significance::{
    one_sample_t_test, spread_diff_test, tally_verdicts, verdict_from_diffs, SignificanceVerdict,
    TTest, Verdict, VerdictTally, DEFAULT_ALPHA,
};
