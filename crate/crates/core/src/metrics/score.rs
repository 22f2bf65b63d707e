use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::encoding::{parse_path, CoordinateEncoding, ParseMode};
use super::{ndtw, MetricError, NormalizedPath};
use crate::model::PathAnnotation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    None,
    EmptyOutput,
    ParseFailure,
    NdtwUndefined,
}

/// Outcome of one query. `success` holds iff there is no failure reason,
/// and exactly then `ndtw` is defined.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryScore {
    ndtw: Option<f64>,
    success: bool,
    failure_reason: FailureReason,
}

impl QueryScore {
    pub fn scored(value: f64) -> Self {
        if value.is_finite() && value >= 0.0 {
            Self { ndtw: Some(value), success: true, failure_reason: FailureReason::None }
        } else {
            Self::failed(FailureReason::NdtwUndefined)
        }
    }

    pub fn failed(reason: FailureReason) -> Self {
        let reason = if reason == FailureReason::None { FailureReason::NdtwUndefined } else { reason };
        Self { ndtw: None, success: false, failure_reason: reason }
    }

    pub fn ndtw(&self) -> Option<f64> {
        self.ndtw
    }

    pub fn success(&self) -> bool {
        self.success
    }

    pub fn failure_reason(&self) -> FailureReason {
        self.failure_reason
    }
}

/// Parse `raw_output` leniently and score it against `truth`. Every model
/// failure lands in the returned record.
pub fn score_query(
    raw_output: &str,
    truth: &PathAnnotation,
    dims: (u32, u32),
    encoding: CoordinateEncoding,
) -> Result<QueryScore, MetricError> {
    let truth = NormalizedPath::from_pixels(&truth.points, dims).map_err(|_| MetricError::EmptyTruth)?;
    let pred = match parse_path(raw_output, dims, encoding, ParseMode::Lenient) {
        Ok(p) => p,
        Err(MetricError::EmptyOutput) => return Ok(QueryScore::failed(FailureReason::EmptyOutput)),
        Err(_) => return Ok(QueryScore::failed(FailureReason::ParseFailure)),
    };
    Ok(match ndtw(&pred, truth.points())? {
        Some(v) => QueryScore::scored(v),
        None => QueryScore::failed(FailureReason::EmptyOutput),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CategoryStats {
    pub label: String,
    pub queries: usize,
    pub successes: usize,
    /// Mean NDTW over successful queries.
    pub mean_ndtw: Option<f64>,
    /// Percentage of successful queries.
    pub success_rate: Option<f64>,
}

impl CategoryStats {
    fn from_scores(label: &str, scores: &[QueryScore]) -> Self {
        let mut values: Vec<f64> = scores.iter().filter_map(|s| s.ndtw()).collect();
        // Sorting makes the sum independent of input order.
        values.sort_by(f64::total_cmp);
        let successes = values.len();
        let queries = scores.len();
        Self {
            label: label.to_string(),
            queries,
            successes,
            mean_ndtw: (successes > 0).then(|| values.iter().sum::<f64>() / successes as f64),
            success_rate: (queries > 0).then(|| 100.0 * successes as f64 / queries as f64),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreReport {
    pub categories: Vec<CategoryStats>,
    /// Pooled over every query.
    pub overall: CategoryStats,
}

/// Aggregate per-category and pooled statistics. `labels` fixes the row set
/// and order (empty rows report n/a); labels only seen in `scores` are
/// appended in sorted order.
pub fn aggregate_report(scores: &[(String, QueryScore)], labels: &[&str]) -> ScoreReport {
    let mut by_label: BTreeMap<&str, Vec<QueryScore>> = BTreeMap::new();
    for (label, s) in scores {
        by_label.entry(label.as_str()).or_default().push(*s);
    }
    let mut order: Vec<&str> = labels.to_vec();
    order.extend(by_label.keys().filter(|k| !labels.contains(k)));
    let categories =
        order.iter().map(|l| CategoryStats::from_scores(l, by_label.get(l).map_or(&[][..], Vec::as_slice))).collect();
    let all: Vec<QueryScore> = scores.iter().map(|(_, s)| *s).collect();
    ScoreReport { categories, overall: CategoryStats::from_scores("overall", &all) }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.categories.iter().map(|c| c.label.len()).max().unwrap_or(0).max(8);
        writeln!(f, "{:<width$}  {:>7}  {:>6}  {:>7}", "category", "queries", "NDTW", "SR(%)")?;
        for c in self.categories.iter().chain(std::iter::once(&self.overall)) {
            let ndtw = c.mean_ndtw.map_or("n/a".to_string(), |v| format!("{v:.2}"));
            let sr = c.success_rate.map_or("n/a".to_string(), |v| format!("{v:.1}"));
            writeln!(f, "{:<width$}  {:>7}  {:>6}  {:>7}", c.label, c.queries, ndtw, sr)?;
        }
        Ok(())
    }
}
