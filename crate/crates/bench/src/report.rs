//! Comparison report, its best-method rule and the plain-text table.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use hsi_tensor::{StageError, StopReason};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub method: String,
    pub iterations: usize,
    /// `None` when the method failed.
    pub relative_error: Option<f64>,
    pub stage_errors: Vec<StageError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    pub converged: bool,
    pub stop_reason: Option<StopReason>,
    pub parameter_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MethodRecord {
    /// Row for a method that produced no usable model.
    pub fn failed(method: &str, error: String) -> Self {
        Self {
            method: method.to_owned(),
            iterations: 0,
            relative_error: None,
            stage_errors: Vec::new(),
            wall_time_s: None,
            converged: false,
            stop_reason: None,
            parameter_count: None,
            warnings: Vec::new(),
            error: Some(error),
        }
    }

    fn usable_error(&self) -> Option<f64> {
        self.relative_error.filter(|e| e.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dims: Vec<usize>,
    pub seed: u64,
    pub methods: Vec<MethodRecord>,
    pub best_method: Option<String>,
    /// Residual after every sweep, keyed by method.
    pub traces: BTreeMap<String, Vec<f64>>,
}

/// Ranking key: error, then parameter count, then iterations. Listing
/// order breaks the remaining ties because the scan keeps the first minimum.
fn rank_cmp(a: &MethodRecord, b: &MethodRecord) -> Ordering {
    let (ea, eb) = (a.usable_error().unwrap_or(f64::INFINITY), b.usable_error().unwrap_or(f64::INFINITY));
    ea.total_cmp(&eb)
        .then(a.parameter_count.unwrap_or(usize::MAX).cmp(&b.parameter_count.unwrap_or(usize::MAX)))
        .then(a.iterations.cmp(&b.iterations))
}

/// Index of the best record, or `None` when no method has a finite error.
pub fn select_best(records: &[MethodRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        if r.usable_error().is_none() {
            continue;
        }
        if best.is_none_or(|b| rank_cmp(r, &records[b]) == Ordering::Less) {
            best = Some(i);
        }
    }
    best
}

impl ComparisonReport {
    pub fn new(dims: Vec<usize>, seed: u64, methods: Vec<MethodRecord>, traces: BTreeMap<String, Vec<f64>>) -> Self {
        let best_method = select_best(&methods).map(|i| methods[i].method.clone());
        Self {
            dims,
            seed,
            methods,
            best_method,
            traces,
        }
    }

    /// Checks `best_method` against the records alone.
    pub fn best_method_is_consistent(&self) -> bool {
        let expected = select_best(&self.methods).map(|i| self.methods[i].method.as_str());
        if expected != self.best_method.as_deref() {
            return false;
        }
        let Some(best) = self.best_method.as_ref() else {
            return true;
        };
        let best = self.methods.iter().find(|r| &r.method == best).expect("selected from records");
        self.methods
            .iter()
            .filter_map(MethodRecord::usable_error)
            .all(|e| best.usable_error().is_some_and(|b| b <= e))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Columns `method`, `iterations`, `relative_error`.
    pub fn table(&self) -> String {
        let width = self.methods.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
        let mut out = format!("{:<width$}  {:>10}  {}\n", "method", "iterations", "relative_error");
        for r in &self.methods {
            let err = match r.relative_error {
                Some(e) => format!("{e:.13}"),
                None => "failed".to_owned(),
            };
            writeln!(out, "{:<width$}  {:>10}  {err}", r.method, r.iterations).expect("write to string");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankScore {
    pub rank: usize,
    /// CORCONDIA score; `null` in JSON if the fit produced a non-finite value.
    pub score: f64,
    pub regularized: bool,
    pub relative_error: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEstimate {
    pub threshold: f64,
    pub entries: Vec<RankScore>,
    /// Largest rank whose score reaches the threshold.
    pub suggested_rank: Option<usize>,
}

impl RankEstimate {
    pub fn new(threshold: f64, entries: Vec<RankScore>) -> Self {
        let suggested_rank = entries
            .iter()
            .filter(|e| e.score >= threshold)
            .map(|e| e.rank)
            .max();
        Self {
            threshold,
            entries,
            suggested_rank,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(method: &str, err: f64, params: usize, iterations: usize) -> MethodRecord {
        MethodRecord {
            method: method.into(),
            iterations,
            relative_error: Some(err),
            stage_errors: Vec::new(),
            wall_time_s: None,
            converged: true,
            stop_reason: Some(StopReason::Tolerance),
            parameter_count: Some(params),
            warnings: Vec::new(),
            error: None,
        }
    }

    #[test]
    fn recorded_table_selects_btd() {
        let report = ComparisonReport::new(
            vec![1, 1, 1],
            0,
            vec![
                record("cpd", 0.0828355865100, 10, 318),
                record("btd-ll1", 0.0228688297698, 10, 24),
                record("lmlra", 0.0455030082908, 10, 22),
            ],
            BTreeMap::new(),
        );
        assert_eq!(report.best_method.as_deref(), Some("btd-ll1"));
        assert!(report.best_method_is_consistent());
    }

    #[test]
    fn tie_breaks() {
        let same = [record("a", 0.1, 5, 9), record("b", 0.1, 5, 9)];
        assert_eq!(select_best(&same), Some(0));
        let fewer_params = [record("a", 0.1, 6, 1), record("b", 0.1, 5, 9)];
        assert_eq!(select_best(&fewer_params), Some(1));
        let fewer_iters = [record("a", 0.1, 5, 9), record("b", 0.1, 5, 8)];
        assert_eq!(select_best(&fewer_iters), Some(1));
    }

    #[test]
    fn failed_methods_are_never_best() {
        let rows = [MethodRecord::failed("a", "boom".into()), record("b", 0.5, 1, 1)];
        assert_eq!(select_best(&rows), Some(1));
        assert_eq!(select_best(&rows[..1]), None);
        let mut report = ComparisonReport::new(vec![], 0, rows.to_vec(), BTreeMap::new());
        assert!(report.best_method_is_consistent());
        report.best_method = Some("a".into());
        assert!(!report.best_method_is_consistent());
    }

    #[test]
    fn table_layout() {
        let report = ComparisonReport::new(
            vec![],
            0,
            vec![record("cpd", 0.0828355865100, 1, 318), MethodRecord::failed("btd", "x".into())],
            BTreeMap::new(),
        );
        assert_eq!(
            report.table(),
            "method  iterations  relative_error\n\
             cpd            318  0.0828355865100\n\
             btd              0  failed\n"
        );
    }

    #[test]
    fn rank_suggestion() {
        let entry = |rank, score| RankScore {
            rank,
            score,
            regularized: false,
            relative_error: 0.0,
            iterations: 1,
        };
        let est = RankEstimate::new(90.0, vec![entry(1, 100.0), entry(2, 99.0), entry(3, 12.0)]);
        assert_eq!(est.suggested_rank, Some(2));
        assert_eq!(RankEstimate::new(90.0, vec![entry(2, 5.0)]).suggested_rank, None);
    }
}
