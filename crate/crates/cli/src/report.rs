//! Versioned run reports and the sweep trade-off table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use fairlag::audit::MetricsReport;
use fairlag::lagrange::{StopReason, TrainLog};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const REPORT_FORMAT: &str = "fairlag-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Constrained,
    /// Constraint measured but λ pinned at zero.
    Baseline,
    Unconstrained,
}

impl Mode {
    pub fn of(cfg: &RunConfig) -> Self {
        match (&cfg.train.constraint, cfg.lambda_zero) {
            (None, _) => Mode::Unconstrained,
            (Some(_), true) => Mode::Baseline,
            (Some(_), false) => Mode::Constrained,
        }
    }
}

/// A training-log row without wall-clock time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub epoch: usize,
    pub objective: f64,
    pub constraint_value: Option<f64>,
    pub lambda: f64,
    pub total: f64,
}

pub fn log_entries(log: &TrainLog) -> Vec<LogEntry> {
    log.rows
        .iter()
        .map(|r| LogEntry {
            epoch: r.epoch,
            objective: r.objective,
            constraint_value: r.constraint_value,
            lambda: r.lambda,
            total: r.total,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub epochs: usize,
    pub stop: StopReason,
    pub final_lambda: f64,
    pub metrics: MetricsReport,
    pub log: Vec<LogEntry>,
}

impl FoldReport {
    /// Scalar view used for aggregation.
    pub fn scalars(&self) -> BTreeMap<String, f64> {
        let m = &self.metrics;
        let mut s: BTreeMap<String, f64> = [
            ("accuracy", m.accuracy),
            ("dp_soft", m.dp_soft),
            ("dp_hard", m.dp_hard),
            ("eo_sum_soft", m.eo_sum_soft),
            ("eo_max_soft", m.eo_max_soft),
            ("fpr_gap", m.fpr_gap()),
            ("fnr_gap", m.fnr_gap()),
            ("fpr_cond_gap", m.fpr_cond_gap()),
            ("fnr_cond_gap", m.fnr_cond_gap()),
            ("di_soft", m.di_soft),
            ("di_ratio", m.di_ratio),
            ("p_percent", m.p_percent),
            ("q_mean", m.q_mean),
            ("q_mean_hard", m.q_mean_hard),
            ("final_lambda", self.final_lambda),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        if let Some(v) = m.dp_multi_soft {
            s.insert("dp_multi_soft".into(), v);
        }
        s
    }
}

/// Arithmetic mean and population standard deviation across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: BTreeMap<String, f64>,
    pub std: BTreeMap<String, f64>,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Aggregate {
    pub fn of(folds: &[FoldReport]) -> Self {
        let views: Vec<_> = folds.iter().map(FoldReport::scalars).collect();
        let (mut mean, mut std) = (BTreeMap::new(), BTreeMap::new());
        if let Some(first) = views.first() {
            for key in first.keys() {
                let xs: Vec<f64> = views.iter().filter_map(|v| v.get(key).copied()).collect();
                let (m, s) = mean_std(&xs);
                mean.insert(key.clone(), m);
                std.insert(key.clone(), s);
            }
        }
        Self { mean, std }
    }
}

/// Wall-clock facts, kept apart from the reproducible payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub started_unix_ms: u64,
    pub fold_wall_ms: Vec<u64>,
    pub total_wall_ms: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub command: String,
    pub mode: Mode,
    pub config: RunConfig,
    pub rows_dropped: usize,
    pub folds: Vec<FoldReport>,
    pub aggregate: Aggregate,
    pub metadata: RunMetadata,
}

impl RunReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// The report without `metadata`; identical across reruns with one seed.
    pub fn payload_json(&self) -> serde_json::Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("metadata");
        }
        serde_json::to_string_pretty(&v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub epsilon_or_p: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_constraint_value: f64,
    pub std_constraint_value: f64,
}

pub const TRADEOFF_HEADER: &str =
    "epsilon_or_p,mean_accuracy,std_accuracy,mean_constraint_value,std_constraint_value";

pub fn tradeoff_csv(rows: &[TradeoffRow]) -> String {
    let mut s = format!("{TRADEOFF_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.epsilon_or_p,
            r.mean_accuracy,
            r.std_accuracy,
            r.mean_constraint_value,
            r.std_constraint_value
        );
    }
    s
}

pub fn parse_tradeoff_csv(text: &str) -> Option<Vec<TradeoffRow>> {
    let mut lines = text.lines();
    if lines.next()? != TRADEOFF_HEADER {
        return None;
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let v: Vec<f64> = l
                .split(',')
                .map(|f| f.parse().ok())
                .collect::<Option<_>>()?;
            (v.len() == 5).then(|| TradeoffRow {
                epsilon_or_p: v[0],
                mean_accuracy: v[1],
                std_accuracy: v[2],
                mean_constraint_value: v[3],
                std_constraint_value: v[4],
            })
        })
        .collect()
}
