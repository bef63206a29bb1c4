//! Node-level confusion counts, sensitivity and specificity.
//!
//! Precision is deliberately not reported: boundary nodes are a small
//! minority, so it would mostly reflect class imbalance.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_negative: usize,
    pub false_positive: usize,
    pub true_negative: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_positive + self.false_negative + self.false_positive + self.true_negative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    /// `None` when there are no actual boundary nodes.
    pub sensitivity: Option<f64>,
    /// `None` when every node is an actual boundary node.
    pub specificity: Option<f64>,
}

/// Compares detected against true boundary IDs over nodes `0..n`.
pub fn confusion_counts(detected: &[NodeId], truth: &[NodeId], n: usize) -> Result<Confusion> {
    let detected = id_set(detected, n, "detected")?;
    let truth = id_set(truth, n, "truth")?;
    let tp = detected.intersection(&truth).count();
    let fp = detected.len() - tp;
    let fn_ = truth.len() - tp;
    Ok(Confusion {
        true_positive: tp,
        false_negative: fn_,
        false_positive: fp,
        true_negative: n - tp - fp - fn_,
    })
}

fn id_set(ids: &[NodeId], n: usize, which: &str) -> Result<BTreeSet<NodeId>> {
    if let Some(&bad) = ids.iter().find(|&&v| v >= n) {
        return Err(Error::invalid(format!(
            "{which} node ID {bad} out of range for {n} nodes"
        )));
    }
    Ok(ids.iter().copied().collect())
}

pub fn scores(c: &Confusion) -> Scores {
    let ratio = |num: usize, other: usize| {
        let den = num + other;
        (den > 0).then(|| num as f64 / den as f64)
    };
    Scores {
        sensitivity: ratio(c.true_positive, c.false_negative),
        specificity: ratio(c.true_negative, c.false_positive),
    }
}

pub const METRICS_HEADER: &str =
    "n,d,seed,snapshot_iter,TP,FN,FP,TN,sensitivity,specificity,detect_ms";

/// One row of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub n: usize,
    pub d: f64,
    pub seed: u64,
    pub snapshot_iter: u64,
    pub confusion: Confusion,
    /// Wall-clock detection time; `None` keeps outputs reproducible.
    pub detect_ms: Option<f64>,
}

impl MetricsRow {
    pub fn scores(&self) -> Scores {
        scores(&self.confusion)
    }

    pub fn to_csv_line(&self) -> String {
        let s = self.scores();
        let c = &self.confusion;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.d,
            self.seed,
            self.snapshot_iter,
            c.true_positive,
            c.false_negative,
            c.false_positive,
            c.true_negative,
            format_score(s.sensitivity),
            format_score(s.specificity),
            self.detect_ms.map_or("NA".to_string(), |ms| format!("{ms:.3}")),
        )
    }
}

pub fn format_score(s: Option<f64>) -> String {
    s.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.to_csv_line());
    }
    out
}
