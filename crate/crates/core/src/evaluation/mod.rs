//! Scoring reports against a manual audit: issue matching, detection
//! metrics and agreement across repeated scans.

mod alpha;
mod published;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use alpha::{build_alpha_matrix, krippendorff_alpha, AlphaMatrix, AlphaOutcome};
pub use published::{PublishedIssueRow, PublishedResults, PublishedSpace};

use crate::geometry::Vec3;
use crate::rubric::{Issue, IssueStatus, RubricSet};

pub const DEFAULT_TOLERANCE: f64 = 0.5;

/// One issue found by the human auditor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthIssue {
    pub rubric_id: String,
    pub position: Vec3,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("matching tolerance must be a non-negative number, got {0}")]
    NegativeTolerance(f64),
    #[error("ground truth parse error: {0}")]
    Parse(String),
    #[error("ground truth entry {index} names unknown rubric `{rubric_id}`")]
    UnknownRubric { index: usize, rubric_id: String },
    #[error("agreement needs at least 2 raters, got {0}")]
    TooFewRaters(usize),
    #[error("agreement needs at least 1 unit")]
    NoUnits,
    #[error("alpha matrix row {0} does not have one cell per rater")]
    RaggedMatrix(usize),
    #[error("no scans to summarize")]
    NoScans,
}

pub fn parse_ground_truth(bytes: &[u8]) -> Result<Vec<GroundTruthIssue>, EvalError> {
    serde_json::from_slice(bytes).map_err(|e| EvalError::Parse(e.to_string()))
}

/// Checks that every ground-truth rubric id exists in `rubrics`.
pub fn check_ground_truth(gt: &[GroundTruthIssue], rubrics: &RubricSet) -> Result<(), EvalError> {
    for (index, g) in gt.iter().enumerate() {
        if rubrics.get(&g.rubric_id).is_none() {
            return Err(EvalError::UnknownRubric {
                index,
                rubric_id: g.rubric_id.clone(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchOptions {
    /// Maximum anchor distance in meters for a reported issue to count.
    pub tolerance: f64,
    /// Count dismissed issues as reported.
    pub include_dismissed: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            include_dismissed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub issue_id: String,
    pub gt_index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub matched: Vec<MatchedPair>,
    pub unmatched_reported: Vec<String>,
    pub unmatched_gt: Vec<usize>,
}

/// Greedy same-rubric matching: within each rubric, candidate pairs are taken
/// in order of increasing anchor distance and each side is used once.
pub fn match_issues(reported: &[Issue], gt: &[GroundTruthIssue], opts: &MatchOptions) -> Result<MatchResult, EvalError> {
    if !(opts.tolerance >= 0.0) {
        return Err(EvalError::NegativeTolerance(opts.tolerance));
    }
    let considered: Vec<&Issue> = reported
        .iter()
        .filter(|i| opts.include_dismissed || i.status != IssueStatus::Dismissed)
        .collect();

    let mut by_rubric: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (ri, issue) in considered.iter().enumerate() {
        by_rubric.entry(issue.rubric_id.as_str()).or_default().0.push(ri);
    }
    for (gi, g) in gt.iter().enumerate() {
        by_rubric.entry(g.rubric_id.as_str()).or_default().1.push(gi);
    }

    let mut used_r = vec![false; considered.len()];
    let mut used_g = vec![false; gt.len()];
    let mut matched = Vec::new();
    for (rs, gs) in by_rubric.values() {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for &r in rs {
            for &g in gs {
                let d = considered[r].anchor_point.distance(gt[g].position);
                if d <= opts.tolerance {
                    pairs.push((d, r, g));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for (d, r, g) in pairs {
            if !used_r[r] && !used_g[g] {
                used_r[r] = true;
                used_g[g] = true;
                matched.push(MatchedPair {
                    issue_id: considered[r].id.clone(),
                    gt_index: g,
                    distance: d,
                });
            }
        }
    }
    matched.sort_by_key(|m| m.gt_index);

    let unmatched_reported: Vec<String> = considered
        .iter()
        .zip(&used_r)
        .filter(|(_, &u)| !u)
        .map(|(i, _)| i.id.clone())
        .collect();
    let unmatched_gt: Vec<usize> = (0..gt.len()).filter(|&g| !used_g[g]).collect();
    Ok(MatchResult {
        tp: matched.len(),
        fp: unmatched_reported.len(),
        fn_: unmatched_gt.len(),
        matched,
        unmatched_reported,
        unmatched_gt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let (t, p, n) = (tp as f64, fp as f64, fn_ as f64);
        let precision = ratio(t, t + p);
        let recall = ratio(t, t + n);
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1: ratio(2.0 * precision * recall, precision + recall),
            accuracy: ratio(t, t + p + n),
        }
    }

    pub fn rates(&self) -> [f64; 4] {
        [self.precision, self.recall, self.f1, self.accuracy]
    }
}

pub fn compute_metrics(m: &MatchResult) -> Metrics {
    Metrics::from_counts(m.tp, m.fp, m.fn_)
}

/// Rounds half away from zero to two decimals for display.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

impl MeanMetrics {
    pub fn of<I: IntoIterator<Item = [f64; 4]>>(rows: I) -> Option<Self> {
        let mut sum = [0.0; 4];
        let mut n = 0usize;
        for r in rows {
            for k in 0..4 {
                sum[k] += r[k];
            }
            n += 1;
        }
        (n > 0).then(|| {
            let n = n as f64;
            MeanMetrics {
                precision: sum[0] / n,
                recall: sum[1] / n,
                f1: sum[2] / n,
                accuracy: sum[3] / n,
            }
        })
    }

    pub fn rates(&self) -> [f64; 4] {
        [self.precision, self.recall, self.f1, self.accuracy]
    }
}

/// Reported issues from one scan of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanIssues {
    pub scan_id: String,
    pub issues: Vec<Issue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanScore {
    pub scan_id: String,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub scans: Vec<ScanScore>,
    pub average: MeanMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Per-scan metrics, their mean and (with two or more scans) Krippendorff's
/// alpha treating every scan as a rater.
pub fn summarize_space(scans: &[ScanIssues], gt: &[GroundTruthIssue], opts: &MatchOptions) -> Result<SpaceSummary, EvalError> {
    if scans.is_empty() {
        return Err(EvalError::NoScans);
    }
    let mut scores = Vec::with_capacity(scans.len());
    for s in scans {
        let m = match_issues(&s.issues, gt, opts)?;
        scores.push(ScanScore {
            scan_id: s.scan_id.clone(),
            metrics: compute_metrics(&m),
        });
    }
    let average = MeanMetrics::of(scores.iter().map(|s| s.metrics.rates())).expect("at least one scan");
    let mut warnings = Vec::new();
    let alpha = if scans.len() >= 2 {
        if scans.len() == 2 {
            warnings.push("agreement computed over only 2 raters".to_string());
        }
        let matrix = build_alpha_matrix(scans, gt, opts)?;
        let out = krippendorff_alpha(&matrix)?;
        if out.degenerate {
            warnings.push("all codings identical; alpha set to 1 by convention".to_string());
        }
        Some(out.alpha)
    } else {
        None
    };
    Ok(SpaceSummary {
        scans: scores,
        average,
        alpha,
        warnings,
    })
}
