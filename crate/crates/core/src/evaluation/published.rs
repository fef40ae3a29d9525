//! Published field-study results shipped as a regression fixture.

use serde::{Deserialize, Serialize};

use super::{MeanMetrics, Metrics};
use crate::rubric::IssueCategory;

const PUBLISHED_JSON: &str = include_str!("../../data/published_results.json");

/// Counts and printed two-decimal rates for one issue type, pooled over all scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedIssueRow {
    pub issue: String,
    pub rubric_id: String,
    pub category: IssueCategory,
    pub gt: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub printed: MeanMetrics,
}

impl PublishedIssueRow {
    pub fn metrics(&self) -> Metrics {
        Metrics::from_counts(self.tp, self.fp, self.fn_)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedSpace {
    pub id: String,
    pub home_type: String,
    pub size_sqm: f64,
    pub rooms: u32,
    pub gt_issues: usize,
    /// Printed per-scan rates, three scans per space.
    pub scans: Vec<MeanMetrics>,
    /// Printed per-space averages.
    pub average: MeanMetrics,
    pub alpha: f64,
    pub scan_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedAverage {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub alpha: f64,
    pub scan_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedResults {
    pub per_issue: Vec<PublishedIssueRow>,
    pub spaces: Vec<PublishedSpace>,
    pub average: PublishedAverage,
}

impl PublishedResults {
    pub fn load() -> Self {
        serde_json::from_str(PUBLISHED_JSON).expect("bundled fixture is valid")
    }

    pub fn raw_json() -> &'static str {
        PUBLISHED_JSON
    }

    /// Mean of every published scan row.
    pub fn grand_average(&self) -> MeanMetrics {
        MeanMetrics::of(self.spaces.iter().flat_map(|s| s.scans.iter().map(MeanMetrics::rates))).expect("fixture has scans")
    }
}
