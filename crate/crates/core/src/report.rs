//! Scan reports: the audited scene, the issues it produced and their review
//! status, in one JSON document.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::evaluation::ScanIssues;
use crate::fusion::{fuse, write_stream, ClassExtents, DetectionEvent, FusionConfig, FusionDiagnostics};
use crate::rubric::{evaluate, select_active, Community, Issue, IssueStatus, Rubric, RubricSet};
use crate::scene::{ParametricScene, SceneObject};

pub const REPORT_SCHEMA: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRef {
    pub id: String,
    /// SHA-256 of the input scene's canonical JSON.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Span of the detection stream's timestamps; absent without a stream.
    pub scan_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanReport {
    pub schema: u32,
    pub report_id: String,
    pub scene_ref: SceneRef,
    pub communities: BTreeSet<Community>,
    pub excluded_rubrics: Vec<String>,
    pub rubric_set_version: String,
    pub tool_version: String,
    /// Rubrics that were active for this scan.
    pub rubrics: Vec<Rubric>,
    /// The scene the rubrics were evaluated on.
    pub scene: ParametricScene,
    pub fused_objects: Vec<SceneObject>,
    pub fusion: Option<FusionDiagnostics>,
    pub issues: Vec<Issue>,
    pub timings: Timings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditOptions {
    pub communities: BTreeSet<Community>,
    pub excluded: Vec<String>,
    pub fusion: FusionConfig,
    pub extents: ClassExtents,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("report is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported report schema {0}, expected {REPORT_SCHEMA}")]
    Schema(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatusError {
    #[error("no issue with id `{0}`")]
    UnknownIssue(String),
    #[error("issue `{id}` is {from:?} and cannot become {to:?}")]
    IllegalTransition { id: String, from: IssueStatus, to: IssueStatus },
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn canonical<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("in-memory values serialize")
}

/// Runs fusion (when a stream is given) and rubric evaluation.
///
/// With a stream, ground-truth annotations in the scene file are replaced by
/// the fused objects. Without one the scene is audited as given.
pub fn audit(scene: &ParametricScene, stream: Option<&[DetectionEvent]>, rubrics: &RubricSet, opts: &AuditOptions) -> ScanReport {
    let set = rubrics.without(&opts.excluded);
    let active = select_active(&set, &opts.communities);
    let (audited, fused, diagnostics, scan_seconds) = match stream {
        Some(events) => {
            let out = fuse(events, &scene.reconstruction(), &opts.fusion, &opts.extents);
            let span = events
                .iter()
                .map(|e| e.frame.timestamp)
                .fold(None, |acc: Option<(f64, f64)>, t| Some(acc.map_or((t, t), |(lo, hi)| (lo.min(t), hi.max(t)))))
                .map_or(0.0, |(lo, hi)| hi - lo);
            (scene.with_fused(out.objects.clone()), out.objects, Some(out.diagnostics), Some(span))
        }
        None => (scene.clone(), Vec::new(), None, None),
    };
    let issues = evaluate(&audited, &active);

    let scene_json = canonical(scene);
    let mut hasher = Sha256::new();
    for part in [
        scene_json.clone(),
        stream.map(write_stream).unwrap_or_default(),
        canonical(rubrics),
        canonical(&opts.communities),
        canonical(&opts.excluded),
        canonical(&opts.fusion),
        canonical(&opts.extents),
        TOOL_VERSION.to_string(),
    ] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }

    ScanReport {
        schema: REPORT_SCHEMA,
        report_id: hex::encode(hasher.finalize()),
        scene_ref: SceneRef {
            id: scene.id.clone(),
            sha256: sha256_hex(scene_json.as_bytes()),
        },
        communities: opts.communities.clone(),
        excluded_rubrics: opts.excluded.clone(),
        rubric_set_version: rubrics.version.clone(),
        tool_version: TOOL_VERSION.to_string(),
        rubrics: active,
        scene: audited,
        fused_objects: fused,
        fusion: diagnostics,
        issues,
        timings: Timings { scan_seconds },
        generated_at: None,
    }
}

impl ScanReport {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ReportError> {
        let report: ScanReport = serde_json::from_slice(bytes)?;
        if report.schema != REPORT_SCHEMA {
            return Err(ReportError::Schema(report.schema));
        }
        Ok(report)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn issue(&self, id: &str) -> Option<&Issue> {
        self.issues.iter().find(|i| i.id == id)
    }

    pub fn rubric(&self, id: &str) -> Option<&Rubric> {
        self.rubrics.iter().find(|r| r.id == id)
    }

    pub fn scan_issues(&self, scan_id: impl Into<String>) -> ScanIssues {
        ScanIssues {
            scan_id: scan_id.into(),
            issues: self.issues.clone(),
        }
    }
}

/// Moves an active issue to `confirmed` or `dismissed`. Repeating the same
/// change is a no-op; any other change of a reviewed issue is refused.
/// Returns whether the report changed.
pub fn set_issue_status(report: &mut ScanReport, issue_id: &str, status: IssueStatus) -> Result<bool, StatusError> {
    let issue = report
        .issues
        .iter_mut()
        .find(|i| i.id == issue_id)
        .ok_or_else(|| StatusError::UnknownIssue(issue_id.to_string()))?;
    if issue.status == status {
        return Ok(false);
    }
    if issue.status != IssueStatus::Active || status == IssueStatus::Active {
        return Err(StatusError::IllegalTransition {
            id: issue_id.to_string(),
            from: issue.status,
            to: status,
        });
    }
    issue.status = status;
    Ok(true)
}
