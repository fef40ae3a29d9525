//! One function per subcommand. Each returns an [`Output`] holding both the
//! JSON and the plain-text rendering of its result.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use room_audit_core::evaluation::{
    check_ground_truth, compute_metrics, match_issues, parse_ground_truth, round2, summarize_space, GroundTruthIssue,
    MatchOptions, MeanMetrics, Metrics, PublishedResults, ScanIssues,
};
use room_audit_core::fusion::{parse_stream, write_stream, ClassExtents, FusionConfig};
use room_audit_core::report::{audit, AuditOptions, ScanReport};
use room_audit_core::rubric::{parse_rubrics, Community, IssueCategory, IssueStatus, RubricSet};
use room_audit_core::scene::{load_scene, ParametricScene};
use room_audit_core::simulator::{generate_scene, generate_stream, SceneSpec, TrajectorySpec};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::CliError;

/// A command's result in both output formats, plus warnings for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub json: Value,
    pub text: String,
    pub warnings: Vec<String>,
}

impl Output {
    fn new(json: Value, text: impl Into<String>) -> Self {
        Output {
            json,
            text: text.into(),
            warnings: Vec::new(),
        }
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::validation(e.to_string()).in_file(path))
}

/// Writes through a temporary file in the target directory, then renames it
/// over `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    // Temporary files are created owner-only; keep the target's mode, or use
    // the usual mode for a fresh file.
    let perms = match fs::metadata(path) {
        Ok(m) => m.permissions(),
        Err(_) => default_permissions(tmp.as_file())?,
    };
    tmp.as_file().set_permissions(perms).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

#[cfg(unix)]
fn default_permissions(_: &fs::File) -> Result<fs::Permissions, CliError> {
    use std::os::unix::fs::PermissionsExt;
    Ok(fs::Permissions::from_mode(0o644))
}

#[cfg(not(unix))]
fn default_permissions(f: &fs::File) -> Result<fs::Permissions, CliError> {
    f.metadata().map(|m| m.permissions()).map_err(|e| CliError::internal(e.to_string()))
}

fn load_rubric_file(path: Option<&Path>) -> Result<RubricSet, CliError> {
    match path {
        None => Ok(RubricSet::default_set()),
        Some(p) => {
            let bytes = read_file(p)?;
            parse_rubrics(&bytes).map_err(|e| CliError {
                rubric_id: e.rubric_id().map(str::to_string),
                ..CliError::validation(e.to_string()).in_file(p)
            })
        }
    }
}

pub fn load_report(path: &Path) -> Result<ScanReport, CliError> {
    let bytes = read_file(path)?;
    ScanReport::from_json(&bytes).map_err(|e| CliError::validation(e.to_string()).in_file(path))
}

fn load_gt(path: &Path, rubrics: &RubricSet) -> Result<Vec<GroundTruthIssue>, CliError> {
    let bytes = read_file(path)?;
    let gt = parse_ground_truth(&bytes).map_err(|e| CliError::validation(e.to_string()).in_file(path))?;
    check_ground_truth(&gt, rubrics).map_err(|e| CliError::validation(e.to_string()).in_file(path))?;
    Ok(gt)
}

fn match_options(tolerance: f64, include_dismissed: bool) -> MatchOptions {
    MatchOptions {
        tolerance,
        include_dismissed,
    }
}

fn rates_text(m: &MeanMetrics) -> String {
    format!(
        "P {:.2}  R {:.2}  F1 {:.2}  Acc {:.2}",
        round2(m.precision),
        round2(m.recall),
        round2(m.f1),
        round2(m.accuracy)
    )
}

fn mean_of(m: &Metrics) -> MeanMetrics {
    MeanMetrics {
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        accuracy: m.accuracy,
    }
}

pub fn validate_rubrics(path: &Path) -> Result<Output, CliError> {
    let set = load_rubric_file(Some(path))?;
    let n = set.rubrics.len();
    let mut by_category: BTreeMap<IssueCategory, usize> = BTreeMap::new();
    for r in &set.rubrics {
        *by_category.entry(r.category).or_default() += 1;
    }
    let mut out = Output::new(
        json!({"ok": true, "count": n, "version": set.version, "by_category": by_category}),
        if n == 0 { "0 rubrics".to_string() } else { format!("{n} rubrics OK") },
    );
    if n == 0 {
        out.warnings.push(format!("{} defines no rubrics", path.display()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct AuditArgs {
    pub scene: PathBuf,
    pub stream: Option<PathBuf>,
    pub rubrics: Option<PathBuf>,
    pub communities: Vec<Community>,
    pub exclude: Vec<String>,
    pub fusion_config: Option<PathBuf>,
    pub class_extents: Option<PathBuf>,
    pub out: PathBuf,
    pub timestamps: bool,
}

fn count_by_category(report: &ScanReport) -> BTreeMap<IssueCategory, usize> {
    let mut m: BTreeMap<IssueCategory, usize> = IssueCategory::ALL.iter().map(|c| (*c, 0)).collect();
    for i in &report.issues {
        *m.entry(i.category).or_default() += 1;
    }
    m
}

pub fn audit_cmd(args: &AuditArgs) -> Result<Output, CliError> {
    let scene_bytes = read_file(&args.scene)?;
    let scene = load_scene(&scene_bytes).map_err(|e| CliError::validation(e.to_string()).in_file(&args.scene))?;
    let rubrics = load_rubric_file(args.rubrics.as_deref())?;
    let stream = match &args.stream {
        Some(p) => {
            let text = String::from_utf8(read_file(p)?)
                .map_err(|e| CliError::validation(format!("stream is not UTF-8: {e}")).in_file(p))?;
            Some(parse_stream(&text).map_err(|e| CliError::validation(e.to_string()).in_file(p))?)
        }
        None => None,
    };
    let fusion: FusionConfig = match &args.fusion_config {
        Some(p) => read_json(p)?,
        None => FusionConfig::default(),
    };
    fusion
        .validate()
        .map_err(|e| CliError::validation(e.to_string()))?;
    let extents: ClassExtents = match &args.class_extents {
        Some(p) => read_json(p)?,
        None => ClassExtents::default(),
    };

    let mut warnings = Vec::new();
    for id in &args.exclude {
        if rubrics.get(id).is_none() {
            warnings.push(format!("--exclude-rubric `{id}` matches no rubric"));
        }
    }
    let opts = AuditOptions {
        communities: args.communities.iter().copied().collect::<BTreeSet<_>>(),
        excluded: args.exclude.clone(),
        fusion,
        extents,
    };
    let mut report = audit(&scene, stream.as_deref(), &rubrics, &opts);
    if args.timestamps {
        report.generated_at = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    }
    let text = report.to_json();
    ScanReport::from_json(text.as_bytes())
        .ok()
        .filter(|back| back == &report)
        .ok_or_else(|| CliError::internal("report does not survive a JSON round trip"))?;
    write_atomic(&args.out, text.as_bytes())?;

    let by_category = count_by_category(&report);
    let summary = by_category
        .iter()
        .map(|(c, n)| format!("{n} {c:?}"))
        .collect::<Vec<_>>()
        .join(", ");
    let mut out = Output::new(
        json!({
            "report": args.out,
            "report_id": report.report_id,
            "issues": report.issues.len(),
            "by_category": by_category,
            "fused_objects": report.fused_objects.len(),
            "scan_seconds": report.timings.scan_seconds,
        }),
        format!("wrote {}: {} issues ({summary})", args.out.display(), report.issues.len()),
    );
    out.warnings = warnings;
    Ok(out)
}

pub fn evaluate_cmd(
    report: &Path,
    gt: &Path,
    rubrics: Option<&Path>,
    tolerance: f64,
    include_dismissed: bool,
) -> Result<Output, CliError> {
    let opts = match_options(tolerance, include_dismissed);
    let report = load_report(report)?;
    let gt = load_gt(gt, &load_rubric_file(rubrics)?)?;
    let m = match_issues(&report.issues, &gt, &opts).map_err(|e| CliError::validation(e.to_string()))?;
    let metrics = compute_metrics(&m);
    let json = serde_json::to_value(metrics).map_err(|e| CliError::internal(e.to_string()))?;
    Ok(Output::new(
        json,
        format!("tp {}  fp {}  fn {}  {}", metrics.tp, metrics.fp, metrics.fn_, rates_text(&mean_of(&metrics))),
    ))
}

pub fn consistency_cmd(
    reports: &[PathBuf],
    gt: &Path,
    rubrics: Option<&Path>,
    tolerance: f64,
    include_dismissed: bool,
) -> Result<Output, CliError> {
    if reports.is_empty() {
        return Err(CliError::validation("consistency needs at least one report"));
    }
    let opts = match_options(tolerance, include_dismissed);
    let gt = load_gt(gt, &load_rubric_file(rubrics)?)?;
    let mut scans = Vec::with_capacity(reports.len());
    for p in reports {
        scans.push(ScanIssues {
            scan_id: p.display().to_string(),
            issues: load_report(p)?.issues,
        });
    }
    let summary = summarize_space(&scans, &gt, &opts).map_err(|e| CliError::validation(e.to_string()))?;
    let mut text = String::new();
    for s in &summary.scans {
        text.push_str(&format!("{}: {}\n", s.scan_id, rates_text(&mean_of(&s.metrics))));
    }
    text.push_str(&format!("average: {}", rates_text(&summary.average)));
    if let Some(a) = summary.alpha {
        text.push_str(&format!("\nalpha: {a:.2}"));
    }
    let warnings = summary.warnings.clone();
    let json = serde_json::to_value(&summary).map_err(|e| CliError::internal(e.to_string()))?;
    Ok(Output {
        json,
        text,
        warnings,
    })
}

/// Recomputes averages from the bundled published per-scan rows.
pub fn consistency_published() -> Result<Output, CliError> {
    let p = PublishedResults::load();
    let mut spaces = Vec::new();
    let mut text = String::new();
    for s in &p.spaces {
        let avg = MeanMetrics::of(s.scans.iter().map(MeanMetrics::rates))
            .ok_or_else(|| CliError::internal(format!("space {} has no scans", s.id)))?;
        text.push_str(&format!("{}: {}  alpha {:.2}\n", s.id, rates_text(&avg), s.alpha));
        spaces.push(json!({
            "id": s.id,
            "scans": s.scans.len(),
            "average": avg,
            "printed_average": s.average,
            "printed_alpha": s.alpha,
        }));
    }
    let grand = p.grand_average();
    text.push_str(&format!("grand average: {}", rates_text(&grand)));
    Ok(Output::new(
        json!({"spaces": spaces, "grand_average": grand, "printed_average": p.average}),
        text,
    ))
}

pub fn simulate_cmd(scene_spec: &Path, trajectory: Option<&Path>, rubrics: Option<&Path>, out_dir: &Path) -> Result<Output, CliError> {
    let spec: SceneSpec = read_json(scene_spec)?;
    let traj: TrajectorySpec = match trajectory {
        Some(p) => read_json(p)?,
        None => TrajectorySpec::default(),
    };
    let rubrics = load_rubric_file(rubrics)?;
    let g = generate_scene(&spec, &rubrics).map_err(|e| CliError::validation(e.to_string()).in_file(scene_spec))?;
    let stream = generate_stream(&g.scene, &traj).map_err(|e| CliError::validation(e.to_string()))?;
    check_scene(&g.scene)?;

    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let scene_path = out_dir.join("scene.json");
    let gt_path = out_dir.join("gt.json");
    let stream_path = out_dir.join("stream.jsonl");
    let mut gt_text = serde_json::to_string_pretty(&g.ground_truth).map_err(|e| CliError::internal(e.to_string()))?;
    gt_text.push('\n');
    write_atomic(&scene_path, g.scene.to_json_pretty().as_bytes())?;
    write_atomic(&gt_path, gt_text.as_bytes())?;
    write_atomic(&stream_path, write_stream(&stream.events).as_bytes())?;

    Ok(Output::new(
        json!({
            "scene": scene_path,
            "gt": gt_path,
            "stream": stream_path,
            "objects": g.scene.objects.len(),
            "gt_issues": g.ground_truth.len(),
            "frames": stream.frames,
            "detections": stream.events.len(),
            "duration": stream.duration,
        }),
        format!(
            "wrote {}: {} objects, {} ground-truth issues, {} detections over {} frames",
            out_dir.display(),
            g.scene.objects.len(),
            g.ground_truth.len(),
            stream.events.len(),
            stream.frames
        ),
    ))
}

fn check_scene(scene: &ParametricScene) -> Result<(), CliError> {
    let back = load_scene(scene.to_json_pretty().as_bytes()).map_err(|e| CliError::internal(e.to_string()))?;
    if &back != scene {
        return Err(CliError::internal("generated scene does not survive a JSON round trip"));
    }
    Ok(())
}

/// Counts for the review summary: totals by category and by status, with
/// every key present.
pub fn summary(report: &ScanReport) -> Value {
    let mut by_status: BTreeMap<&str, usize> = [("active", 0), ("confirmed", 0), ("dismissed", 0)].into_iter().collect();
    for i in &report.issues {
        *by_status.entry(status_name(i.status)).or_default() += 1;
    }
    json!({
        "total": report.issues.len(),
        "by_category": count_by_category(report),
        "by_status": by_status,
    })
}

pub fn status_name(s: IssueStatus) -> &'static str {
    match s {
        IssueStatus::Active => "active",
        IssueStatus::Confirmed => "confirmed",
        IssueStatus::Dismissed => "dismissed",
    }
}
