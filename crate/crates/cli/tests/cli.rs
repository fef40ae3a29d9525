use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use room_audit_core::report::ScanReport;
use room_audit_core::rubric::RubricSet;
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn golden(name: &str) -> PathBuf {
    fixtures().join("golden").join(name)
}

fn bin<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_room-audit")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn load(path: &Path) -> ScanReport {
    ScanReport::from_json(&fs::read(path).unwrap()).unwrap()
}

fn write_default_rubrics(dir: &Path) -> PathBuf {
    let p = dir.join("rubrics.json");
    fs::write(&p, RubricSet::default_source()).unwrap();
    p
}

#[test]
fn validate_default_rubrics() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_default_rubrics(dir.path());
    let o = bin([Path::new("validate-rubrics"), &p]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "20 rubrics OK");

    let o = bin([Path::new("--format"), Path::new("json"), Path::new("validate-rubrics"), &p]);
    let v = json_out(&o);
    assert_eq!(v["count"], 20);
    assert_eq!(v["by_category"]["ObjectPosition"], 8);
}

#[test]
fn duplicate_rubric_id_fails_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    // The same rubric under two spellings of the object key lowercases to one id.
    let mut doc: serde_json::Map<String, Value> = serde_json::from_str(RubricSet::default_source()).unwrap();
    let bed = doc["Bed"].clone();
    doc.insert("BED".into(), bed);
    let p = dir.path().join("dup.json");
    fs::write(&p, serde_json::to_string(&doc).unwrap()).unwrap();

    let o = bin([Path::new("validate-rubrics"), &p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bed.dim_height"), "{}", stderr(&o));

    let o = bin([Path::new("--format=json"), Path::new("validate-rubrics"), &p]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "validation");
    assert_eq!(err["error"]["rubric_id"], "bed.dim_height");
}

#[test]
fn empty_rubric_file_is_vacuous_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.json");
    fs::write(&p, "{}").unwrap();
    let o = bin([Path::new("validate-rubrics"), &p]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0 rubrics");
    assert!(stderr(&o).starts_with("warning:"));
}

#[test]
fn exit_codes() {
    let o = bin(["validate-rubrics", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
    let o = bin(["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("validate-rubrics"));
    let o = bin(["--version"]);
    assert_eq!(o.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = dir.path().join("r.json");
    let o = bin([Path::new("audit"), Path::new("--scene"), &bad, Path::new("--out"), &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists(), "no partial report on failure");
}

#[test]
fn audit_golden_scene_with_stream() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = bin([
        Path::new("audit"),
        Path::new("--scene"),
        &golden("scene.json"),
        Path::new("--stream"),
        &golden("stream.jsonl"),
        Path::new("--out"),
        &out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = load(&out);
    assert_eq!(r.issues.len(), 20);
    assert!(!r.fused_objects.is_empty());
    assert!(r.generated_at.is_none());
    // Identical inputs give byte-identical reports, matching the checked-in fixture.
    assert_eq!(fs::read(&out).unwrap(), fs::read(golden("report.json")).unwrap());
}

#[test]
fn audit_options() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = bin([
        Path::new("audit"),
        Path::new("--scene"),
        &golden("scene.json"),
        Path::new("--exclude-rubric"),
        Path::new("knob.pos_height"),
        Path::new("--exclude-rubric"),
        Path::new("knob.height"),
        Path::new("--out"),
        &out,
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("knob.height"), "unknown exclusions are warned about");
    let r = load(&out);
    assert_eq!(r.issues.len(), 19);
    assert!(r.issues.iter().all(|i| i.rubric_id != "knob.pos_height"));
    assert!(r.fused_objects.is_empty());

    let o = bin([
        Path::new("audit"),
        Path::new("--scene"),
        &golden("scene.json"),
        Path::new("--community"),
        Path::new("children"),
        Path::new("--timestamps"),
        Path::new("--out"),
        &out,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = load(&out);
    assert!(r.generated_at.is_some());
    let set = RubricSet::default_set();
    assert!(!r.issues.is_empty());
    for i in &r.issues {
        assert!(set.get(&i.rubric_id).unwrap().community.contains(&room_audit_core::rubric::Community::Children));
    }

    let o = bin([
        Path::new("audit"),
        Path::new("--scene"),
        &golden("scene.json"),
        Path::new("--community"),
        Path::new("astronauts"),
        Path::new("--out"),
        &out,
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn evaluate_counter_row_fixture() {
    let dir = fixtures().join("counter");
    let o = bin([
        Path::new("--format"),
        Path::new("json"),
        Path::new("evaluate"),
        Path::new("--report"),
        &dir.join("report.json"),
        Path::new("--gt"),
        &dir.join("gt.json"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json_out(&o);
    assert_eq!((v["tp"].as_u64(), v["fp"].as_u64(), v["fn"].as_u64()), (Some(3), Some(1), Some(39)));
    let r2 = |k: &str| (v[k].as_f64().unwrap() * 100.0).round() / 100.0;
    assert_eq!([r2("precision"), r2("recall"), r2("f1"), r2("accuracy")], [0.75, 0.07, 0.13, 0.07]);

    let o = bin([
        Path::new("evaluate"),
        Path::new("--report"),
        &dir.join("report.json"),
        Path::new("--gt"),
        &dir.join("gt.json"),
    ]);
    assert_eq!(stdout(&o).trim(), "tp 3  fp 1  fn 39  P 0.75  R 0.07  F1 0.13  Acc 0.07");
}

#[test]
fn evaluate_trivial_cases() {
    let o = bin([
        Path::new("--format=json"),
        Path::new("evaluate"),
        Path::new("--report"),
        &golden("report.json"),
        Path::new("--gt"),
        &golden("gt.json"),
    ]);
    let v = json_out(&o);
    for k in ["precision", "recall", "f1", "accuracy"] {
        assert_eq!(v[k], 1.0);
    }

    let dir = tempfile::tempdir().unwrap();
    let gt: Vec<Value> = serde_json::from_slice(&fs::read(golden("gt.json")).unwrap()).unwrap();
    let seven = dir.path().join("seven.json");
    fs::write(&seven, serde_json::to_string(&gt[..7]).unwrap()).unwrap();
    let mut empty = load(&golden("report.json"));
    empty.issues.clear();
    let empty_path = dir.path().join("empty.json");
    fs::write(&empty_path, empty.to_json()).unwrap();
    let o = bin([
        Path::new("--format=json"),
        Path::new("evaluate"),
        Path::new("--report"),
        &empty_path,
        Path::new("--gt"),
        &seven,
    ]);
    let v = json_out(&o);
    assert_eq!(v["recall"], 0.0);
    assert_eq!(v["fn"], 7);

    let o = bin([
        Path::new("evaluate"),
        Path::new("--report"),
        &golden("report.json"),
        Path::new("--gt"),
        &golden("gt.json"),
        Path::new("--tolerance"),
        Path::new("-1"),
    ]);
    assert_eq!(o.status.code(), Some(1));

    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"[{"rubric_id": "piano.dim_height", "position": [0, 0, 0]}]"#).unwrap();
    let o = bin([
        Path::new("evaluate"),
        Path::new("--report"),
        &golden("report.json"),
        Path::new("--gt"),
        &unknown,
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("piano.dim_height"));
}

#[test]
fn consistency_commands() {
    let r = golden("report.json");
    let gt = golden("gt.json");
    let o = bin([Path::new("--format=json"), Path::new("consistency"), &r, &r, &r, Path::new("--gt"), &gt]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json_out(&o);
    assert_eq!(v["alpha"], 1.0);
    assert_eq!(v["scans"].as_array().unwrap().len(), 3);

    let o = bin([Path::new("consistency"), &r, &r, Path::new("--gt"), &gt]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("2 raters"));

    let o = bin(["--format", "json", "consistency", "--published"]);
    let v = json_out(&o);
    let g = &v["grand_average"];
    let got: Vec<f64> = ["precision", "recall", "f1", "accuracy"]
        .iter()
        .map(|k| (g[k].as_f64().unwrap() * 100.0).round() / 100.0)
        .collect();
    assert_eq!(got, [0.86, 0.83, 0.84, 0.72]);
    assert_eq!(v["spaces"].as_array().unwrap().len(), 10);

    let o = bin(["consistency"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_reproduces_golden_fixtures() {
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let o = bin([
            Path::new("simulate"),
            Path::new("--scene-spec"),
            &golden("scene_spec.json"),
            Path::new("--trajectory"),
            &golden("trajectory.json"),
            Path::new("--out-dir"),
            dir.path(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        for f in ["scene.json", "gt.json", "stream.jsonl"] {
            assert!(fs::read(dir.path().join(f)).unwrap() == fs::read(golden(f)).unwrap(), "{f} differs from the fixture");
        }
    }
    let gt: Vec<Value> = serde_json::from_slice(&fs::read(golden("gt.json")).unwrap()).unwrap();
    assert_eq!(gt.len(), 20);
}

#[test]
fn simulate_rejects_infeasible_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"seed": 1, "room_count": 1, "size_sqm": 10, "planted": [{"rubric_id": "table.dim_height", "count": 40}]}"#,
    )
    .unwrap();
    let o = bin([Path::new("simulate"), Path::new("--scene-spec"), &spec, Path::new("--out-dir"), &dir.path().join("out")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("infeasible") || stderr(&o).contains("Infeasible"), "{}", stderr(&o));
}

#[test]
fn in_process_runner_matches_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = room_audit::run(["room-audit", "consistency", "--published"], &mut out, &mut err);
    assert_eq!(code, 0);
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text, stdout(&bin(["consistency", "--published"])));
    assert!(text.contains("grand average: P 0.86  R 0.83  F1 0.84  Acc 0.72"));
}
