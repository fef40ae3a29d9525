//! Simulate, fuse, audit and score.

mod common;

use common::{all_planted, spec};
use room_audit_core::evaluation::{compute_metrics, match_issues, GroundTruthIssue, MatchOptions, Metrics};
use room_audit_core::report::{audit, AuditOptions};
use room_audit_core::rubric::{Issue, RubricSet};
use room_audit_core::simulator::{generate_scene, generate_stream, GeneratedScene, NoiseSpec, TrajectorySpec};

fn golden(seed: u64) -> GeneratedScene {
    let set = RubricSet::default_set();
    generate_scene(&spec(seed, 3, 65.0, all_planted(&set), 0.0), &set).unwrap()
}

fn scan(g: &GeneratedScene, traj: &TrajectorySpec) -> Vec<Issue> {
    let stream = generate_stream(&g.scene, traj).unwrap();
    audit(&g.scene, Some(&stream.events), &RubricSet::default_set(), &AuditOptions::default()).issues
}

fn is_micro_rubric(id: &str) -> bool {
    RubricSet::default_set().get(id).is_some_and(|r| r.target.is_micro())
}

/// Recall over ground-truth issues whose rule concerns a detector class.
fn micro_recall(issues: &[Issue], gt: &[GroundTruthIssue]) -> f64 {
    let gt: Vec<GroundTruthIssue> = gt.iter().filter(|g| is_micro_rubric(&g.rubric_id)).cloned().collect();
    let reported: Vec<Issue> = issues.iter().filter(|i| is_micro_rubric(&i.rubric_id)).cloned().collect();
    compute_metrics(&match_issues(&reported, &gt, &MatchOptions::default()).unwrap()).recall
}

fn score(issues: &[Issue], gt: &[GroundTruthIssue]) -> Metrics {
    compute_metrics(&match_issues(issues, gt, &MatchOptions::default()).unwrap())
}

#[test]
fn noiseless_scan_recovers_ground_truth() {
    let traj = TrajectorySpec {
        noise: NoiseSpec::none(),
        ..TrajectorySpec::default()
    };
    for seed in 0..5 {
        let g = golden(seed);
        let m = score(&scan(&g, &traj), &g.ground_truth);
        assert_eq!((m.precision, m.recall), (1.0, 1.0), "scene seed {seed}: {m:?}");
    }
}

#[test]
fn default_noise_recall_over_ten_seeds() {
    let g = golden(0);
    let recalls: Vec<f64> = (0..10)
        .map(|seed| {
            let traj = TrajectorySpec {
                seed,
                ..TrajectorySpec::default()
            };
            micro_recall(&scan(&g, &traj), &g.ground_truth)
        })
        .collect();
    let mean = recalls.iter().sum::<f64>() / recalls.len() as f64;
    println!("micro-object recall under default noise: {mean:.3} ({recalls:?})");
    assert!(mean >= 0.85, "mean recall {mean}");
}

#[test]
fn recall_does_not_rise_with_miss_rate() {
    let g = golden(1);
    let rates = [0.0, 0.5, 0.8, 0.9, 0.95, 0.98];
    let means: Vec<f64> = rates
        .iter()
        .map(|&miss_rate| {
            let total: f64 = (0..20)
                .map(|seed| {
                    let traj = TrajectorySpec {
                        seed,
                        noise: NoiseSpec {
                            miss_rate,
                            ..NoiseSpec::default()
                        },
                        ..TrajectorySpec::default()
                    };
                    micro_recall(&scan(&g, &traj), &g.ground_truth)
                })
                .sum();
            total / 20.0
        })
        .collect();
    println!("mean recall by miss rate {rates:?}: {means:?}");
    for w in means.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{means:?}");
    }
    assert!(means.last().unwrap() < means.first().unwrap());
}

#[test]
fn audit_is_reproducible() {
    let g = golden(2);
    let stream = generate_stream(&g.scene, &TrajectorySpec::default()).unwrap();
    let set = RubricSet::default_set();
    let a = audit(&g.scene, Some(&stream.events), &set, &AuditOptions::default());
    let b = audit(&g.scene, Some(&stream.events), &set, &AuditOptions::default());
    assert_eq!(a.to_json(), b.to_json());
    // The report only sees detections, so it spans first to last detection.
    let span = a.timings.scan_seconds.unwrap();
    assert!(span > 0.5 * stream.duration && span <= stream.duration, "{span} vs {}", stream.duration);
    assert!(a.fused_objects.iter().all(|o| o.confidence.is_some()));
}

#[test]
fn scene_only_audit_uses_annotations() {
    let g = golden(3);
    let r = audit(&g.scene, None, &RubricSet::default_set(), &AuditOptions::default());
    assert_eq!(r.issues.len(), 20);
    assert!(r.fused_objects.is_empty());
    assert_eq!(r.timings.scan_seconds, None);
}
