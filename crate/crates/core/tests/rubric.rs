use std::collections::BTreeSet;
use std::time::Instant;

mod common;

use common::{all_planted, random_spec, spec};
use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use room_audit_core::evaluation::{match_issues, MatchOptions};
use room_audit_core::geometry::Vec3;
use room_audit_core::rubric::{
    evaluate, oracle, select_active, Anchor, CheckKind, Community, Comparison, Issue, Rubric, RubricSet,
};
use room_audit_core::scene::{Category, ParametricScene, Provenance, SceneObject};
use room_audit_core::simulator::generate_scene;

const INCH: f64 = 0.0254;

type Key = (String, Option<String>, [f64; 3]);

fn issue_keys(issues: &[Issue]) -> Vec<Key> {
    let mut v: Vec<Key> = issues
        .iter()
        .map(|i| (i.rubric_id.clone(), i.subject_ids.first().cloned(), i.anchor_point.into()))
        .collect();
    v.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)).then(a.2.partial_cmp(&b.2).unwrap()));
    v
}

fn oracle_keys(scene: &ParametricScene, rubrics: &[Rubric]) -> Vec<Key> {
    let mut v: Vec<Key> = oracle::findings(scene, rubrics)
        .into_iter()
        .map(|f| (f.rubric_id, f.subject, f.anchor_point.into()))
        .collect();
    v.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)).then(a.2.partial_cmp(&b.2).unwrap()));
    v
}

fn same_multiset(a: &[Key], b: &[Key]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.0 == y.0 && x.1 == y.1 && x.2 == y.2
        })
}

fn thresholds(c: &Comparison) -> Vec<f64> {
    match *c {
        Comparison::Between(lo, hi) => vec![lo, hi],
        Comparison::LessThan(t) | Comparison::GreaterThan(t) => vec![t],
    }
}

/// Moves some measured quantities exactly onto a threshold, or a micrometer
/// to either side of it, so both evaluators face their bounds.
fn snap_to_bounds(scene: &mut ParametricScene, rubrics: &[Rubric], rng: &mut ChaCha8Rng) {
    for obj in &mut scene.objects {
        let candidates: Vec<&Rubric> = rubrics
            .iter()
            .filter(|r| r.target == obj.category && r.check != CheckKind::Existence && r.dimension.is_some())
            .collect();
        let Some(r) = candidates.choose(rng) else { continue };
        if !rng.random_bool(0.5) {
            continue;
        }
        let t = *thresholds(r.dimension.as_ref().unwrap()).choose(rng).unwrap() * INCH;
        let target = t + [0.0, 1e-6, -1e-6][rng.random_range(0..3)];
        let hz = obj.half_extents.z;
        let z = match r.anchor {
            Anchor::Top => target - hz,
            Anchor::Bottom => target + hz,
            Anchor::Center => target,
        };
        if z - hz >= 0.0 {
            obj.center.z = z;
        }
    }
    for el in &mut scene.elements {
        if rng.random_bool(0.5) {
            el.width = [32.0 * INCH, 32.0 * INCH + 1e-6, 32.0 * INCH - 1e-6][rng.random_range(0..3)];
        }
    }
}

#[test]
fn evaluate_matches_oracle_on_500_scenes() {
    let set = RubricSet::default_set();
    let start = Instant::now();
    let mut issues_seen = 0;
    let mut scenes = 0;
    for seed in 0..600u64 {
        if scenes == 500 {
            break;
        }
        // A few dense random specs cannot be placed; they are skipped.
        let Ok(g) = generate_scene(&random_spec(10_000 + seed, &set), &set) else { continue };
        scenes += 1;
        let mut scene = g.scene;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if seed % 2 == 1 {
            snap_to_bounds(&mut scene, &set.rubrics, &mut rng);
        }
        let communities: BTreeSet<Community> = Community::ALL.into_iter().filter(|_| rng.random_bool(0.3)).collect();
        let active = select_active(&set, &communities);
        let got = issue_keys(&evaluate(&scene, &active));
        let want = oracle_keys(&scene, &active);
        assert!(same_multiset(&got, &want), "seed {seed}:\n engine {got:?}\n oracle {want:?}");
        issues_seen += got.len();
    }
    assert_eq!(scenes, 500);
    assert!(issues_seen > 1000);
    assert!(start.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn twenty_planted_violations_give_twenty_anchored_issues() {
    let set = RubricSet::default_set();
    for seed in 0..5 {
        let g = generate_scene(&spec(seed, 3, 65.0, all_planted(&set), 0.0), &set).unwrap();
        let issues = evaluate(&g.scene, &set.rubrics);
        assert_eq!(issues.len(), 20);
        let ids: BTreeSet<&str> = issues.iter().map(|i| i.rubric_id.as_str()).collect();
        assert_eq!(ids.len(), 20);
        let m = match_issues(&issues, &g.ground_truth, &MatchOptions { tolerance: 0.1, include_dismissed: false }).unwrap();
        assert_eq!(m.tp, 20);
    }
}

#[test]
fn evaluation_ignores_object_order() {
    let set = RubricSet::default_set();
    for seed in 0..50 {
        let mut scene = generate_scene(&random_spec(seed, &set), &set).unwrap().scene;
        let before = serde_json::to_string(&evaluate(&scene, &set.rubrics)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        scene.objects.shuffle(&mut rng);
        scene.elements.shuffle(&mut rng);
        let after = serde_json::to_string(&evaluate(&scene, &set.rubrics)).unwrap();
        assert_eq!(before, after);
    }
}

const RISKY: [Category; 4] = [Category::Rug, Category::Scissors, Category::Knife, Category::Medication];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn community_filter_is_sound(seed in 0u64..200, mask in 0u8..16) {
        let set = RubricSet::default_set();
        let scene = generate_scene(&random_spec(seed, &set), &set).unwrap().scene;
        let selected: BTreeSet<Community> = Community::ALL
            .into_iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, c)| c)
            .collect();
        let active = select_active(&set, &selected);
        for issue in evaluate(&scene, &active) {
            let rubric = set.get(&issue.rubric_id).unwrap();
            prop_assert!(selected.is_empty() || !rubric.community.is_disjoint(&selected));
        }
        if selected.is_empty() {
            prop_assert_eq!(active.len(), set.rubrics.len());
        }
    }

    #[test]
    fn another_risky_item_adds_exactly_one_issue(
        seed in 0u64..200,
        which in 0usize..4,
        x in 0.5f64..3.0,
        y in 0.5f64..3.0,
    ) {
        let set = RubricSet::default_set();
        let mut scene = generate_scene(&random_spec(seed, &set), &set).unwrap().scene;
        let before = evaluate(&scene, &set.rubrics);
        let category = RISKY[which];
        scene.objects.push(SceneObject {
            id: "zz-extra".into(),
            category,
            center: Vec3::new(x, y, 0.05),
            half_extents: Vec3::new(0.05, 0.05, 0.05),
            yaw: 0.0,
            provenance: Provenance::GroundTruth,
            confidence: None,
        });
        let after = evaluate(&scene, &set.rubrics);
        prop_assert_eq!(after.len(), before.len() + 1);
        let added: Vec<&Issue> = after.iter().filter(|i| !before.contains(i)).collect();
        prop_assert_eq!(added.len(), 1);
        prop_assert_eq!(&added[0].subject_ids, &vec!["zz-extra".to_string()]);
        for issue in &before {
            prop_assert!(after.contains(issue));
        }
    }
}
