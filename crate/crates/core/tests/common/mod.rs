#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use room_audit_core::rubric::RubricSet;
use room_audit_core::simulator::{Planting, SceneSpec};

pub fn spec(seed: u64, rooms: usize, size: f64, planted: Vec<Planting>, clutter: f64) -> SceneSpec {
    SceneSpec {
        seed,
        room_count: rooms,
        size_sqm: size,
        planted,
        clutter,
        id: None,
        meta: Default::default(),
    }
}

pub fn all_planted(set: &RubricSet) -> Vec<Planting> {
    set.rubrics
        .iter()
        .map(|r| Planting {
            rubric_id: r.id.clone(),
            count: 1,
        })
        .collect()
}

/// Random spec drawn from `seed`: 1 to 4 rooms, up to seven planted rubrics
/// per room (a quarter of them twice), light clutter.
pub fn random_spec(seed: u64, set: &RubricSet) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rooms = rng.random_range(1..=4);
    let size = rooms as f64 * rng.random_range(18.0..30.0);
    let mut ids: Vec<&str> = set.rubrics.iter().map(|r| r.id.as_str()).collect();
    ids.shuffle(&mut rng);
    let k = rng.random_range(0..=ids.len().min(7 * rooms));
    let planted = ids[..k]
        .iter()
        .map(|id| Planting {
            rubric_id: id.to_string(),
            count: if rng.random_bool(0.25) { 2 } else { 1 },
        })
        .collect();
    spec(seed, rooms, size, planted, rng.random_range(0.0..0.15))
}
