use serde::{Deserialize, Serialize};

use super::{ElementKind, ParametricScene, SceneObject, Wall};
use crate::geometry::Vec3;

/// Rays never report hits farther than this, in meters.
pub const MAX_RAY_RANGE: f64 = 50.0;

const PARALLEL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum HitEntity {
    Floor,
    Wall(String),
    Object(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayHit {
    pub point: Vec3,
    pub entity: HitEntity,
    pub range: f64,
}

/// Nearest surface the ray enters: the floor plane, a wall rectangle (minus
/// its `opening` cut-outs) or an object box. Surfaces the origin already sits
/// inside of are not reported.
pub fn ray_intersect(scene: &ParametricScene, origin: Vec3, dir: Vec3) -> Option<RayHit> {
    let mut best: Option<(f64, HitEntity)> = None;
    let mut consider = |t: f64, entity: HitEntity| {
        if (0.0..=MAX_RAY_RANGE).contains(&t) && best.as_ref().is_none_or(|(bt, _)| t < *bt) {
            best = Some((t, entity));
        }
    };

    if origin.z > 0.0 && dir.z < -PARALLEL_EPS {
        consider(-origin.z / dir.z, HitEntity::Floor);
    }
    for wall in &scene.walls {
        if let Some(t) = intersect_wall(scene, wall, origin, dir) {
            consider(t, HitEntity::Wall(wall.id.clone()));
        }
    }
    for obj in &scene.objects {
        if let Some(t) = intersect_box(obj, origin, dir) {
            consider(t, HitEntity::Object(obj.id.clone()));
        }
    }

    best.map(|(t, entity)| {
        let mut point = origin + dir * t;
        if entity == HitEntity::Floor {
            point.z = 0.0;
        }
        RayHit {
            point,
            entity,
            range: t,
        }
    })
}

fn intersect_wall(scene: &ParametricScene, wall: &Wall, origin: Vec3, dir: Vec3) -> Option<f64> {
    let along = wall.direction();
    let normal = Vec3::new(-along.y, along.x, 0.0);
    let denom = normal.dot(dir);
    if denom.abs() < PARALLEL_EPS {
        return None;
    }
    let base = wall.start.lift(0.0);
    let t = normal.dot(base - origin) / denom;
    if t < 0.0 {
        return None;
    }
    let p = origin + dir * t;
    let s = (p - base).dot(along);
    if s < 0.0 || s > wall.length() || p.z < 0.0 || p.z > wall.height {
        return None;
    }
    let in_hole = scene.elements.iter().any(|el| {
        el.kind == ElementKind::Opening
            && el.wall_id == wall.id
            && s > el.offset
            && s < el.offset + el.width
            && p.z > el.sill
            && p.z < el.sill + el.height
    });
    (!in_hole).then_some(t)
}

/// Slab test in the box frame; returns the entry distance.
fn intersect_box(obj: &SceneObject, origin: Vec3, dir: Vec3) -> Option<f64> {
    let o = obj.to_local(origin);
    let d = dir.rotate_z(-obj.yaw);
    let h = obj.half_extents;
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for (o, d, h) in [(o.x, d.x, h.x), (o.y, d.y, h.y), (o.z, d.z, h.z)] {
        if d.abs() < PARALLEL_EPS {
            if o.abs() > h {
                return None;
            }
            continue;
        }
        let (a, b) = ((-h - o) / d, (h - o) / d);
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        t_near = t_near.max(a);
        t_far = t_far.min(b);
        if t_near > t_far {
            return None;
        }
    }
    // Origin inside or box behind the ray.
    (t_near >= 0.0).then_some(t_near)
}
