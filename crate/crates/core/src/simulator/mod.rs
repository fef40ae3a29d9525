//! Seeded synthetic homes with planted rubric violations, plus synthetic
//! camera scans over them.
//!
//! Rooms are laid out in a row and share partition walls with a door in the
//! middle. Every item sits in a slot along a wall. Planted items are sized
//! from the rubric thresholds so that they break exactly the intended rules,
//! and the ground truth is re-derived afterwards with the brute-force oracle.

mod stream;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use stream::{
    camera_frames, generate_stream, ConfidenceModel, GeneratedStream, NoiseSpec, PathSpec, TrajectorySpec,
};

use crate::evaluation::GroundTruthIssue;
use crate::geometry::{Point2, Vec3};
use crate::rubric::{oracle, Anchor, CheckKind, Comparison, Rubric, RubricSet};
use crate::scene::{Category, ElementKind, ParametricScene, Provenance, SceneObject, Wall, WallElement};
use crate::units::{inches_to_meters, meters_to_inches};

const WALL_HEIGHT: f64 = 2.5;
const SLOT_LENGTH: f64 = 1.2;
const CORNER_MARGIN: f64 = 0.3;
const DOOR_WIDTH: f64 = 0.9144;
const DOOR_HEIGHT: f64 = 2.03;
const MIN_ROOM_AREA: f64 = 4.0;
const MAX_ATTEMPTS: usize = 64;
/// Meta key holding `[x0, y0, x1, y1]` for each generated room.
pub const ROOM_BOUNDS_KEY: &str = "room_bounds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Planting {
    pub rubric_id: String,
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

fn default_rooms() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub seed: u64,
    #[serde(default = "default_rooms")]
    pub room_count: usize,
    pub size_sqm: f64,
    #[serde(default)]
    pub planted: Vec<Planting>,
    /// Compliant distractor objects per square meter.
    #[serde(default)]
    pub clutter: f64,
    #[serde(default)]
    pub id: Option<String>,
    /// Copied into the scene's meta block.
    #[serde(default)]
    pub meta: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("planted rubric `{0}` is not in the rubric set")]
    UnknownRubric(String),
    #[error("infeasible spec: {0}")]
    Infeasible(String),
    #[error("path point {index} ({x}, {y}) lies outside the scene")]
    PathOutOfBounds { index: usize, x: f64, y: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScene {
    pub scene: ParametricScene,
    pub ground_truth: Vec<GroundTruthIssue>,
}

/// Ground truth as the brute-force oracle sees it.
pub fn ground_truth_of(scene: &ParametricScene, rubrics: &[Rubric]) -> Vec<GroundTruthIssue> {
    oracle::findings(scene, rubrics)
        .into_iter()
        .map(|f| GroundTruthIssue {
            rubric_id: f.rubric_id,
            position: f.anchor_point,
            label: f.subject.unwrap_or_else(|| "scene".to_string()),
        })
        .collect()
}

/// Footprint along the wall, depth away from it, default height, default
/// bottom height and whether the item is a detector class.
struct Template {
    along: f64,
    depth: f64,
    height: f64,
    bottom: f64,
}

fn template(c: Category) -> Option<Template> {
    let t = |along, depth, height, bottom| Some(Template { along, depth, height, bottom });
    match c {
        Category::Bathtub => t(1.1, 0.7, 0.55, 0.0),
        Category::Bed => t(1.1, 0.9, 0.55, 0.0),
        Category::Chair => t(0.5, 0.5, 0.9, 0.0),
        Category::Sink => t(0.55, 0.45, 0.85, 0.0),
        Category::Sofa => t(1.1, 0.85, 0.8, 0.0),
        Category::Storage => t(1.0, 0.55, 0.9, 0.0),
        Category::Table => t(1.0, 0.7, 0.76, 0.0),
        Category::Television => t(1.0, 0.1, 0.6, 0.9),
        Category::Toilet => t(0.4, 0.65, 0.75, 0.0),
        Category::DoorHandle => t(0.12, 0.06, 0.05, 0.975),
        Category::ElectricSocket => t(0.07, 0.012, 0.11, 0.35),
        Category::GrabBar => t(0.6, 0.08, 0.04, 0.85),
        Category::Knife => t(0.25, 0.03, 0.02, 0.0),
        Category::LightSwitch => t(0.08, 0.012, 0.12, 1.04),
        Category::Medication => t(0.06, 0.06, 0.08, 0.0),
        Category::Rug => t(0.9, 0.6, 0.01, 0.0),
        Category::Scissors => t(0.2, 0.08, 0.02, 0.0),
        Category::SmokeAlarm => t(0.14, 0.14, 0.05, 2.25),
        _ => None,
    }
}

const CLUTTER: [Category; 11] = [
    Category::Bed,
    Category::Chair,
    Category::Sofa,
    Category::Storage,
    Category::Table,
    Category::Television,
    Category::Sink,
    Category::LightSwitch,
    Category::ElectricSocket,
    Category::DoorHandle,
    Category::SmokeAlarm,
];

fn element_default_width(kind: ElementKind) -> f64 {
    match kind {
        ElementKind::Door | ElementKind::Opening => DOOR_WIDTH,
        ElementKind::Window => 1.0,
    }
}

/// Candidate inch values that break `c`.
fn violating_values(c: &Comparison) -> Vec<f64> {
    match *c {
        Comparison::Between(lo, hi) => vec![lo - 4.0, hi + 4.0, lo - 2.0, hi + 2.0, hi + 10.0, lo * 0.5],
        Comparison::LessThan(t) => vec![t + 4.0, t + 2.0, t + 10.0],
        Comparison::GreaterThan(t) => vec![t - 4.0, t - 2.0, t * 0.75],
    }
    .into_iter()
    .filter(|v| *v > 0.0)
    .collect()
}

/// Candidate inch values that satisfy `c`.
fn compliant_values(c: &Comparison) -> Vec<f64> {
    match *c {
        Comparison::Between(lo, hi) => vec![(lo + hi) / 2.0],
        Comparison::LessThan(t) => vec![t - 4.0, t / 2.0],
        Comparison::GreaterThan(t) => vec![t + 4.0, t * 1.25],
    }
    .into_iter()
    .filter(|v| *v > 0.0)
    .collect()
}

fn violates(c: &Comparison, meters: f64) -> bool {
    c.assess(meters_to_inches(meters)) != crate::rubric::Assessment::Compliant
}

fn is_measure(r: &Rubric) -> bool {
    matches!(r.check, CheckKind::Dimension | CheckKind::Position) && r.dimension.is_some()
}

/// A box that breaks exactly the measurement rubrics in `want` among those
/// targeting `c`.
fn find_box(c: Category, want: &BTreeSet<String>, rubrics: &[Rubric]) -> Option<(f64, f64)> {
    let tpl = template(c)?;
    let relevant: Vec<&Rubric> = rubrics.iter().filter(|r| r.target == c && is_measure(r)).collect();
    let mut candidates: Vec<(Anchor, f64)> = Vec::new();
    for r in &relevant {
        let cmp = r.dimension.as_ref().expect("measure rubric");
        if want.contains(&r.id) {
            candidates.extend(violating_values(cmp).into_iter().map(|v| (r.anchor, inches_to_meters(v))));
        }
    }
    let default = (Anchor::Bottom, tpl.bottom);
    if want.is_empty() {
        candidates.insert(0, default);
    } else {
        candidates.push(default);
    }
    for r in &relevant {
        let cmp = r.dimension.as_ref().expect("measure rubric");
        candidates.extend(compliant_values(cmp).into_iter().map(|v| (r.anchor, inches_to_meters(v))));
    }

    let heights = [tpl.height, 0.08, 0.03, 0.3, 0.6, 0.9];
    for (anchor, v) in candidates {
        let mut boxes: Vec<(f64, f64)> = Vec::new();
        match anchor {
            Anchor::Top => {
                if tpl.bottom == 0.0 {
                    boxes.push((0.0, v));
                }
                boxes.extend(heights.iter().map(|h| (v - h, v)));
            }
            Anchor::Bottom => boxes.extend(heights.iter().map(|h| (v, v + h))),
            Anchor::Center => boxes.extend(heights.iter().map(|h| (v - h / 2.0, v + h / 2.0))),
        }
        for (bottom, top) in boxes {
            if bottom < 0.0 || top > WALL_HEIGHT - 0.1 || top - bottom < 0.005 {
                continue;
            }
            let ok = relevant.iter().all(|r| {
                let z = match r.anchor {
                    Anchor::Top => top,
                    Anchor::Bottom => bottom,
                    Anchor::Center => (top + bottom) / 2.0,
                };
                violates(r.dimension.as_ref().unwrap(), z) == want.contains(&r.id)
            });
            if ok {
                return Some((bottom, top));
            }
        }
    }
    None
}

fn find_width(kind: ElementKind, want: &BTreeSet<String>, rubrics: &[Rubric]) -> Option<f64> {
    let relevant: Vec<&Rubric> = rubrics.iter().filter(|r| r.target == kind.category() && is_measure(r)).collect();
    let mut candidates = vec![element_default_width(kind)];
    for r in &relevant {
        let cmp = r.dimension.as_ref().unwrap();
        if want.contains(&r.id) {
            candidates.extend(violating_values(cmp).into_iter().map(inches_to_meters));
        } else {
            candidates.extend(compliant_values(cmp).into_iter().map(inches_to_meters));
        }
    }
    if !want.is_empty() {
        candidates.rotate_left(1);
    }
    candidates.into_iter().find(|&w| {
        w > 0.2
            && w <= SLOT_LENGTH - 0.1
            && relevant.iter().all(|r| violates(r.dimension.as_ref().unwrap(), w) == want.contains(&r.id))
    })
}

#[derive(Debug, Clone)]
enum ItemKind {
    Object { category: Category, bottom: f64, top: f64 },
    Element { kind: ElementKind, width: f64 },
}

#[derive(Debug, Clone)]
struct Item {
    kind: ItemKind,
    /// Rubric ids this item is expected to trigger.
    fires: Vec<String>,
}

impl Item {
    fn along(&self) -> f64 {
        match &self.kind {
            ItemKind::Object { category, .. } => template(*category).map_or(0.5, |t| t.along),
            ItemKind::Element { width, .. } => *width,
        }
    }
}

/// Rubrics that behave identically on every scene.
fn same_rule(a: &Rubric, b: &Rubric) -> bool {
    a.target == b.target
        && a.check == b.check
        && a.anchor == b.anchor
        && a.dimension == b.dimension
        && a.relative_position == b.relative_position
        && a.existence == b.existence
        && a.dependency == b.dependency
}

fn fires_for_object(c: Category, bottom: f64, top: f64, rubrics: &[Rubric]) -> Vec<String> {
    rubrics
        .iter()
        .filter(|r| r.target == c || r.dependency == Some(c))
        .filter(|r| {
            if r.dependency == Some(c) {
                return r.existence == Some(true);
            }
            match r.check {
                CheckKind::Existence => r.existence == Some(false),
                _ => {
                    let z = match r.anchor {
                        Anchor::Top => top,
                        Anchor::Bottom => bottom,
                        Anchor::Center => (top + bottom) / 2.0,
                    };
                    r.dimension.as_ref().is_some_and(|d| violates(d, z))
                }
            }
        })
        .map(|r| r.id.clone())
        .collect()
}

fn plan_items(spec: &SceneSpec, rubrics: &[Rubric], rng: &mut ChaCha8Rng) -> Result<(Vec<Item>, Vec<String>), SimError> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for p in &spec.planted {
        if !rubrics.iter().any(|r| r.id == p.rubric_id) {
            return Err(SimError::UnknownRubric(p.rubric_id.clone()));
        }
        let e = counts.entry(p.rubric_id.clone()).or_default();
        *e = (*e).max(p.count);
    }

    // Group planted rubrics that cannot be told apart.
    let mut classes: Vec<(Vec<&Rubric>, usize)> = Vec::new();
    for (id, &n) in &counts {
        let r = rubrics.iter().find(|r| &r.id == id).unwrap();
        match classes.iter_mut().find(|(members, _)| same_rule(members[0], r)) {
            Some((members, count)) => {
                members.push(r);
                *count = (*count).max(n);
            }
            None => classes.push((vec![r], n)),
        }
    }

    let mut items = Vec::new();
    let mut scene_level = Vec::new();
    let mut suppressed: BTreeSet<Category> = BTreeSet::new();
    for (members, n) in &classes {
        let lead = members[0];
        let want: BTreeSet<String> = rubrics.iter().filter(|r| same_rule(r, lead)).map(|r| r.id.clone()).collect();
        if *n == 0 {
            continue;
        }
        match lead.check {
            CheckKind::Existence if lead.existence == Some(true) && lead.dependency.is_none() => {
                suppressed.insert(lead.target);
                scene_level.extend(want.iter().cloned());
            }
            CheckKind::Existence if lead.existence == Some(true) => {
                let host = lead.dependency.unwrap();
                let (bottom, top) = find_box(host, &BTreeSet::new(), rubrics)
                    .ok_or_else(|| SimError::Infeasible(format!("no compliant `{host}` shape for `{}`", lead.id)))?;
                for _ in 0..*n {
                    items.push(Item {
                        kind: ItemKind::Object { category: host, bottom, top },
                        fires: fires_for_object(host, bottom, top, rubrics),
                    });
                }
            }
            CheckKind::Existence => {
                let (bottom, top) = find_box(lead.target, &BTreeSet::new(), rubrics)
                    .ok_or_else(|| SimError::Infeasible(format!("cannot shape `{}`", lead.target)))?;
                for _ in 0..*n {
                    items.push(Item {
                        kind: ItemKind::Object { category: lead.target, bottom, top },
                        fires: fires_for_object(lead.target, bottom, top, rubrics),
                    });
                }
            }
            _ => {
                if let Some(kind) = ElementKind::from_category(lead.target) {
                    let width = find_width(kind, &want, rubrics)
                        .ok_or_else(|| SimError::Infeasible(format!("no width breaks only `{}`", lead.id)))?;
                    for _ in 0..*n {
                        items.push(Item {
                            kind: ItemKind::Element { kind, width },
                            fires: want.iter().cloned().collect(),
                        });
                    }
                } else {
                    let (bottom, top) = find_box(lead.target, &want, rubrics)
                        .ok_or_else(|| SimError::Infeasible(format!("no shape breaks only `{}`", lead.id)))?;
                    for _ in 0..*n {
                        items.push(Item {
                            kind: ItemKind::Object { category: lead.target, bottom, top },
                            fires: fires_for_object(lead.target, bottom, top, rubrics),
                        });
                    }
                }
            }
        }
    }

    // Presence rules that were not planted get one compliant instance.
    for r in rubrics {
        if r.check == CheckKind::Existence
            && r.existence == Some(true)
            && r.dependency.is_none()
            && !suppressed.contains(&r.target)
            && !items.iter().any(|i| matches!(i.kind, ItemKind::Object { category, .. } if category == r.target))
        {
            let (bottom, top) = find_box(r.target, &BTreeSet::new(), rubrics)
                .ok_or_else(|| SimError::Infeasible(format!("cannot shape `{}`", r.target)))?;
            items.push(Item {
                kind: ItemKind::Object { category: r.target, bottom, top },
                fires: fires_for_object(r.target, bottom, top, rubrics),
            });
        }
    }

    // Distractors: categories that can be placed without triggering anything
    // and that are not part of any proximity rule.
    let proximity: BTreeSet<Category> = rubrics
        .iter()
        .filter_map(|r| r.dependency.map(|d| [d, r.target]))
        .flatten()
        .collect();
    let pool: Vec<(Category, f64, f64)> = CLUTTER
        .iter()
        .filter(|c| !proximity.contains(c) && !suppressed.contains(c))
        .filter_map(|&c| find_box(c, &BTreeSet::new(), rubrics).map(|(b, t)| (c, b, t)))
        .filter(|&(c, b, t)| fires_for_object(c, b, t, rubrics).is_empty())
        .collect();
    let n_clutter = (spec.clutter * spec.size_sqm).round() as usize;
    if !pool.is_empty() {
        for _ in 0..n_clutter {
            let (category, bottom, top) = pool[rng.random_range(0..pool.len())];
            items.push(Item {
                kind: ItemKind::Object { category, bottom, top },
                fires: vec![],
            });
        }
    }
    Ok((items, scene_level))
}

/// A stretch of wall that can hold one item.
#[derive(Debug, Clone)]
struct Slot {
    wall: usize,
    /// Distance along the wall to the slot center.
    s: f64,
    /// +1 when the room is on the wall's left side.
    side: f64,
    exterior: bool,
}

struct Shell {
    walls: Vec<Wall>,
    elements: Vec<WallElement>,
    rooms: Vec<[f64; 4]>,
    slots: Vec<Slot>,
}

fn build_shell(room_count: usize, size_sqm: f64) -> Shell {
    let area = size_sqm / room_count as f64;
    let d = area.sqrt();
    let xs: Vec<f64> = (0..=room_count).map(|k| k as f64 * d).collect();
    let mut walls = Vec::new();
    let mut slots = Vec::new();
    let mut elements = Vec::new();
    let push_wall = |walls: &mut Vec<Wall>, start: Point2, end: Point2| {
        let id = format!("w{}", walls.len() + 1);
        walls.push(Wall { id, start, end, height: WALL_HEIGHT });
        walls.len() - 1
    };
    let mut rooms = Vec::new();
    let mut partitions = Vec::new();
    for k in 0..room_count {
        let (x0, x1) = (xs[k], xs[k + 1]);
        rooms.push([x0, 0.0, x1, d]);
        let bottom = push_wall(&mut walls, Point2::new(x0, 0.0), Point2::new(x1, 0.0));
        let top = push_wall(&mut walls, Point2::new(x1, d), Point2::new(x0, d));
        for w in [bottom, top] {
            for s in wall_slots(walls[w].length(), None) {
                slots.push(Slot { wall: w, s, side: 1.0, exterior: true });
            }
        }
        if k == 0 {
            let left = push_wall(&mut walls, Point2::new(x0, d), Point2::new(x0, 0.0));
            for s in wall_slots(d, None) {
                slots.push(Slot { wall: left, s, side: 1.0, exterior: true });
            }
        }
        if k + 1 == room_count {
            let right = push_wall(&mut walls, Point2::new(x1, 0.0), Point2::new(x1, d));
            for s in wall_slots(d, None) {
                slots.push(Slot { wall: right, s, side: 1.0, exterior: true });
            }
        } else {
            let part = push_wall(&mut walls, Point2::new(x1, 0.0), Point2::new(x1, d));
            partitions.push(part);
            let door = ((d - DOOR_WIDTH) / 2.0, DOOR_WIDTH);
            elements.push(WallElement {
                id: format!("door-p{}", k + 1),
                kind: ElementKind::Door,
                wall_id: walls[part].id.clone(),
                offset: door.0,
                width: door.1,
                sill: 0.0,
                height: DOOR_HEIGHT,
            });
            for s in wall_slots(d, Some(door)) {
                slots.push(Slot { wall: part, s, side: 1.0, exterior: false });
                slots.push(Slot { wall: part, s, side: -1.0, exterior: false });
            }
        }
    }
    Shell { walls, elements, rooms, slots }
}

/// Slot centers along a wall of length `len`, skipping a door span.
fn wall_slots(len: f64, door: Option<(f64, f64)>) -> Vec<f64> {
    let mut spans = vec![(CORNER_MARGIN, len - CORNER_MARGIN)];
    if let Some((off, w)) = door {
        spans = vec![(CORNER_MARGIN, off - 0.1), (off + w + 0.1, len - CORNER_MARGIN)];
    }
    let mut out = Vec::new();
    for (a, b) in spans {
        let n = ((b - a) / SLOT_LENGTH).floor() as usize;
        let pad = (b - a - n as f64 * SLOT_LENGTH) / 2.0;
        out.extend((0..n).map(|i| a + pad + (i as f64 + 0.5) * SLOT_LENGTH));
    }
    out
}

fn place(items: &[Item], shell: &Shell, rng: &mut ChaCha8Rng) -> Result<ParametricScene, SimError> {
    let mut exterior: Vec<&Slot> = shell.slots.iter().filter(|s| s.exterior).collect();
    let mut all: Vec<&Slot> = shell.slots.iter().collect();
    exterior.shuffle(rng);
    all.shuffle(rng);

    // Each slot has two halves; large items take both, small items one.
    let mut used: BTreeMap<(usize, u64, i8), [bool; 2]> = BTreeMap::new();
    let key = |s: &Slot| (s.wall, s.s.to_bits(), s.side as i8);
    let mut elements = shell.elements.clone();
    let mut objects = Vec::new();
    let mut per_category: BTreeMap<Category, usize> = BTreeMap::new();

    // Elements cut through the wall, so they only go on exterior walls.
    let small = |i: &Item| matches!(i.kind, ItemKind::Object { .. }) && i.along() <= SLOT_LENGTH / 2.0 - 0.1;
    let mut order: Vec<&Item> = items.iter().filter(|i| matches!(i.kind, ItemKind::Element { .. })).collect();
    order.extend(items.iter().filter(|i| matches!(i.kind, ItemKind::Object { .. }) && !small(i)));
    order.extend(items.iter().filter(|i| small(i)));
    for item in order {
        let pool = match item.kind {
            ItemKind::Element { .. } => &exterior,
            ItemKind::Object { .. } => &all,
        };
        let is_small = small(item);
        let mut chosen = None;
        for slot in pool.iter() {
            let halves = used.entry(key(slot)).or_default();
            if is_small {
                if let Some(h) = halves.iter().position(|u| !u) {
                    halves[h] = true;
                    chosen = Some((*slot, Some(h)));
                    break;
                }
            } else if halves == &[false, false] {
                *halves = [true, true];
                chosen = Some((*slot, None));
                break;
            }
        }
        let (slot, half) = chosen.ok_or_else(|| {
            SimError::Infeasible(format!("{} items do not fit in {} wall slots", items.len(), shell.slots.len()))
        })?;
        let s_along = match half {
            Some(h) => slot.s + (h as f64 - 0.5) * SLOT_LENGTH / 2.0,
            None => slot.s,
        };
        let wall = &shell.walls[slot.wall];
        match item.kind {
            ItemKind::Element { kind, width } => {
                let n = per_category.entry(kind.category()).or_default();
                *n += 1;
                let (sill, height) = match kind {
                    ElementKind::Window => (0.9, 1.2),
                    _ => (0.0, DOOR_HEIGHT),
                };
                elements.push(WallElement {
                    id: format!("{}-{}", kind.category(), n),
                    kind,
                    wall_id: wall.id.clone(),
                    offset: s_along - width / 2.0,
                    width,
                    sill,
                    height,
                });
            }
            ItemKind::Object { category, bottom, top } => {
                let tpl = template(category).expect("planned objects have templates");
                let n = per_category.entry(category).or_default();
                *n += 1;
                let along = wall.direction();
                let normal = Vec3::new(-along.y, along.x, 0.0) * slot.side;
                let room = if half.is_some() { SLOT_LENGTH / 2.0 } else { SLOT_LENGTH };
                let jitter = rng.random_range(-0.1..0.1) * (room - tpl.along).min(0.5);
                let base = wall.point_at(s_along + jitter, 0.0) + normal * (tpl.depth / 2.0 + 0.002);
                let provenance = if category.is_micro() {
                    Provenance::GroundTruth
                } else {
                    Provenance::Reconstruction
                };
                objects.push(SceneObject {
                    id: format!("{}-{}", category, n),
                    category,
                    center: Vec3::new(base.x, base.y, (bottom + top) / 2.0),
                    half_extents: Vec3::new(tpl.along / 2.0, tpl.depth / 2.0, (top - bottom) / 2.0),
                    yaw: along.y.atan2(along.x),
                    provenance,
                    confidence: None,
                });
            }
        }
    }
    Ok(ParametricScene {
        id: String::new(),
        meta: BTreeMap::new(),
        walls: shell.walls.clone(),
        elements,
        objects,
    })
}

fn rubric_counts<'a>(ids: impl Iterator<Item = &'a str>) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for id in ids {
        *m.entry(id.to_string()).or_default() += 1;
    }
    m
}

/// Builds a scene realizing `spec` against every rubric in `rubrics`.
pub fn generate_scene(spec: &SceneSpec, rubrics: &RubricSet) -> Result<GeneratedScene, SimError> {
    if !(1..=4).contains(&spec.room_count) {
        return Err(SimError::InvalidSpec(format!("room_count must be 1 to 4, got {}", spec.room_count)));
    }
    if !(spec.size_sqm.is_finite() && spec.size_sqm / spec.room_count as f64 >= MIN_ROOM_AREA) {
        return Err(SimError::InvalidSpec(format!(
            "size_sqm {} leaves less than {MIN_ROOM_AREA} sqm per room",
            spec.size_sqm
        )));
    }
    if !(0.0..=2.0).contains(&spec.clutter) {
        return Err(SimError::InvalidSpec(format!("clutter {} outside [0, 2]", spec.clutter)));
    }
    let all = &rubrics.rubrics;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (items, scene_level) = plan_items(spec, all, &mut rng)?;
    let shell = build_shell(spec.room_count, spec.size_sqm);
    let expected = rubric_counts(items.iter().flat_map(|i| i.fires.iter().map(String::as_str)).chain(scene_level.iter().map(String::as_str)));

    for _ in 0..MAX_ATTEMPTS {
        let mut scene = place(&items, &shell, &mut rng)?;
        scene.id = spec.id.clone().unwrap_or_else(|| format!("sim-{}", spec.seed));
        scene.meta = spec.meta.clone();
        scene.meta.insert("size".into(), serde_json::json!(spec.size_sqm));
        scene.meta.insert("rooms".into(), serde_json::json!(spec.room_count));
        scene.meta.insert("seed".into(), serde_json::json!(spec.seed));
        scene.meta.insert(ROOM_BOUNDS_KEY.into(), serde_json::json!(shell.rooms));
        let gt = ground_truth_of(&scene, all);
        if rubric_counts(gt.iter().map(|g| g.rubric_id.as_str())) == expected {
            scene
                .validate()
                .map_err(|e| SimError::Infeasible(format!("generated scene failed validation: {e}")))?;
            return Ok(GeneratedScene { scene, ground_truth: gt });
        }
    }
    Err(SimError::Infeasible(
        "could not separate planted items from the objects that would cancel them".into(),
    ))
}

/// Room rectangles stored by [`generate_scene`], if present.
pub fn room_bounds(scene: &ParametricScene) -> Vec<[f64; 4]> {
    scene
        .meta
        .get(ROOM_BOUNDS_KEY)
        .and_then(|v| serde_json::from_value(v.clone()).ok())
        .unwrap_or_default()
}
