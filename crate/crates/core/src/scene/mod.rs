//! Parametric scene representation: walls, wall-mounted openings and upright
//! oriented boxes over a closed category vocabulary.
//!
//! Coordinates are meters in a right-handed, z-up frame with the floor at
//! z = 0. Objects only carry a yaw about the vertical axis.

mod category;
mod ray;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use category::{Category, UnknownCategory};
pub use ray::{ray_intersect, HitEntity, RayHit, MAX_RAY_RANGE};

use crate::geometry::{Point2, Vec3};

/// Slack for floating comparisons on element placement.
const PLACEMENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub id: String,
    pub start: Point2,
    pub end: Point2,
    pub height: f64,
}

impl Wall {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    /// Unit vector from `start` to `end` in the floor plane.
    pub fn direction(&self) -> Vec3 {
        let len = self.length();
        Vec3::new(
            (self.end.x - self.start.x) / len,
            (self.end.y - self.start.y) / len,
            0.0,
        )
    }

    /// Point at `offset` meters along the wall, `z` meters above the floor.
    pub fn point_at(&self, offset: f64, z: f64) -> Vec3 {
        self.start.lift(0.0) + self.direction() * offset + Vec3::new(0.0, 0.0, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Door,
    Opening,
    Window,
}

impl ElementKind {
    pub fn category(self) -> Category {
        match self {
            ElementKind::Door => Category::Door,
            ElementKind::Opening => Category::Opening,
            ElementKind::Window => Category::Window,
        }
    }

    pub fn from_category(category: Category) -> Option<Self> {
        match category {
            Category::Door => Some(ElementKind::Door),
            Category::Opening => Some(ElementKind::Opening),
            Category::Window => Some(ElementKind::Window),
            _ => None,
        }
    }
}

/// Door, opening or window cut into a parent wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallElement {
    pub id: String,
    pub kind: ElementKind,
    pub wall_id: String,
    /// Meters along the parent wall from its start point.
    pub offset: f64,
    /// Clear width in meters.
    pub width: f64,
    pub sill: f64,
    pub height: f64,
}

impl WallElement {
    pub fn center(&self, wall: &Wall) -> Vec3 {
        wall.point_at(self.offset + self.width / 2.0, self.sill + self.height / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Reconstruction,
    FusedDetection,
    GroundTruth,
}

/// Upright oriented box with a category label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub category: Category,
    pub center: Vec3,
    pub half_extents: Vec3,
    /// Radians about the vertical axis.
    #[serde(default)]
    pub yaw: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl SceneObject {
    pub fn top_height(&self) -> f64 {
        self.center.z + self.half_extents.z
    }

    pub fn bottom_height(&self) -> f64 {
        self.center.z - self.half_extents.z
    }

    pub fn center_height(&self) -> f64 {
        self.center.z
    }

    /// World point expressed in the box frame (origin at center, axes along the box).
    pub fn to_local(&self, p: Vec3) -> Vec3 {
        (p - self.center).rotate_z(-self.yaw)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.half_extents.x
            && l.y.abs() <= self.half_extents.y
            && l.z.abs() <= self.half_extents.z
    }
}

/// Euclidean distance between the centers of two boxes.
pub fn object_distance(a: &SceneObject, b: &SceneObject) -> f64 {
    a.center.distance(b.center)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParametricScene {
    pub id: String,
    #[serde(default)]
    pub meta: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub walls: Vec<Wall>,
    #[serde(default)]
    pub elements: Vec<WallElement>,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("malformed scene JSON: {message}")]
    Parse { message: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("geometry error at `{path}`: {message}")]
    Geometry { path: String, message: String },
}

fn geometry(path: impl Into<String>, message: impl Into<String>) -> SceneError {
    SceneError::Geometry {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses and validates a scene file.
pub fn load_scene(bytes: &[u8]) -> Result<ParametricScene, SceneError> {
    let text = std::str::from_utf8(bytes).map_err(|e| SceneError::Parse {
        message: format!("scene file is not UTF-8: {e}"),
    })?;
    let mut de = serde_json::Deserializer::from_str(text);
    let scene: ParametricScene = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => SceneError::Schema {
                path,
                message: inner.to_string(),
            },
            _ => SceneError::Parse {
                message: inner.to_string(),
            },
        }
    })?;
    de.end().map_err(|e| SceneError::Parse {
        message: e.to_string(),
    })?;
    scene.validate()?;
    Ok(scene)
}

impl ParametricScene {
    pub fn validate(&self) -> Result<(), SceneError> {
        let mut wall_ids = HashSet::new();
        for (i, wall) in self.walls.iter().enumerate() {
            let path = format!("walls[{i}]");
            if !wall_ids.insert(wall.id.as_str()) {
                return Err(geometry(path, format!("duplicate wall id `{}`", wall.id)));
            }
            let finite = [wall.start.x, wall.start.y, wall.end.x, wall.end.y, wall.height]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(geometry(path, "non-finite coordinate"));
            }
            if wall.start == wall.end {
                return Err(geometry(path, "wall start and end coincide"));
            }
            if wall.height <= 0.0 {
                return Err(geometry(path, "wall height must be positive"));
            }
        }

        let walls: HashMap<&str, &Wall> = self.walls.iter().map(|w| (w.id.as_str(), w)).collect();
        let mut element_ids = HashSet::new();
        for (i, el) in self.elements.iter().enumerate() {
            let path = format!("elements[{i}]");
            if !element_ids.insert(el.id.as_str()) {
                return Err(geometry(path, format!("duplicate element id `{}`", el.id)));
            }
            let Some(wall) = walls.get(el.wall_id.as_str()) else {
                return Err(geometry(
                    format!("{path}.wall_id"),
                    format!("unknown wall `{}`", el.wall_id),
                ));
            };
            if ![el.offset, el.width, el.sill, el.height].iter().all(|v| v.is_finite()) {
                return Err(geometry(path, "non-finite dimension"));
            }
            if el.offset < 0.0 {
                return Err(geometry(format!("{path}.offset"), "offset must be non-negative"));
            }
            if el.width <= 0.0 {
                return Err(geometry(format!("{path}.width"), "width must be positive"));
            }
            if el.height <= 0.0 {
                return Err(geometry(format!("{path}.height"), "height must be positive"));
            }
            if el.sill < 0.0 {
                return Err(geometry(format!("{path}.sill"), "sill must be non-negative"));
            }
            if el.offset + el.width > wall.length() + PLACEMENT_EPS {
                return Err(geometry(
                    path,
                    format!(
                        "element extends past wall `{}` ({:.4} m > {:.4} m)",
                        wall.id,
                        el.offset + el.width,
                        wall.length()
                    ),
                ));
            }
            if el.sill + el.height > wall.height + PLACEMENT_EPS {
                return Err(geometry(path, format!("element taller than wall `{}`", wall.id)));
            }
        }

        let mut object_ids = HashSet::new();
        for (i, obj) in self.objects.iter().enumerate() {
            let path = format!("objects[{i}]");
            if !object_ids.insert(obj.id.as_str()) {
                return Err(geometry(path, format!("duplicate object id `{}`", obj.id)));
            }
            if !obj.center.is_finite() || !obj.half_extents.is_finite() || !obj.yaw.is_finite() {
                return Err(geometry(path, "non-finite box parameter"));
            }
            let h = obj.half_extents;
            if h.x <= 0.0 || h.y <= 0.0 || h.z <= 0.0 {
                return Err(geometry(
                    format!("{path}.half_extents"),
                    "half extents must be positive",
                ));
            }
            match (obj.provenance, obj.confidence) {
                (Provenance::FusedDetection, None) => {
                    return Err(geometry(
                        format!("{path}.confidence"),
                        "fused detections must carry a confidence",
                    ))
                }
                (Provenance::FusedDetection, Some(c)) if !(0.0..=1.0).contains(&c) => {
                    return Err(geometry(
                        format!("{path}.confidence"),
                        "confidence must be in [0, 1]",
                    ))
                }
                (Provenance::Reconstruction | Provenance::GroundTruth, Some(_)) => {
                    return Err(geometry(
                        format!("{path}.confidence"),
                        "confidence is only allowed on fused detections",
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialization is infallible")
    }

    pub fn wall(&self, id: &str) -> Option<&Wall> {
        self.walls.iter().find(|w| w.id == id)
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn objects_of(&self, category: Category) -> impl Iterator<Item = &SceneObject> {
        self.objects.iter().filter(move |o| o.category == category)
    }

    /// Axis-aligned floor-plan bounds of all walls.
    pub fn floor_bounds(&self) -> Option<(Point2, Point2)> {
        let mut pts = self.walls.iter().flat_map(|w| [w.start, w.end]);
        let first = pts.next()?;
        Some(pts.fold((first, first), |(lo, hi), p| {
            (
                Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }

    /// The scene as the reconstruction sees it: ground-truth annotations removed.
    pub fn reconstruction(&self) -> ParametricScene {
        ParametricScene {
            objects: self
                .objects
                .iter()
                .filter(|o| o.provenance != Provenance::GroundTruth)
                .cloned()
                .collect(),
            ..self.clone()
        }
    }

    /// Reconstruction plus fused objects, the input for auditing a scan.
    pub fn with_fused(&self, fused: Vec<SceneObject>) -> ParametricScene {
        let mut out = self.reconstruction();
        out.objects.extend(fused);
        out
    }

    /// Anchor used for scene-level findings: the middle of the floor plan at floor height.
    pub fn floor_center(&self) -> Vec3 {
        match self.floor_bounds() {
            Some((lo, hi)) => Vec3::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0, 0.0),
            None => Vec3::ZERO,
        }
    }
}
