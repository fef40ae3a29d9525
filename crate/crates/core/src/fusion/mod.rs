//! Lifts 2D detections of small objects into 3D scene objects.
//!
//! Each confident detection casts a ray through its box center into the
//! reconstructed scene. Hit points are clustered per class; a cluster that
//! collects enough rays becomes a [`SceneObject`].

mod camera;
mod stream;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use camera::{pixel_to_ray, CameraFrame, Intrinsics, Ray};
pub use stream::{parse_stream, write_stream, BBox, DetectionEvent, StreamError};

use crate::geometry::Vec3;
use crate::scene::{ray_intersect, Category, ParametricScene, Provenance, SceneObject};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Rays a cluster needs before it is reported.
    pub min_rays: usize,
    /// A hit joins a cluster only when strictly closer than this (meters).
    pub max_offset: f64,
    /// Detections at or below this confidence are dropped.
    pub min_confidence: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            min_rays: 5,
            max_offset: 0.3,
            min_confidence: 0.65,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid fusion config: {0}")]
pub struct ConfigError(pub String);

impl FusionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.min_rays == 0 {
            return Err(ConfigError("min_rays must be at least 1".into()));
        }
        if !(self.max_offset > 0.0 && self.max_offset.is_finite()) {
            return Err(ConfigError("max_offset must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.min_confidence) {
            return Err(ConfigError("min_confidence must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Full box size (x, y, z) assigned to fused objects of each class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassExtents(pub BTreeMap<Category, Vec3>);

impl Default for ClassExtents {
    fn default() -> Self {
        let sizes = [
            (Category::DoorHandle, [0.12, 0.06, 0.05]),
            (Category::ElectricSocket, [0.07, 0.03, 0.11]),
            (Category::GrabBar, [0.60, 0.08, 0.04]),
            (Category::Knife, [0.25, 0.03, 0.02]),
            (Category::LightSwitch, [0.08, 0.03, 0.12]),
            (Category::Medication, [0.06, 0.06, 0.10]),
            (Category::Rug, [1.20, 0.80, 0.02]),
            (Category::Scissors, [0.20, 0.08, 0.02]),
            (Category::SmokeAlarm, [0.14, 0.14, 0.05]),
        ];
        ClassExtents(sizes.into_iter().map(|(c, [x, y, z])| (c, Vec3::new(x, y, z))).collect())
    }
}

impl ClassExtents {
    pub fn size_of(&self, class: Category) -> Vec3 {
        self.0.get(&class).copied().unwrap_or(Vec3::new(0.1, 0.1, 0.1))
    }
}

/// Hit points gathered for one physical object hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateCluster {
    pub class: Category,
    pub points: Vec<Vec3>,
    pub centroid: Vec3,
    pub confidence_sum: f64,
}

impl CandidateCluster {
    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn mean_confidence(&self) -> f64 {
        self.confidence_sum / self.points.len() as f64
    }

    fn push(&mut self, p: Vec3, confidence: f64) {
        self.points.push(p);
        let n = self.points.len() as f64;
        self.centroid = self.centroid + (p - self.centroid) * (1.0 / n);
        self.confidence_sum += confidence;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionDiagnostics {
    pub ingested: usize,
    pub low_confidence: usize,
    pub ray_misses: usize,
}

/// What happened to a single detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestOutcome {
    LowConfidence,
    Miss,
    Joined(usize),
    Seeded(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FusionState {
    pub clusters: Vec<CandidateCluster>,
    pub diagnostics: FusionDiagnostics,
}

impl FusionState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ingest(&mut self, det: &DetectionEvent, scene: &ParametricScene, cfg: &FusionConfig) -> IngestOutcome {
        self.diagnostics.ingested += 1;
        if det.confidence <= cfg.min_confidence {
            self.diagnostics.low_confidence += 1;
            return IngestOutcome::LowConfidence;
        }
        let (u, v) = det.bbox.center();
        let ray = pixel_to_ray(&det.frame, u, v);
        let Some(hit) = ray_intersect(scene, ray.origin, ray.dir) else {
            self.diagnostics.ray_misses += 1;
            return IngestOutcome::Miss;
        };
        self.add_point(det.class, hit.point, det.confidence, cfg)
    }

    /// Clusters an already-lifted 3D point.
    pub fn add_point(&mut self, class: Category, p: Vec3, confidence: f64, cfg: &FusionConfig) -> IngestOutcome {
        let nearest = self
            .clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.class == class)
            .map(|(i, c)| (i, c.centroid.distance(p)))
            .filter(|&(_, d)| d < cfg.max_offset)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((i, _)) => {
                self.clusters[i].push(p, confidence);
                IngestOutcome::Joined(i)
            }
            None => {
                self.clusters.push(CandidateCluster {
                    class,
                    points: vec![p],
                    centroid: p,
                    confidence_sum: confidence,
                });
                IngestOutcome::Seeded(self.clusters.len() - 1)
            }
        }
    }

    /// Clusters that have reached `min_rays`, in creation order.
    pub fn confirmed<'a>(&'a self, cfg: &'a FusionConfig) -> impl Iterator<Item = &'a CandidateCluster> + 'a {
        self.clusters.iter().filter(move |c| c.count() >= cfg.min_rays)
    }

    pub fn finalize(&self, cfg: &FusionConfig, extents: &ClassExtents) -> Vec<SceneObject> {
        self.confirmed(cfg)
            .enumerate()
            .map(|(i, c)| {
                let size = extents.size_of(c.class);
                SceneObject {
                    id: format!("fused-{:03}", i + 1),
                    category: c.class,
                    center: c.centroid,
                    half_extents: size * 0.5,
                    yaw: 0.0,
                    provenance: Provenance::FusedDetection,
                    confidence: Some(c.mean_confidence()),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionOutput {
    pub objects: Vec<SceneObject>,
    pub diagnostics: FusionDiagnostics,
}

/// Runs the whole stream through a fresh [`FusionState`].
pub fn fuse(
    events: &[DetectionEvent],
    scene: &ParametricScene,
    cfg: &FusionConfig,
    extents: &ClassExtents,
) -> FusionOutput {
    let mut state = FusionState::new();
    for e in events {
        state.ingest(e, scene, cfg);
    }
    FusionOutput {
        objects: state.finalize(cfg, extents),
        diagnostics: state.diagnostics,
    }
}
