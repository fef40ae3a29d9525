//! Synthetic detector output along a walk through a generated scene.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{room_bounds, SimError};
use crate::fusion::{BBox, CameraFrame, DetectionEvent, Intrinsics};
use crate::geometry::{Point2, Vec3};
use crate::scene::ray_intersect;
use crate::scene::{Category, ParametricScene, SceneObject};

const YAW_SWEEP_DEG: f64 = 40.0;
const YAW_PERIOD: f64 = 6.0;
const PITCH_MEAN_DEG: f64 = -15.0;
const PITCH_SWEEP_DEG: f64 = 25.0;
const PITCH_PERIOD: f64 = 4.3;
const FALSE_POSITIVE_BOX: f64 = 40.0;
const OCCLUSION_SLACK: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathSpec {
    /// A loop around each room, inset from the walls, joined through the doors.
    Auto {
        #[serde(default = "default_inset")]
        inset: f64,
    },
    /// Explicit floor positions visited in order.
    Waypoints { points: Vec<[f64; 2]> },
}

fn default_inset() -> f64 {
    0.7
}

impl Default for PathSpec {
    fn default() -> Self {
        PathSpec::Auto { inset: default_inset() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfidenceModel {
    /// `lo + (hi - lo) * Beta(alpha, beta)`.
    Beta { alpha: f64, beta: f64, lo: f64, hi: f64 },
    Fixed { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Standard deviation of the box center, in pixels.
    pub pixel_sigma: f64,
    /// Probability that a visible object goes undetected in a frame.
    pub miss_rate: f64,
    /// Probability of one spurious detection per frame.
    pub false_positive_rate: f64,
    pub confidence: ConfidenceModel,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            pixel_sigma: 2.0,
            miss_rate: 0.1,
            false_positive_rate: 0.02,
            confidence: ConfidenceModel::Beta {
                alpha: 8.0,
                beta: 2.0,
                lo: 0.3,
                hi: 1.0,
            },
        }
    }
}

impl NoiseSpec {
    /// A perfect detector.
    pub fn none() -> Self {
        NoiseSpec {
            pixel_sigma: 0.0,
            miss_rate: 0.0,
            false_positive_rate: 0.0,
            confidence: ConfidenceModel::Fixed { value: 0.9 },
        }
    }
}

fn default_intrinsics() -> Intrinsics {
    Intrinsics {
        fx: 1000.0,
        fy: 1000.0,
        cx: 960.0,
        cy: 720.0,
        width: 1920.0,
        height: 1440.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySpec {
    pub seed: u64,
    /// Walking speed in m/s.
    pub speed: f64,
    pub frame_rate: f64,
    pub path: PathSpec,
    pub camera_height: f64,
    pub intrinsics: Intrinsics,
    /// Fraction of the image, per axis, in which detections fire.
    pub central_crop: f64,
    pub max_range: f64,
    pub noise: NoiseSpec,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec {
            seed: 0,
            speed: 0.5,
            frame_rate: 10.0,
            path: PathSpec::default(),
            camera_height: 1.4,
            intrinsics: default_intrinsics(),
            central_crop: 0.6,
            max_range: 5.0,
            noise: NoiseSpec::default(),
        }
    }
}

impl TrajectorySpec {
    fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidSpec(m.to_string()));
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return bad("speed must be positive");
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return bad("frame_rate must be positive");
        }
        if !(self.camera_height > 0.0) {
            return bad("camera_height must be positive");
        }
        if !(self.central_crop > 0.0 && self.central_crop <= 1.0) {
            return bad("central_crop must be in (0, 1]");
        }
        if !(self.max_range > 0.0) {
            return bad("max_range must be positive");
        }
        self.intrinsics.validate().map_err(SimError::InvalidSpec)?;
        let n = &self.noise;
        if !(n.pixel_sigma >= 0.0 && n.pixel_sigma.is_finite()) {
            return bad("pixel_sigma must be non-negative");
        }
        for (name, p) in [("miss_rate", n.miss_rate), ("false_positive_rate", n.false_positive_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidSpec(format!("{name} must be in [0, 1]")));
            }
        }
        match n.confidence {
            ConfidenceModel::Beta { alpha, beta, lo, hi } => {
                if !(alpha > 0.0 && beta > 0.0 && 0.0 <= lo && lo <= hi && hi <= 1.0) {
                    return bad("confidence beta needs alpha, beta > 0 and 0 <= lo <= hi <= 1");
                }
            }
            ConfidenceModel::Fixed { value } => {
                if !(0.0..=1.0).contains(&value) {
                    return bad("fixed confidence must be in [0, 1]");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStream {
    pub events: Vec<DetectionEvent>,
    pub frames: usize,
    /// Seconds between the first and last frame.
    pub duration: f64,
}

fn rooms_of(scene: &ParametricScene) -> Vec<[f64; 4]> {
    let rooms = room_bounds(scene);
    if !rooms.is_empty() {
        return rooms;
    }
    scene
        .floor_bounds()
        .map(|(lo, hi)| vec![[lo.x, lo.y, hi.x, hi.y]])
        .unwrap_or_default()
}

fn waypoints(scene: &ParametricScene, path: &PathSpec) -> Result<Vec<Point2>, SimError> {
    match path {
        PathSpec::Waypoints { points } => {
            let (lo, hi) = scene
                .floor_bounds()
                .ok_or_else(|| SimError::InvalidSpec("scene has no walls".into()))?;
            for (index, p) in points.iter().enumerate() {
                if !(lo.x..=hi.x).contains(&p[0]) || !(lo.y..=hi.y).contains(&p[1]) {
                    return Err(SimError::PathOutOfBounds { index, x: p[0], y: p[1] });
                }
            }
            if points.is_empty() {
                return Err(SimError::InvalidSpec("path has no waypoints".into()));
            }
            Ok(points.iter().map(|&p| p.into()).collect())
        }
        PathSpec::Auto { inset } => {
            let rooms = rooms_of(scene);
            if rooms.is_empty() {
                return Err(SimError::InvalidSpec("scene has no walls".into()));
            }
            let mut out = Vec::new();
            for [x0, y0, x1, y1] in rooms {
                let i = inset.min((x1 - x0) / 2.0 - 0.05).min((y1 - y0) / 2.0 - 0.05).max(0.0);
                let mid = (y0 + y1) / 2.0;
                out.extend([
                    Point2::new(x0 + i, mid),
                    Point2::new(x0 + i, y0 + i),
                    Point2::new(x1 - i, y0 + i),
                    Point2::new(x1 - i, y1 - i),
                    Point2::new(x0 + i, y1 - i),
                    Point2::new(x0 + i, mid),
                ]);
            }
            Ok(out)
        }
    }
}

fn room_center(rooms: &[[f64; 4]], p: Point2) -> Point2 {
    let inside = |r: &[f64; 4]| (r[0]..=r[2]).contains(&p.x) && (r[1]..=r[3]).contains(&p.y);
    let dist = |r: &[f64; 4]| Point2::new((r[0] + r[2]) / 2.0, (r[1] + r[3]) / 2.0).distance(p);
    rooms
        .iter()
        .find(|r| inside(r))
        .or_else(|| rooms.iter().min_by(|a, b| dist(a).total_cmp(&dist(b))))
        .map(|r| Point2::new((r[0] + r[2]) / 2.0, (r[1] + r[3]) / 2.0))
        .unwrap_or(p)
}

/// Camera poses along the path. The camera faces the center of the room it
/// is in while sweeping left and right and up and down.
pub fn camera_frames(scene: &ParametricScene, spec: &TrajectorySpec) -> Result<Vec<CameraFrame>, SimError> {
    spec.validate()?;
    let pts = waypoints(scene, &spec.path)?;
    let rooms = rooms_of(scene);
    let dt = 1.0 / spec.frame_rate;
    let step = spec.speed * dt;

    // Positions at constant speed along the polyline.
    let mut positions = vec![pts[0]];
    let mut carry = 0.0;
    for seg in pts.windows(2) {
        let len = seg[0].distance(seg[1]);
        let mut s = step - carry;
        while s <= len {
            let f = s / len;
            positions.push(Point2::new(seg[0].x + f * (seg[1].x - seg[0].x), seg[0].y + f * (seg[1].y - seg[0].y)));
            s += step;
        }
        carry = len - (s - step);
    }

    let mut frames = Vec::with_capacity(positions.len());
    for (k, p) in positions.into_iter().enumerate() {
        let t = k as f64 * dt;
        let c = room_center(&rooms, p);
        let base = if c.distance(p) < 1e-6 { 0.0 } else { (c.y - p.y).atan2(c.x - p.x) };
        let tau = std::f64::consts::TAU;
        let yaw = base + YAW_SWEEP_DEG.to_radians() * (tau * t / YAW_PERIOD).sin();
        let pitch = (PITCH_MEAN_DEG + PITCH_SWEEP_DEG * (tau * t / PITCH_PERIOD).sin()).to_radians();
        let forward = Vec3::new(yaw.cos() * pitch.cos(), yaw.sin() * pitch.cos(), pitch.sin());
        let frame = CameraFrame::looking_along(t, p.lift(spec.camera_height), forward, spec.intrinsics)
            .expect("pitch stays well away from vertical");
        frames.push(frame);
    }
    Ok(frames)
}

fn corners(obj: &SceneObject) -> impl Iterator<Item = Vec3> + '_ {
    (0..8).map(move |i| {
        let h = obj.half_extents;
        let local = Vec3::new(
            if i & 1 == 0 { -h.x } else { h.x },
            if i & 2 == 0 { -h.y } else { h.y },
            if i & 4 == 0 { -h.z } else { h.z },
        );
        obj.center + local.rotate_z(obj.yaw)
    })
}

fn visible(frame: &CameraFrame, obj: &SceneObject, recon: &ParametricScene, spec: &TrajectorySpec) -> Option<(f64, f64)> {
    let dist = frame.position.distance(obj.center);
    if dist > spec.max_range || frame.depth(obj.center) <= 0.0 {
        return None;
    }
    let (u, v) = frame.project(obj.center)?;
    let k = &frame.intrinsics;
    let half = spec.central_crop / 2.0;
    if (u - k.width / 2.0).abs() > half * k.width || (v - k.height / 2.0).abs() > half * k.height {
        return None;
    }
    let dir = (obj.center - frame.position).normalized()?;
    if let Some(hit) = ray_intersect(recon, frame.position, dir) {
        if hit.range < dist - OCCLUSION_SLACK {
            return None;
        }
    }
    Some((u, v))
}

fn sample_confidence(model: &ConfidenceModel, rng: &mut ChaCha8Rng) -> f64 {
    match *model {
        ConfidenceModel::Fixed { value } => value,
        ConfidenceModel::Beta { alpha, beta, lo, hi } => {
            let b = Beta::new(alpha, beta).expect("validated parameters");
            lo + (hi - lo) * b.sample(rng)
        }
    }
}

fn symmetric_box(k: &Intrinsics, cu: f64, cv: f64, hw: f64, hh: f64) -> BBox {
    let cu = cu.clamp(1.0, k.width - 1.0);
    let cv = cv.clamp(1.0, k.height - 1.0);
    let hw = hw.max(1.0).min(cu).min(k.width - cu);
    let hh = hh.max(1.0).min(cv).min(k.height - cv);
    BBox {
        x: cu - hw,
        y: cv - hh,
        w: 2.0 * hw,
        h: 2.0 * hh,
    }
}

/// Detections of every micro object in `scene` along the trajectory.
/// Occlusion is tested against the reconstruction only.
pub fn generate_stream(scene: &ParametricScene, spec: &TrajectorySpec) -> Result<GeneratedStream, SimError> {
    let frames = camera_frames(scene, spec)?;
    let recon = scene.reconstruction();
    let micro: Vec<&SceneObject> = scene.objects.iter().filter(|o| o.category.is_micro()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise.pixel_sigma).expect("validated sigma");
    let mut events = Vec::new();

    for frame in &frames {
        for obj in &micro {
            let Some((u, v)) = visible(frame, obj, &recon, spec) else { continue };
            // Every draw happens before the miss decision, so raising the miss
            // rate under a fixed seed only removes detections.
            let (du, dv) = (noise.sample(&mut rng), noise.sample(&mut rng));
            let confidence = sample_confidence(&spec.noise.confidence, &mut rng);
            if rng.random::<f64>() < spec.noise.miss_rate {
                continue;
            }
            let (mut hw, mut hh) = (0.0f64, 0.0f64);
            for c in corners(obj) {
                if let Some((cu, cv)) = frame.project(c) {
                    hw = hw.max((cu - u).abs());
                    hh = hh.max((cv - v).abs());
                }
            }
            events.push(DetectionEvent {
                frame: frame.clone(),
                class: obj.category,
                bbox: symmetric_box(&frame.intrinsics, u + du, v + dv, hw, hh),
                confidence,
            });
        }
        if rng.random::<f64>() < spec.noise.false_positive_rate {
            let k = &frame.intrinsics;
            let class = Category::MICRO[rng.random_range(0..Category::MICRO.len())];
            let half = FALSE_POSITIVE_BOX / 2.0;
            let u = rng.random_range(half..k.width - half);
            let v = rng.random_range(half..k.height - half);
            events.push(DetectionEvent {
                frame: frame.clone(),
                class,
                bbox: symmetric_box(k, u, v, half, half),
                confidence: sample_confidence(&spec.noise.confidence, &mut rng),
            });
        }
    }
    let duration = match (frames.first(), frames.last()) {
        (Some(a), Some(b)) => b.timestamp - a.timestamp,
        _ => 0.0,
    };
    Ok(GeneratedStream {
        events,
        frames: frames.len(),
        duration,
    })
}
