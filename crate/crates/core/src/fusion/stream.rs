//! JSON Lines detection stream: one detection per line.
//!
//! ```text
//! {"t": 1.2, "pose": {"p": [x, y, z], "q": [w, x, y, z]},
//!  "intrinsics": {"fx", "fy", "cx", "cy", "w", "h"},
//!  "class": "light_switch", "bbox": [x, y, w, h], "conf": 0.91}
//! ```

use serde::{Deserialize, Serialize};

use super::camera::{CameraFrame, Intrinsics};
use crate::geometry::Vec3;
use crate::scene::Category;

/// Axis-aligned pixel rectangle, top-left origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        BBox { x: v[0], y: v[1], w: v[2], h: v[3] }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DetectionLine", into = "DetectionLine")]
pub struct DetectionEvent {
    pub frame: CameraFrame,
    pub class: Category,
    pub bbox: BBox,
    pub confidence: f64,
}

impl DetectionEvent {
    pub fn validate(&self) -> Result<(), String> {
        self.frame.validate()?;
        if !self.class.is_micro() {
            return Err(format!("`{}` is not a detector class", self.class));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} outside [0, 1]", self.confidence));
        }
        let b = &self.bbox;
        let k = &self.frame.intrinsics;
        let inside = b.w > 0.0
            && b.h > 0.0
            && b.x >= 0.0
            && b.y >= 0.0
            && b.x + b.w <= k.width
            && b.y + b.h <= k.height;
        if !inside {
            return Err("bounding box not inside the image".into());
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Pose {
    p: Vec3,
    q: [f64; 4],
}

#[derive(Serialize, Deserialize)]
struct DetectionLine {
    t: f64,
    pose: Pose,
    intrinsics: Intrinsics,
    class: Category,
    bbox: BBox,
    conf: f64,
}

impl TryFrom<DetectionLine> for DetectionEvent {
    type Error = String;

    fn try_from(line: DetectionLine) -> Result<Self, Self::Error> {
        let event = DetectionEvent {
            frame: CameraFrame {
                timestamp: line.t,
                position: line.pose.p,
                orientation: line.pose.q,
                intrinsics: line.intrinsics,
            },
            class: line.class,
            bbox: line.bbox,
            confidence: line.conf,
        };
        event.validate()?;
        Ok(event)
    }
}

impl From<DetectionEvent> for DetectionLine {
    fn from(e: DetectionEvent) -> Self {
        DetectionLine {
            t: e.frame.timestamp,
            pose: Pose {
                p: e.frame.position,
                q: e.frame.orientation,
            },
            intrinsics: e.frame.intrinsics,
            class: e.class,
            bbox: e.bbox,
            conf: e.confidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("detection stream line {line}: {message}")]
pub struct StreamError {
    pub line: usize,
    pub message: String,
}

/// Parses a JSON Lines stream; blank lines are skipped. Line numbers are 1-based.
pub fn parse_stream(text: &str) -> Result<Vec<DetectionEvent>, StreamError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| StreamError {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_stream(events: &[DetectionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("detection serialization is infallible"));
        out.push('\n');
    }
    out
}
