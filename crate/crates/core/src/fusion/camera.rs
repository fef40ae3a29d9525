use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

const QUATERNION_NORM_TOL: f64 = 1e-6;

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(rename = "w")]
    pub width: f64,
    #[serde(rename = "h")]
    pub height: f64,
}

impl Intrinsics {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err("focal lengths must be positive".into());
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err("image size must be positive".into());
        }
        if !(0.0..=self.width).contains(&self.cx) || !(0.0..=self.height).contains(&self.cy) {
            return Err("principal point outside the image".into());
        }
        Ok(())
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        (0.0..=self.width).contains(&u) && (0.0..=self.height).contains(&v)
    }
}

/// Camera pose and intrinsics at one instant. The camera looks along its
/// +z axis with +x to the right of the image and +y down the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraFrame {
    pub timestamp: f64,
    pub position: Vec3,
    /// Camera-to-world rotation as `[w, x, y, z]`.
    pub orientation: [f64; 4],
    pub intrinsics: Intrinsics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl CameraFrame {
    pub fn validate(&self) -> Result<(), String> {
        let [w, x, y, z] = self.orientation;
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !((norm - 1.0).abs() <= QUATERNION_NORM_TOL) {
            return Err(format!("orientation quaternion norm {norm} is not 1"));
        }
        if !self.position.is_finite() || !self.timestamp.is_finite() {
            return Err("non-finite pose".into());
        }
        self.intrinsics.validate()
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        let [w, x, y, z] = self.orientation;
        UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z))
    }

    /// Builds a frame whose optical axis points along `forward` with the image
    /// "down" direction as close to world -z as possible.
    pub fn looking_along(timestamp: f64, position: Vec3, forward: Vec3, intrinsics: Intrinsics) -> Option<Self> {
        let f = forward.normalized()?;
        let right = f.cross(Vec3::UNIT_Z).normalized()?;
        let down = f.cross(right);
        let m = nalgebra::Matrix3::from_columns(&[to_na(right), to_na(down), to_na(f)]);
        let q = UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(m));
        Some(Self {
            timestamp,
            position,
            orientation: [q.w, q.i, q.j, q.k],
            intrinsics,
        })
    }

    /// World point to pixel; `None` when the point is behind the camera.
    pub fn project(&self, point: Vec3) -> Option<(f64, f64)> {
        let cam = self.rotation().inverse_transform_vector(&to_na(point - self.position));
        if cam.z <= 0.0 {
            return None;
        }
        let k = &self.intrinsics;
        Some((k.fx * cam.x / cam.z + k.cx, k.fy * cam.y / cam.z + k.cy))
    }

    /// Depth of a world point along the optical axis.
    pub fn depth(&self, point: Vec3) -> f64 {
        self.rotation().inverse_transform_vector(&to_na(point - self.position)).z
    }
}

/// Back-projects a pixel into a world-space ray from the camera center.
pub fn pixel_to_ray(frame: &CameraFrame, u: f64, v: f64) -> Ray {
    let k = &frame.intrinsics;
    let cam = Vector3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
    let world = frame.rotation().transform_vector(&cam).normalize();
    Ray {
        origin: frame.position,
        dir: Vec3::new(world.x, world.y, world.z),
    }
}

fn to_na(v: Vec3) -> Vector3<f64> {
    Vector3::new(v.x, v.y, v.z)
}
