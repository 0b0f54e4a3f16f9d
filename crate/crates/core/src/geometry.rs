//! Rigid-body poses, the world-to-camera transform, and the pinhole
//! projection used to turn 3D waypoints into pixel targets.
//!
//! Conventions, fixed across the whole workspace:
//!
//! - World and camera frames are right-handed with +x right, +y down and
//!   +z forward. The floor is the plane y = 0, so "up" is -y.
//! - Depth is the camera-frame z coordinate (not the Euclidean ray length).
//! - Quaternions are Hamilton, scalar-first. A rotation `r` maps a
//!   camera-frame vector v into the world frame as `r v r^-1`; the
//!   world-to-camera transform is therefore `r^-1 (p - position) r`.
//! - Turning left is a counter-clockwise yaw when viewed from above,
//!   i.e. +90 degrees about the up axis (0, -1, 0).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{Action, ActionType};

/// Pitch change applied by a single look-down action, in degrees.
pub const LOOK_DOWN_STEP_DEG: f64 = 30.0;
/// Lowest pitch the camera may reach (looking down).
pub const PITCH_MIN_DEG: f64 = -60.0;
/// Highest pitch the camera may reach (level).
pub const PITCH_MAX_DEG: f64 = 0.0;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("{0:?} is not a view-adjustment action")]
    NotAViewAction(ActionType),
    #[error("camera dimensions and focal length must be positive")]
    BadCamera,
}

/// A point or offset in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dist(&self, other: &Vec3) -> f64 {
        (*self - *other).norm()
    }

    /// Distance ignoring the vertical (y) component.
    pub fn ground_dist(&self, other: &Vec3) -> f64 {
        let dx = self.x - other.x;
        let dz = self.z - other.z;
        (dx * dx + dz * dz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// A unit quaternion, scalar-first. Renormalized after every composition so
/// the norm stays within 1e-9 of one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitRotation {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

fn hamilton(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> (f64, f64, f64, f64) {
    let (aw, ax, ay, az) = a;
    let (bw, bx, by, bz) = b;
    (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )
}

impl UnitRotation {
    pub fn identity() -> Self {
        UnitRotation { w: 1.0, x: 0.0, y: 0.0, z: 0.0 }
    }

    /// Rotation of `angle_rad` about `axis` (right-hand rule). The axis is
    /// normalized internally; a zero axis yields the identity.
    pub fn from_axis_angle(axis: Vec3, angle_rad: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        let half = angle_rad * 0.5;
        let s = half.sin() / n;
        UnitRotation {
            w: half.cos(),
            x: axis.x * s,
            y: axis.y * s,
            z: axis.z * s,
        }
        .renormalized()
    }

    /// Yaw about the up axis (0, -1, 0); positive angles turn left.
    pub fn from_yaw_deg(yaw_deg: f64) -> Self {
        Self::from_axis_angle(Vec3::new(0.0, -1.0, 0.0), yaw_deg.to_radians())
    }

    /// Pitch about the local x axis; negative angles look down.
    pub fn from_pitch_deg(pitch_deg: f64) -> Self {
        Self::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), pitch_deg.to_radians())
    }

    pub fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn from_components(c: [f64; 4]) -> Self {
        UnitRotation { w: c[0], x: c[1], y: c[2], z: c[3] }.renormalized()
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    fn renormalized(self) -> Self {
        let n = self.norm();
        UnitRotation { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn inverse(&self) -> Self {
        UnitRotation { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Hamilton product `self * other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &UnitRotation) -> Self {
        let (w, x, y, z) = hamilton(
            (self.w, self.x, self.y, self.z),
            (other.w, other.x, other.y, other.z),
        );
        UnitRotation { w, x, y, z }.renormalized()
    }

    /// Rotates `v` by this quaternion: `q v q^-1` with v embedded as a pure
    /// quaternion.
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let q = (self.w, self.x, self.y, self.z);
        let qi = (self.w, -self.x, -self.y, -self.z);
        let (_, x, y, z) = hamilton(hamilton(q, (0.0, v.x, v.y, v.z)), qi);
        Vec3::new(x, y, z)
    }

    /// Rotates `v` by the inverse: `q^-1 v q`.
    pub fn inverse_rotate(&self, v: Vec3) -> Vec3 {
        self.inverse().rotate(v)
    }

    /// Angle in radians of the relative rotation `self^-1 * other`.
    /// Zero means the two quaternions represent the same rotation.
    pub fn angle_to(&self, other: &UnitRotation) -> f64 {
        let dot =
            self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z;
        2.0 * dot.abs().min(1.0).acos()
    }
}

/// Camera position plus orientation. The pitch accumulated through look-down
/// actions is tracked separately so it can be clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub rotation: UnitRotation,
    pub pitch_deg: f64,
}

impl Pose {
    /// Pose from a yaw heading and a pitch; rotation = yaw * pitch so the
    /// pitch is applied in the camera's local frame.
    pub fn from_yaw_pitch(position: Vec3, yaw_deg: f64, pitch_deg: f64) -> Self {
        let rotation = UnitRotation::from_yaw_deg(yaw_deg)
            .compose(&UnitRotation::from_pitch_deg(pitch_deg));
        Pose { position, rotation, pitch_deg }
    }

    pub fn level(position: Vec3, yaw_deg: f64) -> Self {
        Self::from_yaw_pitch(position, yaw_deg, 0.0)
    }
}

/// Pinhole intrinsics: image size and focal length in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    #[serde(rename = "w")]
    pub width: u32,
    #[serde(rename = "h")]
    pub height: u32,
    #[serde(rename = "f")]
    pub focal: f64,
}

impl CameraModel {
    pub fn new(width: u32, height: u32, focal: f64) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 || !(focal > 0.0) {
            return Err(GeometryError::BadCamera);
        }
        Ok(CameraModel { width, height, focal })
    }
}

/// Continuous pixel coordinates: x rightward from the left edge, y downward
/// from the top edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

impl PixelPoint {
    pub fn new(x: f64, y: f64) -> Self {
        PixelPoint { x, y }
    }

    pub fn dist(&self, other: &PixelPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Outcome of projecting a camera-frame point onto the image plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionResult {
    /// Pixel inside [0, W] x [0, H], with positive depth.
    InView(PixelPoint, f64),
    /// Positive depth but the pixel falls outside the image bounds.
    OutOfView(PixelPoint, f64),
    /// The point lies behind the camera (depth <= 0).
    Behind,
}

impl ProjectionResult {
    pub fn in_view(&self) -> Option<(PixelPoint, f64)> {
        match self {
            ProjectionResult::InView(p, d) => Some((*p, *d)),
            _ => None,
        }
    }
}

/// Expresses `next` in the camera frame of `pose`: `r^-1 (next - position) r`.
pub fn to_camera_frame(next: Vec3, pose: &Pose) -> Vec3 {
    pose.rotation.inverse_rotate(next - pose.position)
}

/// Inverse of [`to_camera_frame`]: maps a camera-frame point back to world
/// coordinates.
pub fn to_world_frame(p_cam: Vec3, pose: &Pose) -> Vec3 {
    pose.rotation.rotate(p_cam) + pose.position
}

/// Projects a camera-frame point onto the image plane:
/// `(W/2 + f*x/z, H/2 + f*y/z)` with depth z.
pub fn project(p_cam: Vec3, cam: &CameraModel) -> ProjectionResult {
    if p_cam.z <= 0.0 {
        return ProjectionResult::Behind;
    }
    let w = f64::from(cam.width);
    let h = f64::from(cam.height);
    let px = w / 2.0 + cam.focal * p_cam.x / p_cam.z;
    let py = h / 2.0 + cam.focal * p_cam.y / p_cam.z;
    let pixel = PixelPoint::new(px, py);
    if (0.0..=w).contains(&px) && (0.0..=h).contains(&py) {
        ProjectionResult::InView(pixel, p_cam.z)
    } else {
        ProjectionResult::OutOfView(pixel, p_cam.z)
    }
}

/// Lifts a pixel back to a camera-frame point at the given depth.
pub fn unproject(
    pixel: PixelPoint,
    depth_m: f64,
    cam: &CameraModel,
) -> Result<Vec3, GeometryError> {
    if !(depth_m > 0.0) {
        return Err(GeometryError::NonPositiveDepth(depth_m));
    }
    let w = f64::from(cam.width);
    let h = f64::from(cam.height);
    Ok(Vec3::new(
        (pixel.x - w / 2.0) * depth_m / cam.focal,
        (pixel.y - h / 2.0) * depth_m / cam.focal,
        depth_m,
    ))
}

/// Applies a view-adjustment action to a pose. Turns change the yaw by
/// +90/-90/180 degrees; look-down lowers the pitch by [`LOOK_DOWN_STEP_DEG`]
/// and clamps it to [[`PITCH_MIN_DEG`], [`PITCH_MAX_DEG`]]. The position is
/// never changed.
pub fn apply_view_action(pose: &Pose, action: &Action) -> Result<Pose, GeometryError> {
    let yaw = |deg: f64| -> Pose {
        Pose {
            position: pose.position,
            rotation: UnitRotation::from_yaw_deg(deg).compose(&pose.rotation),
            pitch_deg: pose.pitch_deg,
        }
    };
    match action {
        Action::TurnLeft => Ok(yaw(90.0)),
        Action::TurnRight => Ok(yaw(-90.0)),
        Action::TurnAround => Ok(yaw(180.0)),
        Action::LookDown => Ok(set_pitch(
            pose,
            (pose.pitch_deg - LOOK_DOWN_STEP_DEG).clamp(PITCH_MIN_DEG, PITCH_MAX_DEG),
        )),
        other => Err(GeometryError::NotAViewAction(other.action_type())),
    }
}

/// Re-pitches a pose to `pitch_deg` (clamped), preserving its yaw.
pub fn set_pitch(pose: &Pose, pitch_deg: f64) -> Pose {
    let pitch_deg = pitch_deg.clamp(PITCH_MIN_DEG, PITCH_MAX_DEG);
    let delta = pitch_deg - pose.pitch_deg;
    Pose {
        position: pose.position,
        rotation: pose
            .rotation
            .compose(&UnitRotation::from_pitch_deg(delta)),
        pitch_deg,
    }
}
