//! Similarity poses, per-fiber cylinder meshes and the two-hand zoom rule.

use alloc::vec::Vec;

use nalgebra::{Quaternion, Unit, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::math::{cos, sin, Vec3};
use crate::table::FiberRecord;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("fiber {0} has zero length")]
    DegenerateFiber(u64),
    #[error("fiber {0} has no usable diameter")]
    BadRadius(u64),
    #[error("a cylinder needs at least 3 segments, got {0}")]
    TooFewSegments(usize),
    #[error("invalid pose: {0}")]
    BadPose(&'static str),
}

/// Rotation, translation and uniform scale: `p ↦ s·R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub struct Pose6DoF {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
    pub scale: f64,
}

/// Wire form: `{"rotation": [w, x, y, z], "translation": [x, y, z], "scale": s}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct PoseRepr {
    rotation: [f64; 4],
    translation: [f64; 3],
    #[serde(default = "one")]
    scale: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<PoseRepr> for Pose6DoF {
    type Error = GeometryError;

    fn try_from(r: PoseRepr) -> Result<Self, Self::Error> {
        let [w, x, y, z] = r.rotation;
        let q = Quaternion::new(w, x, y, z);
        let n = q.norm();
        if !(n.is_finite() && (n - 1.0).abs() < 1e-6) {
            return Err(GeometryError::BadPose("rotation must be a unit quaternion"));
        }
        if !r.translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::BadPose("translation must be finite"));
        }
        if !(r.scale > 0.0 && r.scale.is_finite()) {
            return Err(GeometryError::BadPose("scale must be positive"));
        }
        Ok(Pose6DoF {
            rotation: UnitQuaternion::new_unchecked(q),
            translation: Vec3::from(r.translation),
            scale: r.scale,
        })
    }
}

impl From<Pose6DoF> for PoseRepr {
    fn from(p: Pose6DoF) -> Self {
        let q = p.rotation.quaternion();
        PoseRepr {
            rotation: [q.w, q.i, q.j, q.k],
            translation: p.translation.into(),
            scale: p.scale,
        }
    }
}

impl Default for Pose6DoF {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose6DoF {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
            scale: 1.0,
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3, scale: f64) -> Self {
        assert!(scale > 0.0, "scale must be positive");
        Self {
            rotation,
            translation,
            scale,
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self {
            translation: t,
            ..Self::identity()
        }
    }

    /// Rotation of `angle` radians about `axis`.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        Self {
            rotation: UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), angle),
            ..Self::identity()
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * (p * self.scale) + self.translation
    }

    /// Applies rotation and scale only.
    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * (v * self.scale)
    }

    /// `parent ∘ self`: the pose that applies `self` first, then `parent`.
    pub fn then(&self, parent: &Pose6DoF) -> Pose6DoF {
        compose(parent, self)
    }

    pub fn inverse(&self) -> Pose6DoF {
        let inv_r = self.rotation.inverse();
        let inv_s = 1.0 / self.scale;
        Pose6DoF {
            rotation: inv_r,
            translation: -(inv_r * self.translation) * inv_s,
            scale: inv_s,
        }
    }

    pub fn is_valid(&self) -> bool {
        (self.rotation.quaternion().norm() - 1.0).abs() < 1e-6
            && self.scale > 0.0
            && self.translation.iter().all(|v| v.is_finite())
    }

    /// Largest point displacement between two poses over the given points.
    pub fn max_deviation(&self, other: &Pose6DoF, points: &[Vec3]) -> f64 {
        points
            .iter()
            .map(|p| (self.apply(p) - other.apply(p)).norm())
            .fold(0.0, f64::max)
    }
}

/// Composition: applying the result equals applying `child`, then `parent`.
pub fn compose(parent: &Pose6DoF, child: &Pose6DoF) -> Pose6DoF {
    Pose6DoF {
        rotation: parent.rotation * child.rotation,
        translation: parent.apply(&child.translation),
        scale: parent.scale * child.scale,
    }
}

pub const MIN_ZOOM: f64 = 0.05;
pub const MAX_ZOOM: f64 = 50.0;

/// Scale after a two-point pinch that moved from separation `d0` to `d1`,
/// clamped to `[0.05, 50]`.
pub fn pinch_scale(d0: f64, d1: f64, scale: f64) -> f64 {
    assert!(d0 > 0.0 && d1 > 0.0, "pinch distances must be positive");
    (scale * (d1 / d0)).clamp(MIN_ZOOM, MAX_ZOOM)
}

/// Triangle mesh of one fiber, in the fiber table's coordinates (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderMesh {
    pub fiber_id: u64,
    pub vertices: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    pub indices: Vec<[u32; 3]>,
}

impl CylinderMesh {
    /// Volume enclosed by the (closed, outward-oriented) surface, from
    /// signed tetrahedra against the origin.
    pub fn signed_volume(&self) -> f64 {
        self.indices
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| Vec3::from(self.vertices[i as usize]));
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn transformed(&self, pose: &Pose6DoF) -> CylinderMesh {
        CylinderMesh {
            fiber_id: self.fiber_id,
            vertices: self
                .vertices
                .iter()
                .map(|v| pose.apply(&Vec3::from(*v)).into())
                .collect(),
            normals: self
                .normals
                .iter()
                .map(|n| (pose.rotation * Vec3::from(*n)).into())
                .collect(),
            indices: self.indices.clone(),
        }
    }
}

/// Unit vector perpendicular to `axis` that starts each ring.
///
/// The world z axis projected onto the ring plane, or the world x axis when
/// the fiber runs within about 25° of z.
pub fn ring_reference(axis: &Vec3) -> Vec3 {
    let reference = if axis.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
    let u = reference - axis * reference.dot(axis);
    u / u.norm()
}

/// Closed straight cylinder from a fiber's start to end point with radius
/// `diameter / 2`.
///
/// Vertex layout for `n` segments: bottom side ring, top side ring (radial
/// normals), bottom cap ring, top cap ring (axial normals), bottom center,
/// top center; `4n + 2` vertices, `4n` triangles (2n side, n per cap), all
/// wound counter-clockwise seen from outside. Ring vertex `k` sits at angle
/// `2πk/n` from [`ring_reference`], turning towards `axis × reference`.
pub fn fiber_to_cylinder(r: &FiberRecord, segments: usize) -> Result<CylinderMesh, GeometryError> {
    if segments < 3 {
        return Err(GeometryError::TooFewSegments(segments));
    }
    let start = Vec3::from(r.start);
    let end = Vec3::from(r.end);
    let axis = end - start;
    let len = axis.norm();
    if !(len > 0.0) {
        return Err(GeometryError::DegenerateFiber(r.id));
    }
    let radius = 0.5 * r.diameter;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(GeometryError::BadRadius(r.id));
    }
    let a = axis / len;
    let u = ring_reference(&a);
    let v = a.cross(&u);
    let n = segments;
    let dirs: Vec<Vec3> = (0..n)
        .map(|k| {
            let t = 2.0 * core::f64::consts::PI * k as f64 / n as f64;
            u * cos(t) + v * sin(t)
        })
        .collect();

    let mut vertices = Vec::with_capacity(4 * n + 2);
    let mut normals = Vec::with_capacity(4 * n + 2);
    for (base, normal_of) in [(start, None), (end, None), (start, Some(-a)), (end, Some(a))] {
        for d in &dirs {
            vertices.push((base + d * radius).into());
            normals.push(normal_of.unwrap_or(*d).into());
        }
    }
    vertices.push(start.into());
    normals.push((-a).into());
    vertices.push(end.into());
    normals.push(a.into());

    let n32 = n as u32;
    let (side_b, side_t, cap_b, cap_t) = (0, n32, 2 * n32, 3 * n32);
    let (centre_b, centre_t) = (4 * n32, 4 * n32 + 1);
    let mut indices = Vec::with_capacity(4 * n);
    for k in 0..n32 {
        let k1 = (k + 1) % n32;
        indices.push([side_b + k, side_b + k1, side_t + k1]);
        indices.push([side_b + k, side_t + k1, side_t + k]);
    }
    for k in 0..n32 {
        let k1 = (k + 1) % n32;
        indices.push([centre_b, cap_b + k1, cap_b + k]);
        indices.push([centre_t, cap_t + k, cap_t + k1]);
    }

    Ok(CylinderMesh {
        fiber_id: r.id,
        vertices,
        normals,
        indices,
    })
}
