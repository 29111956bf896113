//! Planar homographies and marker pose recovery.

use nalgebra::{Matrix3, Rotation3, SMatrix, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Pose6DoF;
use crate::math::{fabs, sqrt, Vec3};

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

/// Pinhole intrinsics: zero skew, no distortion; pixel centers sit at
/// integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    /// Principal point at the image center.
    pub fn centered(width: usize, height: usize, f: f64) -> Self {
        CameraIntrinsics {
            fx: f,
            fy: f,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.fx > 0.0
            && self.fy > 0.0
            && self.fx.is_finite()
            && self.fy.is_finite()
            && self.cx.is_finite()
            && self.cy.is_finite()
    }

    pub fn project(&self, p: &Vec3) -> Option<[f64; 2]> {
        if p.z <= 0.0 {
            return None;
        }
        Some([self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy])
    }

    pub fn normalize(&self, px: [f64; 2]) -> [f64; 2] {
        [(px[0] - self.cx) / self.fx, (px[1] - self.cy) / self.fy]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PoseError {
    #[error("corners are degenerate (collinear, coincident or non-finite)")]
    DegenerateCorners,
    #[error("camera intrinsics are invalid")]
    BadIntrinsics,
}

/// Marker-frame corners (mm) in detection order: top-left, bottom-left,
/// bottom-right, top-right. The marker frame has x right, y down and z
/// pointing away from a camera that faces it.
pub fn marker_corners(side: f64) -> [Vec3; 4] {
    let h = side / 2.0;
    [
        Vec3::new(-h, -h, 0.0),
        Vec3::new(-h, h, 0.0),
        Vec3::new(h, h, 0.0),
        Vec3::new(h, -h, 0.0),
    ]
}

fn hartley(points: &[[f64; 2]; 4]) -> Option<Matrix3<f64>> {
    let mut c = [0.0; 2];
    for p in points {
        c[0] += p[0] / 4.0;
        c[1] += p[1] / 4.0;
    }
    let mean_d = points
        .iter()
        .map(|p| sqrt(sq(p[0] - c[0]) + sq(p[1] - c[1])))
        .sum::<f64>()
        / 4.0;
    if !(mean_d.is_finite() && mean_d > 0.0) {
        return None;
    }
    let s = core::f64::consts::SQRT_2 / mean_d;
    Some(Matrix3::new(s, 0.0, -s * c[0], 0.0, s, -s * c[1], 0.0, 0.0, 1.0))
}

fn twice_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// True when every corner triple spans a triangle larger than a tiny
/// fraction of the squared extent.
pub fn corners_well_posed(p: &[[f64; 2]; 4]) -> bool {
    if p.iter().any(|q| !(q[0].is_finite() && q[1].is_finite())) {
        return false;
    }
    let mut extent: f64 = 0.0;
    for a in p {
        for b in p {
            extent = extent.max(sq(a[0] - b[0]) + sq(a[1] - b[1]));
        }
    }
    if extent == 0.0 {
        return false;
    }
    let tri = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    tri.iter()
        .all(|t| fabs(twice_area(p[t[0]], p[t[1]], p[t[2]])) > 1e-6 * extent)
}

/// Homography `H` with `dst ~ H · [src, 1]` from four correspondences via
/// the normalized direct linear transform.
pub fn homography(src: &[[f64; 2]; 4], dst: &[[f64; 2]; 4]) -> Result<Matrix3<f64>, PoseError> {
    if !corners_well_posed(src) || !corners_well_posed(dst) {
        return Err(PoseError::DegenerateCorners);
    }
    let ts = hartley(src).ok_or(PoseError::DegenerateCorners)?;
    let td = hartley(dst).ok_or(PoseError::DegenerateCorners)?;
    let mut a = SMatrix::<f64, 9, 9>::zeros();
    for i in 0..4 {
        let s = ts * Vector3::new(src[i][0], src[i][1], 1.0);
        let d = td * Vector3::new(dst[i][0], dst[i][1], 1.0);
        let (x, y) = (s.x, s.y);
        let (u, v) = (d.x, d.y);
        let r0 = [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u];
        let r1 = [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v];
        for k in 0..9 {
            a[(2 * i, k)] = r0[k];
            a[(2 * i + 1, k)] = r1[k];
        }
    }
    // Row 8 stays zero so the square SVD exposes the null vector.
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or(PoseError::DegenerateCorners)?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .ok_or(PoseError::DegenerateCorners)?;
    let h = vt.row(imin);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td.try_inverse().ok_or(PoseError::DegenerateCorners)?;
    let mut out = td_inv * hn * ts;
    let n = out[(2, 2)];
    if fabs(n) > 1e-300 {
        out /= n;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(PoseError::DegenerateCorners);
    }
    Ok(out)
}

pub fn apply_homography(h: &Matrix3<f64>, p: [f64; 2]) -> [f64; 2] {
    let q = h * Vector3::new(p[0], p[1], 1.0);
    [q.x / q.z, q.y / q.z]
}

/// Closest rotation to `m` in the Frobenius sense.
pub fn orthonormalize(m: &Matrix3<f64>) -> Rotation3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.unwrap_or_else(Matrix3::identity);
    let vt = svd.v_t.unwrap_or_else(Matrix3::identity);
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let mut u2 = u;
        u2.column_mut(2).neg_mut();
        r = u2 * vt;
    }
    Rotation3::from_matrix_unchecked(r)
}

/// Marker-to-camera pose from four image corners (top-left, bottom-left,
/// bottom-right, top-right).
///
/// The homography from the marker plane to normalized image coordinates is
/// split into `[r1 r2 t]`, the rotation is completed with `r1 × r2` and
/// snapped to the nearest orthonormal matrix, and the translation is then
/// re-solved linearly for that rotation.
pub fn estimate_pose(
    corners: &[[f64; 2]; 4],
    side_mm: f64,
    intr: &CameraIntrinsics,
) -> Result<Pose6DoF, PoseError> {
    if !intr.is_valid() {
        return Err(PoseError::BadIntrinsics);
    }
    if !(side_mm.is_finite() && side_mm > 0.0) {
        return Err(PoseError::DegenerateCorners);
    }
    let obj = marker_corners(side_mm);
    let src = obj.map(|p| [p.x, p.y]);
    let dst = corners.map(|c| intr.normalize(c));
    let h = homography(&src, &dst)?;
    let h1 = h.column(0).into_owned();
    let h2 = h.column(1).into_owned();
    let h3 = h.column(2).into_owned();
    let mut lambda = 2.0 / (h1.norm() + h2.norm());
    if h3.z * lambda < 0.0 {
        lambda = -lambda;
    }
    let r1 = h1 * lambda;
    let r2 = h2 * lambda;
    let r3 = r1.cross(&r2);
    let rot = orthonormalize(&Matrix3::from_columns(&[r1, r2, r3]));
    let t = solve_translation(&rot, &obj, &dst).unwrap_or(h3 * lambda);
    if !(t.z > 0.0) {
        return Err(PoseError::DegenerateCorners);
    }
    Ok(Pose6DoF::new(UnitQuaternion::from_rotation_matrix(&rot), t, 1.0))
}

/// Least-squares `t` minimizing the algebraic reprojection residual
/// `x·(RX + t)_z − (RX + t)_x` (and the same for y).
fn solve_translation(rot: &Rotation3<f64>, obj: &[Vec3; 4], img: &[[f64; 2]; 4]) -> Option<Vec3> {
    let mut ata = Matrix3::zeros();
    let mut atb = Vec3::zeros();
    for (p, x) in obj.iter().zip(img) {
        let q = rot * p;
        let rows = [
            (Vec3::new(-1.0, 0.0, x[0]), q.x - x[0] * q.z),
            (Vec3::new(0.0, -1.0, x[1]), q.y - x[1] * q.z),
        ];
        for (a, b) in rows {
            ata += a * a.transpose();
            atb += a * b;
        }
    }
    ata.try_inverse().map(|inv| inv * atb)
}

/// Projects the marker corners under `pose`.
pub fn project_corners(pose: &Pose6DoF, side_mm: f64, intr: &CameraIntrinsics) -> Option<[[f64; 2]; 4]> {
    let c = marker_corners(side_mm);
    let mut out = [[0.0; 2]; 4];
    for i in 0..4 {
        out[i] = intr.project(&pose.apply(&c[i]))?;
    }
    Some(out)
}

/// Root-mean-square pixel distance between two corner sets.
pub fn corner_rms(a: &[[f64; 2]; 4], b: &[[f64; 2]; 4]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| sq(p[0] - q[0]) + sq(p[1] - q[1]))
        .sum();
    sqrt(s / 4.0)
}

/// Reprojection RMS of `pose` against observed corners.
pub fn reprojection_rms(pose: &Pose6DoF, side_mm: f64, intr: &CameraIntrinsics, corners: &[[f64; 2]; 4]) -> f64 {
    match project_corners(pose, side_mm, intr) {
        Some(p) => corner_rms(&p, corners),
        None => f64::INFINITY,
    }
}

/// Angle in degrees of the relative rotation between two poses.
pub fn rotation_error_deg(a: &Pose6DoF, b: &Pose6DoF) -> f64 {
    a.rotation.angle_to(&b.rotation).to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::DEG;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::centered(1280, 960, 1400.0)
    }

    #[test]
    fn homography_maps_correspondences() {
        let src = [[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
        let dst = [[10.0, 12.0], [14.0, 80.0], [90.0, 70.0], [85.0, 5.0]];
        let h = homography(&src, &dst).unwrap();
        for i in 0..4 {
            let p = apply_homography(&h, src[i]);
            assert!((p[0] - dst[i][0]).abs() < 1e-9 && (p[1] - dst[i][1]).abs() < 1e-9);
        }
    }

    #[test]
    fn fronto_parallel_pose() {
        let truth = Pose6DoF::from_translation(Vec3::new(0.0, 0.0, 500.0));
        let c = project_corners(&truth, 50.0, &intr()).unwrap();
        let p = estimate_pose(&c, 50.0, &intr()).unwrap();
        assert!((p.translation - truth.translation).norm() < 0.02 * 500.0);
        assert!(rotation_error_deg(&p, &truth) < 2.0);
        assert!(reprojection_rms(&p, 50.0, &intr(), &c) < 1e-6);
    }

    #[test]
    fn twice_the_apparent_size_halves_distance() {
        let k = intr();
        let truth = Pose6DoF::from_translation(Vec3::new(0.0, 0.0, 800.0));
        let c = project_corners(&truth, 50.0, &k).unwrap();
        let scaled = c.map(|p| [k.cx + 2.0 * (p[0] - k.cx), k.cy + 2.0 * (p[1] - k.cy)]);
        let p1 = estimate_pose(&c, 50.0, &k).unwrap();
        let p2 = estimate_pose(&scaled, 50.0, &k).unwrap();
        assert!((p2.translation.z / p1.translation.z - 0.5).abs() < 0.01);
    }

    #[test]
    fn tilted_pose_is_exact_without_noise() {
        let rot = UnitQuaternion::from_axis_angle(&Vec3::x_axis(), 50.0 * DEG)
            * UnitQuaternion::from_axis_angle(&Vec3::z_axis(), 20.0 * DEG);
        let truth = Pose6DoF::new(rot, Vec3::new(40.0, -30.0, 600.0), 1.0);
        let c = project_corners(&truth, 50.0, &intr()).unwrap();
        let p = estimate_pose(&c, 50.0, &intr()).unwrap();
        assert!(rotation_error_deg(&p, &truth) < 1e-6);
        assert!((p.translation - truth.translation).norm() < 1e-6);
        let r = p.rotation.to_rotation_matrix().into_inner();
        assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-9);
    }

    #[test]
    fn collinear_corners_rejected() {
        let c = [[0.0, 0.0], [10.0, 10.0], [20.0, 20.0], [30.0, 30.0]];
        assert_eq!(estimate_pose(&c, 50.0, &intr()), Err(PoseError::DegenerateCorners));
        let c = [[0.0, 0.0], [10.0, 0.0], [20.0, 0.0], [5.0, 30.0]];
        assert_eq!(estimate_pose(&c, 50.0, &intr()), Err(PoseError::DegenerateCorners));
    }
}
