//! Software raycasting: maximum intensity projection and unshaded
//! emission/absorption volume rendering.
//!
//! Conventions:
//! - World coordinates are the volume's mm frame; voxel `(i, j, k)` sits at
//!   `origin + (i, j, k) * spacing` and the sampled box is the hull of voxel
//!   centers. Outside it the field is 0.
//! - The camera looks down its local −z with +y up and +x right. Only the
//!   rotation and translation of its pose are used.
//! - Colors map linearly to bytes (`round(255 · c)`), no gamma.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::geometry::Pose6DoF;
use crate::math::{ceil, clamp01, cos, floor, pow, sin, tan, to_u8, Vec3, DEG};
use crate::par;
use crate::volume::Volume;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("invalid transfer function: {0}")]
    BadTransferFunction(&'static str),
    #[error("invalid camera: {0}")]
    BadCamera(&'static str),
}

/// Pinhole camera; `pose` maps camera coordinates to world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub pose: Pose6DoF,
    /// Vertical field of view, degrees.
    pub fov_y: f64,
    /// Near clip distance (mm).
    pub near: f64,
}

impl Camera {
    pub fn new(pose: Pose6DoF, fov_y: f64, near: f64) -> Result<Self, RenderError> {
        if !(fov_y > 0.0 && fov_y < 180.0) {
            return Err(RenderError::BadCamera("fov must be in (0, 180) degrees"));
        }
        if !(near > 0.0) {
            return Err(RenderError::BadCamera("near must be positive"));
        }
        Ok(Self { pose, fov_y, near })
    }

    /// Camera at `eye` looking at `target`. `up` is replaced by another
    /// axis when nearly parallel to the view direction.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, fov_y: f64) -> Self {
        let f = (target - eye).normalize();
        let mut up = up.normalize();
        if f.dot(&up).abs() > 0.999 {
            up = if f.z.abs() < 0.9 { Vec3::z() } else { Vec3::y() };
        }
        let right = f.cross(&up).normalize();
        let true_up = right.cross(&f);
        let m = Matrix3::from_columns(&[right, true_up, -f]);
        let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m));
        Self {
            pose: Pose6DoF {
                rotation,
                translation: eye,
                scale: 1.0,
            },
            fov_y,
            near: 1e-3,
        }
    }

    /// Orbit camera around a volume: `yaw` turns about +z, `pitch` raises
    /// the eye above the xy-plane, both in degrees. At yaw = pitch = 0 the
    /// eye sits on the −y side looking towards +y with +z up.
    pub fn orbit(v: &Volume, yaw: f64, pitch: f64, distance: Option<f64>, fov_y: f64) -> Self {
        let (center, diag) = bounds_center(v);
        let d = distance.unwrap_or_else(|| 0.6 * diag / tan(0.5 * fov_y * DEG) + 0.5 * diag);
        let (y, p) = (yaw * DEG, pitch * DEG);
        let eye = center + Vec3::new(cos(p) * sin(y), -cos(p) * cos(y), sin(p)) * d;
        Self::look_at(eye, center, Vec3::z(), fov_y)
    }

    /// World-space ray through the center of pixel `(i, j)`.
    pub fn ray(&self, i: usize, j: usize, w: usize, h: usize) -> (Vec3, Vec3) {
        let th = tan(0.5 * self.fov_y * DEG);
        let aspect = w as f64 / h as f64;
        let x = (2.0 * (i as f64 + 0.5) / w as f64 - 1.0) * th * aspect;
        let y = (1.0 - 2.0 * (j as f64 + 0.5) / h as f64) * th;
        let d = Vec3::new(x, y, -1.0).normalize();
        (self.pose.translation, self.pose.rotation * d)
    }

    /// Continuous pixel coordinates of a world point (pixel centers at
    /// `k + 0.5`), or `None` behind the camera.
    pub fn project(&self, p: &Vec3, w: usize, h: usize) -> Option<(f64, f64)> {
        let c = self.pose.rotation.inverse() * (p - self.pose.translation);
        if c.z >= 0.0 {
            return None;
        }
        let th = tan(0.5 * self.fov_y * DEG);
        let aspect = w as f64 / h as f64;
        let x = c.x / -c.z / (th * aspect);
        let y = c.y / -c.z / th;
        Some((0.5 * (x + 1.0) * w as f64, 0.5 * (1.0 - y) * h as f64))
    }
}

fn bounds(v: &Volume) -> (Vec3, Vec3) {
    let m = v.meta();
    let lo = Vec3::from(m.origin);
    let hi = Vec3::from_fn(|i, _| m.origin[i] + (m.dims[i] - 1) as f64 * m.spacing[i]);
    (lo, hi)
}

fn bounds_center(v: &Volume) -> (Vec3, f64) {
    let (lo, hi) = bounds(v);
    ((lo + hi) * 0.5, (hi - lo).norm().max(v.meta().min_spacing()))
}

/// Ray parameter interval inside the sampled box, clipped to `t >= near`.
/// Rays parallel to a slab outside it, or grazing it, miss.
pub fn intersect_box(origin: &Vec3, dir: &Vec3, lo: &Vec3, hi: &Vec3, near: f64) -> Option<(f64, f64)> {
    let mut t0 = near;
    let mut t1 = f64::INFINITY;
    for i in 0..3 {
        if dir[i] == 0.0 {
            if origin[i] < lo[i] || origin[i] > hi[i] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dir[i];
        let (mut a, mut b) = ((lo[i] - origin[i]) * inv, (hi[i] - origin[i]) * inv);
        if a > b {
            core::mem::swap(&mut a, &mut b);
        }
        t0 = t0.max(a);
        t1 = t1.min(b);
    }
    (t1 > t0).then_some((t0, t1))
}

/// Trilinear interpolation of normalized intensity at a world point (mm);
/// 0 outside the hull of voxel centers.
pub fn sample_trilinear(v: &Volume, p: &Vec3) -> f64 {
    let q = v.world_to_voxel([p.x, p.y, p.z]);
    let dims = v.dims();
    // Snap rounding noise at the faces so boundary samples stay inside.
    let q: [f64; 3] = core::array::from_fn(|i| {
        let max = (dims[i] - 1) as f64;
        if q[i] < 0.0 && q[i] > -1e-9 {
            0.0
        } else if q[i] > max && q[i] < max + 1e-9 {
            max
        } else {
            q[i]
        }
    });
    match v.trilinear_raw(q) {
        Some(raw) => v.normalize(raw),
        None => 0.0,
    }
}

/// RGBA color with components in `[0, 1]`.
pub type Rgba = [f64; 4];

/// Piecewise-linear map from normalized intensity to color and opacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, Rgba)>", into = "Vec<(f64, Rgba)>")]
pub struct TransferFunction {
    points: Vec<(f64, Rgba)>,
}

impl TryFrom<Vec<(f64, Rgba)>> for TransferFunction {
    type Error = RenderError;

    fn try_from(points: Vec<(f64, Rgba)>) -> Result<Self, Self::Error> {
        TransferFunction::new(points)
    }
}

impl From<TransferFunction> for Vec<(f64, Rgba)> {
    fn from(tf: TransferFunction) -> Self {
        tf.points
    }
}

impl TransferFunction {
    /// Control points must start at 0, end at 1, strictly increase, and
    /// carry components in `[0, 1]`.
    pub fn new(points: Vec<(f64, Rgba)>) -> Result<Self, RenderError> {
        use RenderError::BadTransferFunction as Bad;
        if points.len() < 2 {
            return Err(Bad("needs at least two control points"));
        }
        if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
            return Err(Bad("control points must span [0, 1]"));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Bad("intensities must be strictly increasing"));
        }
        if points
            .iter()
            .any(|(_, c)| c.iter().any(|x| !(0.0..=1.0).contains(x)))
        {
            return Err(Bad("color components must lie in [0, 1]"));
        }
        Ok(Self { points })
    }

    /// Grayscale ramp with opacity rising linearly from `alpha_lo` to
    /// `alpha_hi`.
    pub fn ramp(alpha_lo: f64, alpha_hi: f64) -> Self {
        Self {
            points: vec![
                (0.0, [0.0, 0.0, 0.0, alpha_lo]),
                (1.0, [1.0, 1.0, 1.0, alpha_hi]),
            ],
        }
    }

    /// The same color and opacity everywhere.
    pub fn constant(c: Rgba) -> Self {
        Self {
            points: vec![(0.0, c), (1.0, c)],
        }
    }

    pub fn points(&self) -> &[(f64, Rgba)] {
        &self.points
    }

    pub fn eval(&self, x: f64) -> Rgba {
        let x = clamp01(x);
        let k = self.points.partition_point(|p| p.0 <= x);
        if k == 0 {
            return self.points[0].1;
        }
        if k >= self.points.len() {
            return self.points[self.points.len() - 1].1;
        }
        let (x0, c0) = self.points[k - 1];
        let (x1, c1) = self.points[k];
        let t = (x - x0) / (x1 - x0);
        core::array::from_fn(|i| c0[i] + (c1[i] - c0[i]) * t)
    }

    /// Copy with every opacity multiplied by `f` (clamped to 1).
    pub fn scaled_alpha(&self, f: f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|(x, c)| (*x, [c[0], c[1], c[2], (c[3] * f).min(1.0)]))
                .collect(),
        }
    }
}

/// RGBA8 image, row-major from the top-left pixel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRGBA {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl ImageRGBA {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 4] {
        let i = 4 * (x + self.width * y);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2], self.pixels[i + 3]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    /// Sample spacing along rays (mm); `None` means half the smallest voxel
    /// spacing.
    pub step: Option<f64>,
    /// Step length at which transfer-function opacities apply unchanged;
    /// `None` means half the smallest voxel spacing.
    pub reference_step: Option<f64>,
    pub background: Rgba,
    /// Front-to-back compositing stops once accumulated opacity reaches
    /// this value.
    pub early_termination: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            step: None,
            reference_step: None,
            background: [0.0, 0.0, 0.0, 1.0],
            early_termination: 0.99,
        }
    }
}

impl RenderOptions {
    fn step_for(&self, v: &Volume) -> f64 {
        self.step.unwrap_or(0.5 * v.meta().min_spacing())
    }

    fn reference_for(&self, v: &Volume) -> f64 {
        self.reference_step.unwrap_or(0.5 * v.meta().min_spacing())
    }
}

fn render_rows<F>(w: usize, h: usize, shade: F) -> ImageRGBA
where
    F: Fn(usize, usize) -> [u8; 4] + Sync + Send,
{
    assert!(w >= 1 && h >= 1, "image must be at least 1x1");
    let rows = par::map_range(h, |j| {
        let mut row = Vec::with_capacity(4 * w);
        for i in 0..w {
            row.extend_from_slice(&shade(i, j));
        }
        row
    });
    ImageRGBA {
        width: w,
        height: h,
        pixels: rows.concat(),
    }
}

fn rgba8(c: Rgba) -> [u8; 4] {
    c.map(to_u8)
}

/// Straight-alpha result of compositing premultiplied `color` with opacity
/// `alpha` over the background.
fn over_background(color: [f64; 3], alpha: f64, bg: &Rgba) -> Rgba {
    let out_a = alpha + (1.0 - alpha) * bg[3];
    if out_a <= 0.0 {
        return [0.0; 4];
    }
    let mut out = [0.0; 4];
    for k in 0..3 {
        out[k] = (color[k] + (1.0 - alpha) * bg[3] * bg[k]) / out_a;
    }
    out[3] = out_a;
    out
}

/// Largest sample along one ray, or `None` when the ray misses the volume.
///
/// Samples sit at `t_near + k · step` plus the exit point.
pub fn ray_max(v: &Volume, origin: &Vec3, dir: &Vec3, near: f64, step: f64) -> Option<f64> {
    let (lo, hi) = bounds(v);
    let (t0, t1) = intersect_box(origin, dir, &lo, &hi, near)?;
    let n = floor((t1 - t0) / step) as usize;
    let mut m = 0.0f64;
    for k in 0..=n {
        let t = t0 + k as f64 * step;
        m = m.max(sample_trilinear(v, &(origin + dir * t)));
    }
    m = m.max(sample_trilinear(v, &(origin + dir * t1)));
    Some(m)
}

pub fn render_mip(v: &Volume, cam: &Camera, w: usize, h: usize) -> ImageRGBA {
    render_mip_with(v, cam, w, h, &RenderOptions::default())
}

/// Maximum intensity projection: gray level = largest normalized sample
/// along the pixel's ray, background where the ray misses the volume.
pub fn render_mip_with(v: &Volume, cam: &Camera, w: usize, h: usize, opts: &RenderOptions) -> ImageRGBA {
    let step = opts.step_for(v);
    render_rows(w, h, |i, j| {
        let (o, d) = cam.ray(i, j, w, h);
        match ray_max(v, &o, &d, cam.near, step) {
            Some(m) => rgba8([m, m, m, 1.0]),
            None => rgba8(opts.background),
        }
    })
}

/// Front-to-back emission/absorption integral along one ray, returning
/// premultiplied color and accumulated opacity.
///
/// The ray segment inside the volume is cut into `ceil(L / step)` pieces;
/// each piece is sampled at its midpoint and contributes opacity
/// `1 − (1 − α)^(ℓ / reference_step)` for its length `ℓ` (the last piece may
/// be shorter).
pub fn ray_composite(
    v: &Volume,
    tf: &TransferFunction,
    origin: &Vec3,
    dir: &Vec3,
    near: f64,
    opts: &RenderOptions,
) -> Option<([f64; 3], f64)> {
    let (lo, hi) = bounds(v);
    let (t0, t1) = intersect_box(origin, dir, &lo, &hi, near)?;
    let step = opts.step_for(v);
    let reference = opts.reference_for(v);
    let n = ceil((t1 - t0) / step) as usize;
    let mut color = [0.0; 3];
    let mut alpha = 0.0;
    for k in 0..n {
        let a = t0 + k as f64 * step;
        let b = (a + step).min(t1);
        if b <= a {
            break;
        }
        let s = sample_trilinear(v, &(origin + dir * (0.5 * (a + b))));
        let c = tf.eval(s);
        if c[3] <= 0.0 {
            continue;
        }
        let sa = 1.0 - pow(1.0 - c[3].min(1.0), (b - a) / reference);
        let weight = (1.0 - alpha) * sa;
        for q in 0..3 {
            color[q] += weight * c[q];
        }
        alpha += weight;
        if alpha >= opts.early_termination {
            break;
        }
    }
    Some((color, alpha))
}

pub fn render_dvr(v: &Volume, tf: &TransferFunction, cam: &Camera, w: usize, h: usize) -> ImageRGBA {
    render_dvr_with(v, tf, cam, w, h, &RenderOptions::default())
}

/// Direct volume rendering with a piecewise-linear transfer function, flat
/// (unshaded) emission, background composited last.
pub fn render_dvr_with(
    v: &Volume,
    tf: &TransferFunction,
    cam: &Camera,
    w: usize,
    h: usize,
    opts: &RenderOptions,
) -> ImageRGBA {
    render_rows(w, h, |i, j| {
        let (o, d) = cam.ray(i, j, w, h);
        match ray_composite(v, tf, &o, &d, cam.near, opts) {
            Some((c, a)) => rgba8(over_background(c, a, &opts.background)),
            None => rgba8(opts.background),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Dtype, VolumeMeta};

    fn vol(dims: [usize; 3], f: impl Fn(usize, usize, usize) -> f32) -> Volume {
        let mut data = Vec::new();
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        Volume::with_window(VolumeMeta::new(dims, Dtype::Float32), data, (0.0, 1.0)).unwrap()
    }

    #[test]
    fn voxel_centers_are_exact() {
        let v = vol([4, 4, 4], |x, y, z| ((x * 7 + y * 3 + z) % 5) as f32 / 4.0);
        for (x, y, z) in [(0, 0, 0), (3, 2, 1), (1, 3, 3)] {
            let p = Vec3::new(x as f64, y as f64, z as f64);
            assert_eq!(sample_trilinear(&v, &p), v.normalized(x, y, z));
        }
    }

    #[test]
    fn outside_is_zero() {
        let v = vol([4, 4, 4], |_, _, _| 1.0);
        assert_eq!(sample_trilinear(&v, &Vec3::new(-0.5, 1.0, 1.0)), 0.0);
        assert_eq!(sample_trilinear(&v, &Vec3::new(1.0, 3.01, 1.0)), 0.0);
        assert_eq!(sample_trilinear(&v, &Vec3::new(3.0, 3.0, 3.0)), 1.0);
    }

    #[test]
    fn box_intersection() {
        let lo = Vec3::zeros();
        let hi = Vec3::new(2.0, 2.0, 2.0);
        let (a, b) = intersect_box(&Vec3::new(1.0, 1.0, 5.0), &-Vec3::z(), &lo, &hi, 0.1).unwrap();
        assert!((a - 3.0).abs() < 1e-12 && (b - 5.0).abs() < 1e-12);
        assert!(intersect_box(&Vec3::new(3.0, 1.0, 5.0), &-Vec3::z(), &lo, &hi, 0.1).is_none());
        // Starting inside clips at the near plane.
        let (a, _) = intersect_box(&Vec3::new(1.0, 1.0, 1.0), &Vec3::x(), &lo, &hi, 0.25).unwrap();
        assert_eq!(a, 0.25);
        // Pointing away.
        assert!(intersect_box(&Vec3::new(1.0, 1.0, 5.0), &Vec3::z(), &lo, &hi, 0.1).is_none());
    }

    #[test]
    fn transfer_function_validation_and_eval() {
        assert!(TransferFunction::new(vec![(0.0, [0.0; 4])]).is_err());
        assert!(TransferFunction::new(vec![(0.1, [0.0; 4]), (1.0, [0.0; 4])]).is_err());
        assert!(TransferFunction::new(vec![(0.0, [0.0; 4]), (0.0, [0.0; 4]), (1.0, [0.0; 4])]).is_err());
        assert!(TransferFunction::new(vec![(0.0, [0.0; 4]), (1.0, [1.5, 0.0, 0.0, 0.0])]).is_err());
        let tf = TransferFunction::new(vec![
            (0.0, [0.0, 0.0, 0.0, 0.0]),
            (0.5, [1.0, 0.0, 0.0, 0.5]),
            (1.0, [1.0, 1.0, 1.0, 1.0]),
        ])
        .unwrap();
        assert_eq!(tf.eval(0.25), [0.5, 0.0, 0.0, 0.25]);
        assert_eq!(tf.eval(0.5), [1.0, 0.0, 0.0, 0.5]);
        assert_eq!(tf.eval(0.75), [1.0, 0.5, 0.5, 0.75]);
        assert_eq!(tf.eval(2.0), [1.0; 4]);
    }

    #[test]
    fn look_at_projects_target_to_center() {
        let cam = Camera::look_at(Vec3::new(3.0, -4.0, 2.0), Vec3::new(1.0, 1.0, 1.0), Vec3::z(), 40.0);
        let (x, y) = cam.project(&Vec3::new(1.0, 1.0, 1.0), 64, 48).unwrap();
        assert!((x - 32.0).abs() < 1e-9 && (y - 24.0).abs() < 1e-9);
        let (o, d) = cam.ray(10, 7, 64, 48);
        let (px, py) = cam.project(&(o + d * 5.0), 64, 48).unwrap();
        assert!((px - 10.5).abs() < 1e-9 && (py - 7.5).abs() < 1e-9);
    }

    #[test]
    fn zero_alpha_dvr_is_background() {
        let v = vol([6, 6, 6], |x, _, _| x as f32 / 5.0);
        let cam = Camera::orbit(&v, 30.0, 20.0, None, 45.0);
        let opts = RenderOptions {
            background: [0.2, 0.4, 0.6, 1.0],
            ..Default::default()
        };
        let tf = TransferFunction::constant([1.0, 1.0, 1.0, 0.0]);
        let img = render_dvr_with(&v, &tf, &cam, 9, 7, &opts);
        let bg = rgba8(opts.background);
        assert!(img.pixels.chunks(4).all(|p| p == bg));
    }
}
