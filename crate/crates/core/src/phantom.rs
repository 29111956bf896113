//! Synthetic cylinder phantoms with known ground truth.
//!
//! Voxel values use a partial-volume ramp: occupancy is
//! `clamp(0.5 + min(r - d_axis, t, L - t), 0, 1)` (all in voxels), where
//! `d_axis` is the distance to the cylinder axis and `t` the axial position
//! from the start cap. The half-occupancy surface is therefore the exact
//! cylinder, which is what the extraction's half-maximum measurements
//! recover.
//!
//! Randomness comes from `ChaCha8Rng` seeded with a `u64`, so a seed fully
//! determines the phantom on every platform.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::math::{acos, cos, floor, log, sin, sqrt, Vec3, DEG};
use crate::table::{FiberRecord, FiberTable};
use crate::volume::{Dtype, Volume, VolumeMeta};

/// A cylinder in voxel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub radius: f64,
}

impl Cylinder {
    pub fn length(&self) -> f64 {
        self.axis().norm()
    }

    fn axis(&self) -> Vec3 {
        Vec3::from_fn(|i, _| self.end[i] - self.start[i])
    }

    pub fn midpoint(&self) -> [f64; 3] {
        core::array::from_fn(|i| 0.5 * (self.start[i] + self.end[i]))
    }

    /// Partial-volume occupancy of a voxel center.
    pub fn occupancy(&self, p: [f64; 3]) -> f64 {
        let a = self.axis();
        let len = a.norm();
        if len == 0.0 {
            return 0.0;
        }
        let a = a / len;
        let rel = Vec3::from_fn(|i, _| p[i] - self.start[i]);
        let t = rel.dot(&a);
        let radial = (rel - a * t).norm();
        let m = (self.radius - radial).min(t).min(len - t);
        (0.5 + m).clamp(0.0, 1.0)
    }

    /// Shortest distance between the two axis segments.
    pub fn axis_distance(&self, other: &Cylinder) -> f64 {
        segment_distance(
            Vec3::from(self.start),
            Vec3::from(self.end),
            Vec3::from(other.start),
            Vec3::from(other.end),
        )
    }
}

fn segment_distance(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let (s, t);
    if a <= 1e-12 && e <= 1e-12 {
        return r.norm();
    }
    if a <= 1e-12 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-12 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-12 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub dtype: Dtype,
    pub foreground: f64,
    pub background: f64,
    /// Standard deviation of additive Gaussian noise (raw units).
    pub noise: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            dims: [128, 128, 128],
            spacing: [1.0; 3],
            dtype: Dtype::Uint8,
            foreground: 200.0,
            background: 20.0,
            noise: 0.0,
            seed: 0,
        }
    }
}

/// Ranges for randomly placed cylinders (voxels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderRanges {
    pub radius: (f64, f64),
    pub length: (f64, f64),
    /// Minimum free gap between cylinder surfaces.
    pub clearance: f64,
    /// Minimum distance between any cylinder surface and the volume border.
    pub margin: f64,
}

impl Default for CylinderRanges {
    fn default() -> Self {
        Self {
            radius: (2.0, 4.0),
            length: (20.0, 60.0),
            clearance: 4.0,
            margin: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhantomError {
    #[error("could not place cylinder {placed} of {requested} after {attempts} attempts")]
    Crowded {
        placed: usize,
        requested: usize,
        attempts: usize,
    },
    #[error("invalid phantom parameters: {0}")]
    Invalid(String),
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Places `count` random, mutually non-overlapping cylinders with uniform
/// random orientation.
pub fn random_cylinders(
    dims: [usize; 3],
    count: usize,
    ranges: &CylinderRanges,
    seed: u64,
) -> Result<Vec<Cylinder>, PhantomError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Cylinder> = Vec::with_capacity(count);
    let max_attempts = 20_000 * count.max(1);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > max_attempts {
            return Err(PhantomError::Crowded {
                placed: out.len(),
                requested: count,
                attempts: max_attempts,
            });
        }
        let radius = uniform(&mut rng, ranges.radius);
        let length = uniform(&mut rng, ranges.length);
        let z: f64 = rng.random_range(-1.0..1.0);
        let az: f64 = rng.random_range(0.0..360.0) * DEG;
        let s = sqrt(1.0 - z * z);
        let dir = Vec3::new(s * cos(az), s * sin(az), z);
        let half = dir * (0.5 * length);
        let pad = radius + ranges.margin;
        let mut centre = [0.0; 3];
        let mut fits = true;
        for i in 0..3 {
            let lo = pad + half[i].abs();
            let hi = dims[i] as f64 - 1.0 - pad - half[i].abs();
            if hi <= lo {
                fits = false;
                break;
            }
            centre[i] = rng.random_range(lo..hi);
        }
        if !fits {
            continue;
        }
        let c = Cylinder {
            start: core::array::from_fn(|i| centre[i] - half[i]),
            end: core::array::from_fn(|i| centre[i] + half[i]),
            radius,
        };
        if out
            .iter()
            .all(|o| c.axis_distance(o) >= c.radius + o.radius + ranges.clearance)
        {
            out.push(c);
        }
    }
    Ok(out)
}

/// Rasterizes cylinders into a volume (voxel value = background +
/// (foreground − background) · max occupancy, plus optional noise, rounded
/// and clamped for integer dtypes).
pub fn render_cylinders(spec: &PhantomSpec, cylinders: &[Cylinder]) -> Result<Volume, PhantomError> {
    if spec.dims.contains(&0) {
        return Err(PhantomError::Invalid("dims must be positive".into()));
    }
    let [dx, dy, dz] = spec.dims;
    let mut occ = vec![0f32; dx * dy * dz];
    for c in cylinders {
        let pad = c.radius + 1.0;
        let lo: [usize; 3] = core::array::from_fn(|i| {
            floor(c.start[i].min(c.end[i]) - pad).max(0.0) as usize
        });
        let hi: [usize; 3] = core::array::from_fn(|i| {
            (floor(c.start[i].max(c.end[i]) + pad) as usize + 1).min(spec.dims[i])
        });
        for z in lo[2]..hi[2] {
            for y in lo[1]..hi[1] {
                for x in lo[0]..hi[0] {
                    let o = c.occupancy([x as f64, y as f64, z as f64]) as f32;
                    let i = x + dx * (y + dy * z);
                    if o > occ[i] {
                        occ[i] = o;
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let span = spec.foreground - spec.background;
    let max = match spec.dtype {
        Dtype::Uint8 => u8::MAX as f64,
        Dtype::Uint16 => u16::MAX as f64,
        Dtype::Float32 => f64::INFINITY,
    };
    let data: Vec<f32> = occ
        .iter()
        .map(|&o| {
            let mut v = spec.background + span * o as f64;
            if spec.noise > 0.0 {
                v += spec.noise * gaussian(&mut rng);
            }
            if spec.dtype.is_integer() {
                floor(v + 0.5).clamp(0.0, max) as f32
            } else {
                v as f32
            }
        })
        .collect();
    let mut meta = VolumeMeta::new(spec.dims, spec.dtype);
    meta.spacing = spec.spacing;
    Volume::from_values(meta, data).map_err(|e| PhantomError::Invalid(alloc::format!("{e}")))
}

/// Standard normal deviate (Box–Muller).
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    sqrt(-2.0 * log(u1)) * cos(2.0 * core::f64::consts::PI * u2)
}

/// Ground-truth record for a cylinder (voxel-space input, mm output).
pub fn ground_truth(c: &Cylinder, id: u64, spacing: [f64; 3], origin: [f64; 3]) -> FiberRecord {
    let to_mm = |p: [f64; 3]| -> [f64; 3] { core::array::from_fn(|i| origin[i] + p[i] * spacing[i]) };
    let start = to_mm(c.start);
    let end = to_mm(c.end);
    let chord = Vec3::from_fn(|i, _| end[i] - start[i]);
    let length = chord.norm();
    // Radius in mm for isotropic spacing; the mean spacing otherwise.
    let diameter = 2.0 * c.radius * (spacing[0] + spacing[1] + spacing[2]) / 3.0;
    let mut d = chord / length;
    if d.z < 0.0 || (d.z == 0.0 && (d.y < 0.0 || (d.y == 0.0 && d.x < 0.0))) {
        d = -d;
    }
    let mut phi = libm::atan2(d.y, d.x) / DEG;
    if phi < 0.0 {
        phi += 360.0;
    }
    if phi >= 360.0 {
        phi = 0.0;
    }
    FiberRecord {
        id,
        start,
        end,
        straight_length: length,
        curved_length: length,
        curvature_ratio: 1.0,
        diameter,
        surface_area: core::f64::consts::PI * diameter * length,
        volume: core::f64::consts::PI * 0.25 * diameter * diameter * length,
        theta: acos(d.z.clamp(-1.0, 1.0)) / DEG,
        phi,
        cog: core::array::from_fn(|i| 0.5 * (start[i] + end[i])),
        point_count: 2,
        mean_tubularity: 0.0,
    }
}

/// Random phantom plus its ground-truth table.
pub fn generate(
    spec: &PhantomSpec,
    count: usize,
    ranges: &CylinderRanges,
) -> Result<(Volume, Vec<Cylinder>, FiberTable), PhantomError> {
    let cylinders = random_cylinders(spec.dims, count, ranges, spec.seed)?;
    let volume = render_cylinders(spec, &cylinders)?;
    let records = cylinders
        .iter()
        .enumerate()
        .map(|(i, c)| ground_truth(c, i as u64 + 1, spec.spacing, [0.0; 3]))
        .collect();
    let table = FiberTable::new(records).map_err(|e| PhantomError::Invalid(alloc::format!("{e}")))?;
    Ok((volume, cylinders, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupancy_ramp() {
        let c = Cylinder {
            start: [0.0, 0.0, 0.0],
            end: [0.0, 0.0, 10.0],
            radius: 2.0,
        };
        assert_eq!(c.occupancy([0.0, 0.0, 5.0]), 1.0);
        assert_eq!(c.occupancy([2.0, 0.0, 5.0]), 0.5);
        assert_eq!(c.occupancy([0.0, 0.0, 10.0]), 0.5);
        assert_eq!(c.occupancy([4.0, 0.0, 5.0]), 0.0);
    }

    #[test]
    fn segment_distances() {
        let a = Cylinder {
            start: [0.0; 3],
            end: [0.0, 0.0, 10.0],
            radius: 1.0,
        };
        let b = Cylinder {
            start: [3.0, 0.0, 0.0],
            end: [3.0, 0.0, 10.0],
            radius: 1.0,
        };
        assert!((a.axis_distance(&b) - 3.0).abs() < 1e-12);
        let c = Cylinder {
            start: [-5.0, 4.0, 5.0],
            end: [5.0, 4.0, 5.0],
            radius: 1.0,
        };
        assert!((a.axis_distance(&c) - 4.0).abs() < 1e-12);
        let d = Cylinder {
            start: [0.0, 0.0, 13.0],
            end: [0.0, 0.0, 20.0],
            radius: 1.0,
        };
        assert!((a.axis_distance(&d) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_placement_is_seeded_and_disjoint() {
        let r = CylinderRanges::default();
        let a = random_cylinders([128; 3], 20, &r, 7).unwrap();
        let b = random_cylinders([128; 3], 20, &r, 7).unwrap();
        assert_eq!(a, b);
        for (i, x) in a.iter().enumerate() {
            assert!((2.0..4.0).contains(&x.radius));
            assert!((x.length() - 20.0) > -1e-9 && x.length() < 60.0 + 1e-9);
            for y in &a[i + 1..] {
                assert!(x.axis_distance(y) >= x.radius + y.radius + r.clearance);
            }
        }
        assert_ne!(a, random_cylinders([128; 3], 20, &r, 8).unwrap());
    }

    #[test]
    fn crowded_volume_errors() {
        let r = CylinderRanges::default();
        assert!(matches!(
            random_cylinders([16; 3], 3, &r, 1),
            Err(PhantomError::Crowded { .. })
        ));
    }

    #[test]
    fn render_values() {
        let spec = PhantomSpec {
            dims: [16, 16, 16],
            ..Default::default()
        };
        let c = Cylinder {
            start: [8.0, 8.0, 2.0],
            end: [8.0, 8.0, 12.0],
            radius: 3.0,
        };
        let v = render_cylinders(&spec, &[c]).unwrap();
        assert_eq!(v.voxel(8, 8, 6), 200.0);
        assert_eq!(v.voxel(0, 0, 0), 20.0);
        assert_eq!(v.voxel(11, 8, 6), 110.0);
        let gt = ground_truth(&c, 1, [0.5; 3], [0.0; 3]);
        assert_eq!(gt.straight_length, 5.0);
        assert_eq!(gt.diameter, 3.0);
        gt.validate().unwrap();
    }
}
