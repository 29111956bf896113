//! Synthetic camera frames of planar markers for tests and demos.

use alloc::vec::Vec;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::code::{MarkerDescriptor, GRID};
use super::pose::CameraIntrinsics;
use super::GrayImage;
use crate::geometry::Pose6DoF;
use crate::math::{cos, fabs, floor, log, round, sqrt, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    /// Subsamples per pixel along each axis (area-averaged).
    pub supersample: usize,
    pub background: f64,
    pub black: f64,
    pub white: f64,
    /// White margin around each marker, in cells.
    pub quiet_zone: f64,
    /// Standard deviation of additive Gaussian noise, gray levels.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            supersample: 4,
            background: 128.0,
            black: 20.0,
            white: 235.0,
            quiet_zone: 1.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

struct Placed {
    rt: Matrix3<f64>,
    t: Vec3,
    n: Vec3,
    nt: f64,
    half: f64,
    cell: f64,
    quiet: f64,
    bits: [[bool; GRID]; GRID],
}

/// Renders markers placed by marker-to-camera poses. Where markers overlap
/// the nearest one wins.
pub fn render_frame(
    width: usize,
    height: usize,
    intr: &CameraIntrinsics,
    markers: &[(MarkerDescriptor, Pose6DoF)],
    opts: &SynthOptions,
) -> GrayImage {
    let placed: Vec<Placed> = markers
        .iter()
        .map(|(m, pose)| {
            let r = pose.rotation.to_rotation_matrix().into_inner();
            let n = r.column(2).into_owned();
            let cell = m.side_mm / GRID as f64;
            Placed {
                rt: r.transpose(),
                t: pose.translation,
                nt: n.dot(&pose.translation),
                n,
                half: m.side_mm / 2.0,
                cell,
                quiet: m.side_mm / 2.0 + opts.quiet_zone * cell,
                bits: m.bits,
            }
        })
        .collect();
    let s = opts.supersample.max(1);
    let inv = 1.0 / (s * s) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for sy in 0..s {
                let py = y as f64 - 0.5 + (sy as f64 + 0.5) / s as f64;
                for sx in 0..s {
                    let px = x as f64 - 0.5 + (sx as f64 + 0.5) / s as f64;
                    let d = Vec3::new((px - intr.cx) / intr.fx, (py - intr.cy) / intr.fy, 1.0);
                    acc += shade(&placed, &d, opts);
                }
            }
            let mut v = acc * inv;
            if opts.noise_sigma > 0.0 {
                v += opts.noise_sigma * gaussian(&mut rng);
            }
            pixels.push(round(v).clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage {
        width,
        height,
        pixels,
    }
}

fn shade(placed: &[Placed], d: &Vec3, opts: &SynthOptions) -> f64 {
    let mut best = f64::INFINITY;
    let mut value = opts.background;
    for m in placed {
        let denom = m.n.dot(d);
        if denom == 0.0 {
            continue;
        }
        let lambda = m.nt / denom;
        if !(lambda > 0.0) || lambda >= best {
            continue;
        }
        let q = m.rt * (d * lambda - m.t);
        if fabs(q.x) > m.quiet || fabs(q.y) > m.quiet {
            continue;
        }
        best = lambda;
        value = if fabs(q.x) < m.half && fabs(q.y) < m.half {
            let col = (floor((q.x + m.half) / m.cell) as usize).min(GRID - 1);
            let row = (floor((q.y + m.half) / m.cell) as usize).min(GRID - 1);
            if m.bits[row][col] {
                opts.white
            } else {
                opts.black
            }
        } else {
            opts.white
        };
    }
    value
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    sqrt(-2.0 * log(u1)) * cos(2.0 * core::f64::consts::PI * u2)
}
