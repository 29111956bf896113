//! Fiber extraction: Gaussian smoothing, Hessian ridge response, centerline
//! tracing and per-fiber characterization.
//!
//! The pipeline in [`trace_fibers`]:
//!
//! 1. blur with `sigma`;
//! 2. evaluate [`tubularity`] at every interior voxel, with `gamma` set to
//!    half the largest Hessian norm in the volume;
//! 3. seed at 26-neighbourhood maxima above `ridge_threshold`, strongest
//!    first (ties: lowest flat index);
//! 4. walk both ways along the smallest-|λ| eigenvector, re-centering each
//!    step with one Newton step in the cross-section plane;
//! 5. trim/extend both ends to the half-maximum of the axial intensity
//!    profile and measure a radius per point from perpendicular half-maximum
//!    widths on the unsmoothed data.

mod tubularity;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use tubularity::{tubularity, tubularity_values, TubularityParams};

use crate::filter::gaussian_blur;
use crate::hessian::{hessian_matrix, local_structure, symmetric_eigen, HessianEigen};
use crate::math::{acos, atan2, ceil, fabs, floor, sqrt, Vec3, DEG};
use crate::par;
use crate::table::{FiberRecord, FiberTable, TableError};
use crate::volume::Volume;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtractionError {
    #[error("invalid extraction config: {0}")]
    BadConfig(String),
    #[error("degenerate trace: start and end coincide")]
    DegenerateTrace,
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Extraction parameters. Lengths are in voxels unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    /// Gaussian scale.
    pub sigma: f64,
    /// Minimum tubularity to seed or continue a trace.
    pub ridge_threshold: f64,
    /// Tracing step, as a fraction of the smallest voxel spacing.
    pub step: f64,
    /// Traces shorter than this (mm) are dropped.
    pub min_length: f64,
    /// Largest direction change per step, degrees.
    pub max_angle: f64,
    /// Voxels within this radius of a trace can no longer seed.
    pub seed_suppression_radius: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            ridge_threshold: 0.05,
            step: 0.5,
            min_length: 5.0,
            max_angle: 30.0,
            seed_suppression_radius: 4.0,
        }
    }
}

impl ExtractionConfig {
    /// Defaults with `min_length` = 5 voxels of the given spacing (mm).
    pub fn for_spacing(min_spacing: f64) -> Self {
        Self {
            min_length: 5.0 * min_spacing,
            ..Self::default()
        }
    }

    /// Defaults with `sigma` and the suppression radius (`2 sigma`) tied
    /// together.
    pub fn with_sigma(self, sigma: f64) -> Self {
        Self {
            sigma,
            seed_suppression_radius: 2.0 * sigma,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), ExtractionError> {
        let bad = |m: &str| Err(ExtractionError::BadConfig(m.into()));
        if !(self.sigma > 0.0) {
            return bad("sigma must be > 0");
        }
        if !(self.ridge_threshold > 0.0) {
            return bad("ridge_threshold must be > 0");
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return bad("step must be in (0, 1]");
        }
        if !(self.min_length > 0.0) {
            return bad("min_length must be > 0");
        }
        if !(self.max_angle > 0.0 && self.max_angle < 90.0) {
            return bad("max_angle must be in (0, 90)");
        }
        if !(self.seed_suppression_radius > 0.0) {
            return bad("seed_suppression_radius must be > 0");
        }
        Ok(())
    }
}

/// A traced centerline in world coordinates (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberTrace {
    pub points: Vec<[f64; 3]>,
    /// Radius estimate per point (mm); NaN where no profile edge was found.
    pub radii: Vec<f64>,
    /// Tubularity per point.
    pub responses: Vec<f64>,
}

impl FiberTrace {
    pub fn arc_length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| dist(&w[0], &w[1]))
            .sum()
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    sqrt((0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum())
}

/// Tubularity evaluated over a whole (already smoothed) volume.
pub struct RidgeField {
    pub params: TubularityParams,
    pub response: Vec<f32>,
}

impl RidgeField {
    pub fn compute(v: &Volume) -> Self {
        let [dx, dy, dz] = v.dims();
        let plane = dx * dy;
        let interior = |x: usize, y: usize, z: usize| {
            x >= 1 && y >= 1 && z >= 1 && x + 1 < dx && y + 1 < dy && z + 1 < dz
        };
        let max_norm = par::map_range(dz, |z| {
            let mut m = 0.0f64;
            for y in 0..dy {
                for x in 0..dx {
                    if interior(x, y, z) {
                        m = m.max(hessian_matrix(v, x, y, z).norm());
                    }
                }
            }
            m
        })
        .into_iter()
        .fold(0.0, f64::max);
        let params = TubularityParams::from_max_norm(max_norm);
        let floor_norm = max_norm * 1e-9;
        let mut response = vec![0f32; v.data().len()];
        par::for_each_chunk(&mut response, plane, |z, out| {
            for y in 0..dy {
                for x in 0..dx {
                    if !interior(x, y, z) {
                        continue;
                    }
                    let h = hessian_matrix(v, x, y, z);
                    if h.norm() <= floor_norm {
                        continue;
                    }
                    let e = symmetric_eigen(&h);
                    out[x + dx * y] = tubularity(&e, &params) as f32;
                }
            }
        });
        Self { params, response }
    }
}

struct Tracer<'a> {
    smooth: &'a Volume,
    raw: &'a Volume,
    params: TubularityParams,
    cfg: &'a ExtractionConfig,
    spacing: Vec3,
    step_mm: f64,
    /// Trace label per voxel (0 = free).
    owner: Vec<u32>,
}

#[derive(Clone, Copy)]
struct Node {
    pos: [f64; 3],
    dir: Vec3,
    response: f64,
}

impl Tracer<'_> {
    fn structure(&self, p: [f64; 3]) -> Option<(HessianEigen, Vec3)> {
        let (h, g) = local_structure(self.smooth, p)?;
        Some((symmetric_eigen(&h), g))
    }

    /// One Newton step towards the intensity ridge inside the plane spanned
    /// by the two cross-section eigenvectors.
    fn recenter(&self, p: [f64; 3], e: &HessianEigen, g: &Vec3) -> [f64; 3] {
        if e.values[1] >= 0.0 || e.values[2] >= 0.0 {
            return p;
        }
        let mut delta = Vec3::zeros();
        for i in 1..3 {
            delta -= e.vectors[i] * (g.dot(&e.vectors[i]) / e.values[i]);
        }
        let max = 0.5 * self.step_mm.max(self.spacing.min());
        let n = delta.norm();
        if n > max {
            delta *= max / n;
        }
        self.offset(p, &delta)
    }

    /// Moves a voxel-space point by a physical (mm) displacement.
    fn offset(&self, p: [f64; 3], d: &Vec3) -> [f64; 3] {
        core::array::from_fn(|i| p[i] + d[i] / self.spacing[i])
    }

    fn voxel_of(&self, p: [f64; 3]) -> usize {
        let [dx, dy, _] = self.smooth.dims();
        let r = p.map(|c| floor(c + 0.5) as usize);
        r[0] + dx * (r[1] + dy * r[2])
    }

    fn node_at(&self, p: [f64; 3]) -> Option<Node> {
        let (e, g) = self.structure(p)?;
        let p = self.recenter(p, &e, &g);
        let (e, _) = self.structure(p)?;
        Some(Node {
            pos: p,
            dir: e.vectors[0],
            response: tubularity(&e, &self.params),
        })
    }

    fn walk(&self, start: &Node, forward: bool, label: u32) -> Vec<Node> {
        let mut out = Vec::new();
        let mut cur = *start;
        if !forward {
            cur.dir = -cur.dir;
        }
        let limit = {
            let d = self.smooth.dims();
            (4.0 * (d[0] + d[1] + d[2]) as f64 / self.cfg.step) as usize
        };
        for _ in 0..limit {
            let probe = self.offset(cur.pos, &(cur.dir * self.step_mm));
            let Some((e, g)) = self.structure(probe) else { break };
            let mut t = e.vectors[0];
            if t.dot(&cur.dir) < 0.0 {
                t = -t;
            }
            if crate::math::angle_between_deg(&t, &cur.dir, false) > self.cfg.max_angle {
                break;
            }
            let pos = self.recenter(probe, &e, &g);
            let Some((e2, _)) = self.structure(pos) else { break };
            let response = tubularity(&e2, &self.params);
            if response < self.cfg.ridge_threshold {
                break;
            }
            let owner = self.owner[self.voxel_of(pos)];
            if owner != 0 && owner != label {
                break;
            }
            let mut dir = e2.vectors[0];
            if dir.dot(&t) < 0.0 {
                dir = -dir;
            }
            let moved = sqrt(
                (0..3)
                    .map(|i| {
                        let d = (pos[i] - cur.pos[i]) * self.spacing[i];
                        d * d
                    })
                    .sum(),
            );
            if moved < 0.25 * self.step_mm {
                break;
            }
            cur = Node { pos, dir, response };
            out.push(cur);
        }
        out
    }

    fn claim(&mut self, pts: &[[f64; 3]], label: u32) {
        let [dx, dy, dz] = self.smooth.dims();
        let r = self.cfg.seed_suppression_radius;
        let ri = ceil(r) as i64;
        for p in pts {
            let c = p.map(|v| floor(v + 0.5) as i64);
            for oz in -ri..=ri {
                for oy in -ri..=ri {
                    for ox in -ri..=ri {
                        if ((ox * ox + oy * oy + oz * oz) as f64) > r * r {
                            continue;
                        }
                        let (x, y, z) = (c[0] + ox, c[1] + oy, c[2] + oz);
                        if x < 0 || y < 0 || z < 0 || x >= dx as i64 || y >= dy as i64 || z >= dz as i64 {
                            continue;
                        }
                        let i = x as usize + dx * (y as usize + dy * z as usize);
                        if self.owner[i] == 0 {
                            self.owner[i] = label;
                        }
                    }
                }
            }
        }
    }

    /// Half-maximum crossing of the raw profile starting at `p` along a
    /// physical direction. Returns the distance in mm.
    fn half_max_distance(&self, p: [f64; 3], dir: &Vec3, peak: f64, reach_mm: f64) -> Option<f64> {
        let ds = 0.05 * self.spacing.min();
        let n = (reach_mm / ds) as usize;
        let mut samples = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let q = self.offset(p, &(dir * (k as f64 * ds)));
            match self.raw.trilinear_raw(q) {
                Some(v) => samples.push(v),
                None => break,
            }
        }
        let background = samples.iter().copied().fold(f64::INFINITY, f64::min);
        if samples.len() < 2 || !(peak - background > 0.0) {
            return None;
        }
        let level = 0.5 * (peak + background);
        if samples[0] < level {
            return Some(0.0);
        }
        for k in 1..samples.len() {
            if samples[k] < level {
                let (a, b) = (samples[k - 1], samples[k]);
                let t = (a - level) / (a - b);
                return Some((k as f64 - 1.0 + t) * ds);
            }
        }
        None
    }

    fn reach_mm(&self) -> f64 {
        (4.0 * self.cfg.sigma + 8.0) * self.spacing.max()
    }

    /// Trims trailing points below the axial half-maximum and extends the
    /// end to the crossing.
    fn refine_end(&self, nodes: &mut Vec<Node>, peak: f64) {
        let background = self.local_background(nodes);
        let level = 0.5 * (peak + background);
        while nodes.len() > 2 {
            let last = nodes[nodes.len() - 1];
            match self.raw.trilinear_raw(last.pos) {
                Some(v) if v < level => {
                    nodes.pop();
                }
                _ => break,
            }
        }
        let last = nodes[nodes.len() - 1];
        let prev = nodes[nodes.len() - 2];
        let mut dir = Vec3::from_fn(|i, _| (last.pos[i] - prev.pos[i]) * self.spacing[i]);
        let n = dir.norm();
        if n == 0.0 {
            return;
        }
        dir /= n;
        if let Some(d) = self.half_max_distance(last.pos, &dir, peak, self.reach_mm()) {
            if d > 1e-3 * self.spacing.min() {
                let pos = self.offset(last.pos, &(dir * d));
                let response = self
                    .structure(pos)
                    .map(|(e, _)| tubularity(&e, &self.params))
                    .unwrap_or(0.0);
                nodes.push(Node { pos, dir, response });
            }
        }
    }

    fn local_background(&self, nodes: &[Node]) -> f64 {
        let last = nodes[nodes.len() - 1];
        let prev = nodes[nodes.len() - 2];
        let mut dir = Vec3::from_fn(|i, _| (last.pos[i] - prev.pos[i]) * self.spacing[i]);
        let n = dir.norm();
        if n > 0.0 {
            dir /= n;
        }
        let reach = self.reach_mm();
        let steps = 64;
        (0..=steps)
            .filter_map(|k| {
                let q = self.offset(last.pos, &(dir * (reach * k as f64 / steps as f64)));
                self.raw.trilinear_raw(q)
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn radius_at(&self, p: [f64; 3], axis: &Vec3) -> f64 {
        let Some(peak) = self.raw.trilinear_raw(p) else {
            return f64::NAN;
        };
        let u = crate::math::any_orthogonal(axis);
        let w = axis.cross(&u);
        let reach = self.reach_mm();
        let widths: Vec<f64> = [u, -u, w, -w]
            .iter()
            .filter_map(|d| self.half_max_distance(p, d, peak, reach))
            .collect();
        if widths.is_empty() {
            f64::NAN
        } else {
            widths.iter().sum::<f64>() / widths.len() as f64
        }
    }
}

/// Seeds: interior voxels whose response exceeds `threshold` and is not
/// smaller than any of the 26 neighbours, strongest first, ties broken by
/// lowest flat index.
pub fn ridge_seeds(response: &[f32], dims: [usize; 3], threshold: f64) -> Vec<usize> {
    let [dx, dy, dz] = dims;
    let mut seeds: Vec<usize> = Vec::new();
    if dx < 3 || dy < 3 || dz < 3 {
        return seeds;
    }
    for z in 1..dz - 1 {
        for y in 1..dy - 1 {
            for x in 1..dx - 1 {
                let i = x + dx * (y + dy * z);
                let r = response[i];
                if (r as f64) <= threshold {
                    continue;
                }
                let mut is_max = true;
                'n: for oz in 0..3 {
                    for oy in 0..3 {
                        for ox in 0..3 {
                            let j = (x + ox - 1) + dx * ((y + oy - 1) + dy * (z + oz - 1));
                            if response[j] > r {
                                is_max = false;
                                break 'n;
                            }
                        }
                    }
                }
                if is_max {
                    seeds.push(i);
                }
            }
        }
    }
    seeds.sort_by(|&a, &b| response[b].total_cmp(&response[a]).then(a.cmp(&b)));
    seeds
}

/// Traces fiber centerlines. The volume is smoothed internally with
/// `cfg.sigma`. An empty result is not an error.
pub fn trace_fibers(v: &Volume, cfg: &ExtractionConfig) -> Result<Vec<FiberTrace>, ExtractionError> {
    cfg.validate()?;
    let smooth = gaussian_blur(v, cfg.sigma);
    let field = RidgeField::compute(&smooth);
    let dims = v.dims();
    let seeds = ridge_seeds(&field.response, dims, cfg.ridge_threshold);
    let spacing = Vec3::from(v.spacing());
    let mut tracer = Tracer {
        smooth: &smooth,
        raw: v,
        params: field.params,
        cfg,
        spacing,
        step_mm: cfg.step * spacing.min(),
        owner: vec![0; v.data().len()],
    };

    let mut traces = Vec::new();
    let mut label = 0u32;
    for seed in seeds {
        if tracer.owner[seed] != 0 {
            continue;
        }
        label += 1;
        let [dx, dy, _] = dims;
        let p0 = [
            (seed % dx) as f64,
            ((seed / dx) % dy) as f64,
            (seed / (dx * dy)) as f64,
        ];
        let start = match tracer.node_at(p0) {
            Some(n) if tracer.owner[tracer.voxel_of(n.pos)] == 0 => n,
            _ => {
                tracer.claim(&[p0], label);
                continue;
            }
        };
        let fwd = tracer.walk(&start, true, label);
        let bwd = tracer.walk(&start, false, label);
        let mut nodes: Vec<Node> = bwd.into_iter().rev().collect();
        nodes.push(start);
        nodes.extend(fwd);
        let claimed: Vec<[f64; 3]> = nodes.iter().map(|n| n.pos).collect();
        tracer.claim(&claimed, label);
        tracer.claim(&[p0], label);
        if nodes.len() < 2 {
            continue;
        }

        let mut centre: Vec<f64> = nodes
            .iter()
            .filter_map(|n| v.trilinear_raw(n.pos))
            .collect();
        centre.sort_by(f64::total_cmp);
        let peak = centre[centre.len() / 2];
        tracer.refine_end(&mut nodes, peak);
        nodes.reverse();
        tracer.refine_end(&mut nodes, peak);
        nodes.reverse();

        let radii: Vec<f64> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let a = nodes[i.saturating_sub(1)].pos;
                let b = nodes[(i + 1).min(nodes.len() - 1)].pos;
                let mut axis = Vec3::from_fn(|k, _| (b[k] - a[k]) * spacing[k]);
                if axis.norm() == 0.0 {
                    axis = n.dir;
                }
                tracer.radius_at(n.pos, &(axis / axis.norm()))
            })
            .collect();
        let trace = FiberTrace {
            points: nodes.iter().map(|n| v.voxel_to_world(n.pos)).collect(),
            radii,
            responses: nodes.iter().map(|n| n.response).collect(),
        };
        if trace.arc_length() >= cfg.min_length {
            traces.push(trace);
        }
    }
    Ok(traces)
}

/// Derives the 20 schema-v1 attributes of one trace.
///
/// Orientation uses the chord direction flipped into the upper half-space
/// (`dz >= 0`): `theta` is its angle to +z, `phi` its azimuth from +x
/// towards +y. The center of gravity is the arc-length-weighted centroid of
/// the polyline.
pub fn characterize(t: &FiberTrace, id: u64) -> Result<FiberRecord, ExtractionError> {
    let (Some(start), Some(end)) = (t.points.first(), t.points.last()) else {
        return Err(ExtractionError::DegenerateTrace);
    };
    let straight = dist(start, end);
    if !(straight > 0.0) {
        return Err(ExtractionError::DegenerateTrace);
    }
    let curved = t.arc_length().max(straight);

    let finite: Vec<f64> = t.radii.iter().copied().filter(|r| r.is_finite() && *r > 0.0).collect();
    let diameter = if finite.is_empty() {
        f64::NAN
    } else {
        2.0 * finite.iter().sum::<f64>() / finite.len() as f64
    };
    let r = 0.5 * diameter;

    let mut d = Vec3::from_fn(|i, _| (end[i] - start[i]) / straight);
    if d.z < 0.0 || (d.z == 0.0 && (d.y < 0.0 || (d.y == 0.0 && d.x < 0.0))) {
        d = -d;
    }
    let theta = acos(d.z.clamp(-1.0, 1.0)) / DEG;
    let mut phi = atan2(d.y, d.x) / DEG;
    if phi < 0.0 {
        phi += 360.0;
    }
    if phi >= 360.0 || (fabs(d.x) < 1e-15 && fabs(d.y) < 1e-15) {
        phi = 0.0;
    }

    let mut cog = [0.0; 3];
    let mut total = 0.0;
    for w in t.points.windows(2) {
        let l = dist(&w[0], &w[1]);
        for i in 0..3 {
            cog[i] += l * 0.5 * (w[0][i] + w[1][i]);
        }
        total += l;
    }
    cog.iter_mut().for_each(|c| *c /= total);

    let mean_tubularity = if t.responses.is_empty() {
        0.0
    } else {
        t.responses.iter().sum::<f64>() / t.responses.len() as f64
    };

    Ok(FiberRecord {
        id,
        start: *start,
        end: *end,
        straight_length: straight,
        curved_length: curved,
        curvature_ratio: curved / straight,
        diameter,
        surface_area: core::f64::consts::PI * diameter * curved,
        volume: core::f64::consts::PI * r * r * curved,
        theta,
        phi,
        cog,
        point_count: t.points.len() as u64,
        mean_tubularity: mean_tubularity.clamp(0.0, 1.0 - f64::EPSILON),
    })
}

/// Runs [`trace_fibers`] and characterizes every trace, numbering fibers
/// from 1 in trace order.
pub fn extract_table(v: &Volume, cfg: &ExtractionConfig) -> Result<FiberTable, ExtractionError> {
    let traces = trace_fibers(v, cfg)?;
    let mut records = Vec::with_capacity(traces.len());
    for (i, t) in traces.iter().enumerate() {
        records.push(characterize(t, i as u64 + 1)?);
    }
    Ok(FiberTable::new(records)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(points: &[[f64; 3]], radius: f64) -> FiberTrace {
        FiberTrace {
            points: points.to_vec(),
            radii: vec![radius; points.len()],
            responses: vec![0.5; points.len()],
        }
    }

    #[test]
    fn straight_cylinder_record() {
        let r = characterize(&trace(&[[0.0; 3], [0.0, 0.0, 10.0]], 0.5), 1).unwrap();
        assert_eq!(r.straight_length, 10.0);
        assert_eq!(r.curved_length, 10.0);
        assert_eq!(r.curvature_ratio, 1.0);
        assert_eq!(r.diameter, 1.0);
        assert!((r.volume - core::f64::consts::PI * 0.25 * 10.0).abs() < 1e-12);
        assert!((r.surface_area - core::f64::consts::PI * 10.0).abs() < 1e-12);
        assert_eq!(r.theta, 0.0);
        assert_eq!(r.cog, [0.0, 0.0, 5.0]);
        assert_eq!(r.point_count, 2);
        r.validate().unwrap();
    }

    #[test]
    fn right_angle_polyline() {
        let r = characterize(&trace(&[[0.0; 3], [3.0, 0.0, 0.0], [3.0, 4.0, 0.0]], 0.2), 7).unwrap();
        assert!((r.straight_length - 5.0).abs() < 1e-12);
        assert!((r.curved_length - 7.0).abs() < 1e-12);
        assert!((r.curvature_ratio - 1.4).abs() < 1e-12);
        assert!((r.theta - 90.0).abs() < 1e-12);
        assert!((r.phi - libm::atan2(4.0, 3.0) / DEG).abs() < 1e-9);
        assert_eq!(r.id, 7);
    }

    #[test]
    fn orientation_is_undirected() {
        let a = characterize(&trace(&[[0.0; 3], [1.0, -1.0, -1.0]], 0.2), 1).unwrap();
        let b = characterize(&trace(&[[1.0, -1.0, -1.0], [0.0; 3]], 0.2), 1).unwrap();
        assert!((a.theta - b.theta).abs() < 1e-12 && (a.phi - b.phi).abs() < 1e-12);
        assert!(a.theta <= 90.0 && (0.0..360.0).contains(&a.phi));
        assert!((a.phi - 135.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_trace() {
        assert_eq!(
            characterize(&trace(&[[1.0; 3], [1.0; 3]], 0.5), 1),
            Err(ExtractionError::DegenerateTrace)
        );
        assert_eq!(characterize(&trace(&[], 0.5), 1), Err(ExtractionError::DegenerateTrace));
    }

    #[test]
    fn config_validation() {
        assert!(ExtractionConfig::default().validate().is_ok());
        let bad = ExtractionConfig {
            step: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExtractionConfig {
            max_angle: 90.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(ExtractionConfig::for_spacing(0.5).min_length, 2.5);
    }

    #[test]
    fn seeds_order_and_ties() {
        let dims = [5, 5, 5];
        let mut r = vec![0f32; 125];
        r[1 + 5 * (1 + 5)] = 0.5;
        r[3 + 5 * (3 + 5 * 3)] = 0.5;
        r[2 + 5 * (2 + 5 * 2)] = 0.2;
        // The 0.2 voxel neighbours both 0.5 voxels, so it is not a maximum.
        let s = ridge_seeds(&r, dims, 0.1);
        assert_eq!(s, [1 + 5 * (1 + 5), 3 + 5 * (3 + 5 * 3)]);
        assert!(ridge_seeds(&r, dims, 0.6).is_empty());
    }
}
