//! Marker detection: adaptive threshold, connected components, quad fit,
//! subpixel edge refinement, grid sampling and decoding.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::code::{grid_to_word, BitGrid, Dictionary, GRID};
use super::pose::{apply_homography, estimate_pose, homography, reprojection_rms, CameraIntrinsics};
use super::{Detection, GrayImage};
use crate::math::{fabs, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Half-width of the adaptive threshold window; `None` picks
    /// `max(7, min(width, height) / 16)`.
    pub window_radius: Option<usize>,
    /// A pixel is dark when it is this many gray levels below its local mean.
    pub threshold_offset: f64,
    /// Smallest accepted quad side, pixels.
    pub min_side_px: f64,
    /// Smallest accepted quiet-zone/border contrast, gray levels.
    pub min_contrast: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            window_radius: None,
            threshold_offset: 10.0,
            min_side_px: 12.0,
            min_contrast: 20.0,
        }
    }
}

type P2 = [f64; 2];

pub fn detect_markers(frame: &GrayImage, intr: &CameraIntrinsics, dict: &Dictionary) -> Vec<Detection> {
    detect_markers_with(frame, intr, dict, &DetectorParams::default())
}

pub fn detect_markers_with(
    frame: &GrayImage,
    intr: &CameraIntrinsics,
    dict: &Dictionary,
    params: &DetectorParams,
) -> Vec<Detection> {
    if frame.width < 32 || frame.height < 32 || !intr.is_valid() {
        return Vec::new();
    }
    let dark = adaptive_threshold(frame, params);
    let mut best: Vec<Detection> = Vec::new();
    for comp in components(&dark, frame.width, frame.height, params) {
        let Some(quad) = quad_from_component(&comp, params) else {
            continue;
        };
        let Some(quad) = refine_quad(frame, quad, params) else {
            continue;
        };
        let Some(det) = decode_quad(frame, &quad, intr, dict, params) else {
            continue;
        };
        match best.iter_mut().find(|d| d.id == det.id) {
            Some(prev) => {
                let better = det.bit_errors < prev.bit_errors
                    || (det.bit_errors == prev.bit_errors && det.contrast > prev.contrast);
                if better {
                    *prev = det;
                }
            }
            None => best.push(det),
        }
    }
    best.sort_by_key(|d| d.id);
    best
}

fn adaptive_threshold(img: &GrayImage, params: &DetectorParams) -> Vec<bool> {
    let (w, h) = (img.width, img.height);
    let r = params.window_radius.unwrap_or((w.min(h) / 16).max(7));
    let mut integral = vec![0u64; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u64;
        for x in 0..w {
            row += img.at(x, y) as u64;
            integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r + 1).min(h);
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r + 1).min(w);
            let sum = integral[y1 * (w + 1) + x1] + integral[y0 * (w + 1) + x0]
                - integral[y0 * (w + 1) + x1]
                - integral[y1 * (w + 1) + x0];
            let area = ((x1 - x0) * (y1 - y0)) as f64;
            out[y * w + x] = (img.at(x, y) as f64) < sum as f64 / area - params.threshold_offset;
        }
    }
    out
}

/// 8-connected dark components not touching the frame edge, each reduced
/// to the leftmost and rightmost pixel of every row it covers.
fn components(dark: &[bool], w: usize, h: usize, params: &DetectorParams) -> Vec<Vec<P2>> {
    let mut label = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !dark[start] || label[start] {
            continue;
        }
        label[start] = true;
        stack.push(start);
        let mut touches_edge = false;
        let (mut ymin, mut ymax) = (h, 0);
        let mut rows: Vec<(usize, usize, usize)> = Vec::new();
        let mut pixels = 0usize;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            pixels += 1;
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                touches_edge = true;
            }
            ymin = ymin.min(y);
            ymax = ymax.max(y);
            rows.push((y, x, x));
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if dark[j] && !label[j] {
                        label[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        let min_side = params.min_side_px;
        if touches_edge || ((ymax - ymin) as f64) < min_side * 0.5 || (pixels as f64) < 2.0 * min_side {
            continue;
        }
        let span = ymax - ymin + 1;
        let mut lo = vec![usize::MAX; span];
        let mut hi = vec![0usize; span];
        for (y, x, _) in rows {
            let k = y - ymin;
            lo[k] = lo[k].min(x);
            hi[k] = hi[k].max(x);
        }
        let mut pts = Vec::with_capacity(2 * span);
        for k in 0..span {
            if lo[k] != usize::MAX {
                let y = (ymin + k) as f64;
                pts.push([lo[k] as f64, y]);
                if hi[k] != lo[k] {
                    pts.push([hi[k] as f64, y]);
                }
            }
        }
        out.push(pts);
    }
    out
}

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn convex_hull(mut pts: Vec<P2>) -> Vec<P2> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<P2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: &mut dyn Iterator<Item = &P2> = if pass == 0 {
            &mut pts.iter()
        } else {
            &mut pts.iter().rev()
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn polygon_area(p: &[P2]) -> f64 {
    let n = p.len();
    (0..n)
        .map(|i| {
            let (a, b) = (p[i], p[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn dist2(a: P2, b: P2) -> f64 {
    (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])
}

/// Four hull vertices spanning the largest quad, wound with negative
/// shoelace area (counter-clockwise on screen).
fn quad_from_component(pts: &[P2], params: &DetectorParams) -> Option<[P2; 4]> {
    let hull = convex_hull(pts.to_vec());
    if hull.len() < 4 {
        return None;
    }
    let n = hull.len() as f64;
    let c = hull
        .iter()
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0] / n, acc[1] + p[1] / n]);
    let far = |from: P2| {
        *hull
            .iter()
            .max_by(|a, b| dist2(**a, from).total_cmp(&dist2(**b, from)))
            .unwrap()
    };
    let a = far(c);
    let cc = far(a);
    let mut b = None;
    let mut d = None;
    let (mut bs, mut ds) = (0.0, 0.0);
    for &p in &hull {
        let s = cross(a, cc, p);
        if s > bs {
            bs = s;
            b = Some(p);
        }
        if s < ds {
            ds = s;
            d = Some(p);
        }
    }
    let mut quad = [a, b?, cc, d?];
    let qa = polygon_area(&quad);
    let ha = fabs(polygon_area(&hull));
    if fabs(qa) < 0.85 * ha {
        return None;
    }
    if qa > 0.0 {
        quad.swap(1, 3);
    }
    for i in 0..4 {
        if sqrt(dist2(quad[i], quad[(i + 1) % 4])) < params.min_side_px {
            return None;
        }
    }
    Some(quad)
}

struct Line {
    point: P2,
    dir: P2,
}

fn intersect(l1: &Line, l2: &Line) -> Option<P2> {
    let det = l1.dir[0] * l2.dir[1] - l1.dir[1] * l2.dir[0];
    if fabs(det) < 1e-9 {
        return None;
    }
    let dx = l2.point[0] - l1.point[0];
    let dy = l2.point[1] - l1.point[1];
    let t = (dx * l2.dir[1] - dy * l2.dir[0]) / det;
    Some([l1.point[0] + t * l1.dir[0], l1.point[1] + t * l1.dir[1]])
}

/// Total-least-squares line through points.
fn fit_line(pts: &[P2]) -> Option<Line> {
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let m = pts
        .iter()
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0] / n, acc[1] + p[1] / n]);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p[0] - m[0], p[1] - m[1]);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // Major eigenvector of [[sxx, sxy], [sxy, syy]].
    let tr = sxx + syy;
    let disc = sqrt(((sxx - syy) / 2.0) * ((sxx - syy) / 2.0) + sxy * sxy);
    let l = tr / 2.0 + disc;
    let (dx, dy) = if fabs(sxy) > 1e-12 {
        (l - syy, sxy)
    } else if sxx >= syy {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let norm = sqrt(dx * dx + dy * dy);
    Some(Line {
        point: m,
        dir: [dx / norm, dy / norm],
    })
}

/// Moves each quad edge onto the dark-to-bright mid-level crossing found
/// along its normal, then intersects the fitted lines.
fn refine_quad(img: &GrayImage, mut quad: [P2; 4], params: &DetectorParams) -> Option<[P2; 4]> {
    for _ in 0..2 {
        let c = [
            quad.iter().map(|p| p[0]).sum::<f64>() / 4.0,
            quad.iter().map(|p| p[1]).sum::<f64>() / 4.0,
        ];
        let mut lines: Vec<Line> = Vec::with_capacity(4);
        for i in 0..4 {
            let (a, b) = (quad[i], quad[(i + 1) % 4]);
            let len = sqrt(dist2(a, b));
            let e = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
            let mut nrm = [-e[1], e[0]];
            let mid = [(a[0] + b[0]) / 2.0 - c[0], (a[1] + b[1]) / 2.0 - c[1]];
            if nrm[0] * mid[0] + nrm[1] * mid[1] < 0.0 {
                nrm = [-nrm[0], -nrm[1]];
            }
            let reach = (len / 14.0).clamp(2.0, 5.0);
            let samples = (len as usize).clamp(8, 200);
            let steps = (2.0 * reach / 0.25) as usize;
            let mut edge_pts = Vec::with_capacity(samples);
            let mut profile = vec![0.0; steps + 1];
            for k in 0..samples {
                let t = 0.15 + 0.7 * k as f64 / (samples - 1) as f64;
                let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                for (j, v) in profile.iter_mut().enumerate() {
                    let s = -reach + 0.25 * j as f64;
                    *v = img.bilinear(p[0] + s * nrm[0], p[1] + s * nrm[1]);
                }
                // Dark and bright plateaus from the first and last pixel of
                // the profile; the edge sits where the area under the
                // normalized profile puts it.
                let k = 4.min(steps / 2);
                let lo = profile[..k].iter().sum::<f64>() / k as f64;
                let hi = profile[steps + 1 - k..].iter().sum::<f64>() / k as f64;
                if hi - lo < params.min_contrast {
                    continue;
                }
                let mut area = 0.0;
                for j in 0..steps {
                    let f0 = (hi - profile[j]) / (hi - lo);
                    let f1 = (hi - profile[j + 1]) / (hi - lo);
                    area += 0.125 * (f0 + f1);
                }
                let s = -reach + area;
                let found = (s > -reach && s < reach).then_some(s);
                if let Some(s) = found {
                    edge_pts.push([p[0] + s * nrm[0], p[1] + s * nrm[1]]);
                }
            }
            lines.push(fit_line(&edge_pts)?);
        }
        let mut next = [[0.0; 2]; 4];
        for i in 0..4 {
            next[i] = intersect(&lines[(i + 3) % 4], &lines[i])?;
        }
        quad = next;
    }
    let (w, h) = (img.width as f64, img.height as f64);
    if quad
        .iter()
        .any(|p| !(p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= w - 1.0 && p[1] <= h - 1.0))
    {
        return None;
    }
    if polygon_area(&quad) >= 0.0 {
        return None;
    }
    for i in 0..4 {
        if cross(quad[i], quad[(i + 1) % 4], quad[(i + 2) % 4]) >= 0.0 {
            return None;
        }
    }
    Some(quad)
}

fn sample_mean(img: &GrayImage, h: &Matrix3<f64>, u: f64, v: f64, half: f64) -> f64 {
    let offs = [-half, 0.0, half];
    let mut s = 0.0;
    for du in offs {
        for dv in offs {
            let p = apply_homography(h, [u + du, v + dv]);
            s += img.bilinear(p[0], p[1]);
        }
    }
    s / 9.0
}

fn decode_quad(
    img: &GrayImage,
    quad: &[P2; 4],
    intr: &CameraIntrinsics,
    dict: &Dictionary,
    params: &DetectorParams,
) -> Option<Detection> {
    let unit = [[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
    let h = homography(&unit, quad).ok()?;
    let g = GRID as f64;
    let cell = 1.0 / g;
    let mut means = [[0.0; GRID]; GRID];
    for (r, row) in means.iter_mut().enumerate() {
        for (c, m) in row.iter_mut().enumerate() {
            *m = sample_mean(img, &h, (c as f64 + 0.5) * cell, (r as f64 + 0.5) * cell, cell / 4.0);
        }
    }
    let mut dark = 0.0;
    for i in 0..GRID {
        for j in 0..GRID {
            if i == 0 || j == 0 || i == GRID - 1 || j == GRID - 1 {
                dark += means[i][j];
            }
        }
    }
    dark /= (4 * GRID - 4) as f64;
    let mut bright = 0.0;
    for k in 0..GRID {
        let t = (k as f64 + 0.5) * cell;
        let o = -cell / 2.0;
        let far = 1.0 + cell / 2.0;
        for (u, v) in [(t, o), (t, far), (o, t), (far, t)] {
            let p = apply_homography(&h, [u, v]);
            bright += img.bilinear(p[0], p[1]);
        }
    }
    bright /= (4 * GRID) as f64;
    let contrast = bright - dark;
    if contrast < params.min_contrast {
        return None;
    }
    let level = (bright + dark) / 2.0;
    let mut bits: BitGrid = [[false; GRID]; GRID];
    for r in 0..GRID {
        for c in 0..GRID {
            bits[r][c] = means[r][c] > level;
        }
    }
    let word = grid_to_word(&bits)?;
    let hit = dict.decode(word)?;
    let marker = dict.get(hit.id)?;
    let k = hit.rotation as usize;
    let corners = [quad[k % 4], quad[(k + 1) % 4], quad[(k + 2) % 4], quad[(k + 3) % 4]];
    let pose = estimate_pose(&corners, marker.side_mm, intr).ok()?;
    Some(Detection {
        id: hit.id,
        corners,
        reprojection_rms: reprojection_rms(&pose, marker.side_mm, intr, &corners),
        pose,
        bit_errors: hit.distance,
        contrast,
    })
}
