//! Finite-difference Hessians and the symmetric 3×3 eigensolver used by the
//! tubularity filter and the centerline tracer.

use crate::math::{fabs, floor, sqrt, Mat3, Vec3};
use crate::volume::Volume;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum HessianError {
    #[error("voxel {0:?} is closer than one voxel to the border")]
    BorderVoxel([usize; 3]),
}

/// Eigen-decomposition of a symmetric 3×3 matrix, ordered by absolute
/// eigenvalue: `|values[0]| <= |values[1]| <= |values[2]|`.
///
/// `vectors[i]` is the unit eigenvector of `values[i]`; its sign is fixed so
/// that the largest-magnitude component is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianEigen {
    pub values: [f64; 3],
    pub vectors: [Vec3; 3],
}

impl HessianEigen {
    pub fn frobenius(&self) -> f64 {
        let [a, b, c] = self.values;
        sqrt(a * a + b * b + c * c)
    }

    /// `V · diag(λ) · Vᵀ`.
    pub fn reconstruct(&self) -> Mat3 {
        let mut m = Mat3::zeros();
        for i in 0..3 {
            let v = self.vectors[i];
            m += v * v.transpose() * self.values[i];
        }
        m
    }
}

/// Cyclic Jacobi rotations on a symmetric matrix.
///
/// Converges quadratically; stops when the off-diagonal mass falls below
/// `1e-15` of the Frobenius norm or after 32 sweeps.
pub fn symmetric_eigen(m: &Mat3) -> HessianEigen {
    let mut a = [[0.0f64; 3]; 3];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let norm2: f64 = a.iter().flatten().map(|x| x * x).sum();
    let tol = norm2 * 1e-30;

    for _ in 0..32 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if off <= tol || off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = theta.signum() / (fabs(theta) + sqrt(theta * theta + 1.0));
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / sqrt(t * t + 1.0);
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| fabs(a[i][i]).total_cmp(&fabs(a[j][j])));
    let values = order.map(|i| a[i][i]);
    let vectors = order.map(|i| {
        let mut e = Vec3::new(v[0][i], v[1][i], v[2][i]);
        e /= e.norm();
        let lead = (0..3).max_by(|&x, &y| fabs(e[x]).total_cmp(&fabs(e[y]))).unwrap_or(0);
        if e[lead] < 0.0 {
            e = -e;
        }
        e
    });
    HessianEigen { values, vectors }
}

/// Central-difference Hessian of the raw field at a voxel, in units of
/// intensity per mm².
#[inline]
pub fn hessian_matrix(v: &Volume, x: usize, y: usize, z: usize) -> Mat3 {
    let [dx, dy, _] = v.dims();
    let d = v.data();
    let [sx, sy, sz] = v.spacing();
    let sy_ = dx;
    let sz_ = dx * dy;
    let i = x + dx * (y + dy * z);
    let f = |o: isize| d[(i as isize + o) as usize] as f64;
    let (ox, oy, oz) = (1isize, sy_ as isize, sz_ as isize);
    let c = f(0);
    let hxx = (f(ox) - 2.0 * c + f(-ox)) / (sx * sx);
    let hyy = (f(oy) - 2.0 * c + f(-oy)) / (sy * sy);
    let hzz = (f(oz) - 2.0 * c + f(-oz)) / (sz * sz);
    let hxy = (f(ox + oy) - f(ox - oy) - f(-ox + oy) + f(-ox - oy)) / (4.0 * sx * sy);
    let hxz = (f(ox + oz) - f(ox - oz) - f(-ox + oz) + f(-ox - oz)) / (4.0 * sx * sz);
    let hyz = (f(oy + oz) - f(oy - oz) - f(-oy + oz) + f(-oy - oz)) / (4.0 * sy * sz);
    Mat3::new(hxx, hxy, hxz, hxy, hyy, hyz, hxz, hyz, hzz)
}

/// Central-difference gradient at a voxel (intensity per mm).
#[inline]
pub fn gradient(v: &Volume, x: usize, y: usize, z: usize) -> Vec3 {
    let [sx, sy, sz] = v.spacing();
    Vec3::new(
        (v.voxel(x + 1, y, z) - v.voxel(x - 1, y, z)) / (2.0 * sx),
        (v.voxel(x, y + 1, z) - v.voxel(x, y - 1, z)) / (2.0 * sy),
        (v.voxel(x, y, z + 1) - v.voxel(x, y, z - 1)) / (2.0 * sz),
    )
}

fn interior(v: &Volume, x: usize, y: usize, z: usize) -> bool {
    let [dx, dy, dz] = v.dims();
    x >= 1 && y >= 1 && z >= 1 && x + 1 < dx && y + 1 < dy && z + 1 < dz
}

/// Eigen-decomposed Hessian at a voxel at least one voxel from every border.
pub fn hessian_at(v: &Volume, p: [usize; 3]) -> Result<HessianEigen, HessianError> {
    let [x, y, z] = p;
    if !interior(v, x, y, z) {
        return Err(HessianError::BorderVoxel(p));
    }
    Ok(symmetric_eigen(&hessian_matrix(v, x, y, z)))
}

/// Local differential structure at a continuous voxel-space position:
/// trilinear blend of the eight surrounding voxel Hessians and gradients.
/// `None` when any of the eight voxels lacks a full stencil.
pub fn local_structure(v: &Volume, p: [f64; 3]) -> Option<(Mat3, Vec3)> {
    let [dx, dy, dz] = v.dims();
    let base = p.map(floor);
    if base.iter().any(|&b| b < 1.0) {
        return None;
    }
    let (x0, y0, z0) = (base[0] as usize, base[1] as usize, base[2] as usize);
    if x0 + 2 >= dx || y0 + 2 >= dy || z0 + 2 >= dz {
        return None;
    }
    let f = [p[0] - base[0], p[1] - base[1], p[2] - base[2]];
    let mut h = Mat3::zeros();
    let mut g = Vec3::zeros();
    for corner in 0..8 {
        let (cx, cy, cz) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
        let w = (if cx == 1 { f[0] } else { 1.0 - f[0] })
            * (if cy == 1 { f[1] } else { 1.0 - f[1] })
            * (if cz == 1 { f[2] } else { 1.0 - f[2] });
        if w == 0.0 {
            continue;
        }
        h += hessian_matrix(v, x0 + cx, y0 + cy, z0 + cz) * w;
        g += gradient(v, x0 + cx, y0 + cy, z0 + cz) * w;
    }
    Some((h, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Dtype, VolumeMeta};
    use alloc::vec::Vec;

    fn field(n: usize, f: impl Fn(f64, f64, f64) -> f64) -> Volume {
        let c = (n / 2) as f64;
        let mut data = Vec::with_capacity(n * n * n);
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    data.push(f(x as f64 - c, y as f64 - c, z as f64 - c) as f32);
                }
            }
        }
        Volume::from_values(VolumeMeta::new([n, n, n], Dtype::Float32), data).unwrap()
    }

    #[test]
    fn parabola_along_x() {
        let v = field(7, |x, _, _| x * x);
        let e = hessian_at(&v, [3, 3, 3]).unwrap();
        assert!(e.values[0].abs() < 1e-9 && e.values[1].abs() < 1e-9);
        assert!((e.values[2] - 2.0).abs() < 1e-9);
        assert!((e.vectors[2] - Vec3::x()).norm() < 1e-9);
    }

    #[test]
    fn isotropic_bowl() {
        let v = field(7, |x, y, z| x * x + y * y + z * z);
        let e = hessian_at(&v, [2, 4, 3]).unwrap();
        for l in e.values {
            assert!((l - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn saddle_xy() {
        let v = field(7, |x, y, _| x * y);
        let e = hessian_at(&v, [3, 3, 3]).unwrap();
        // Exact matrix [[0,1,0],[1,0,0],[0,0,0]] has eigenvalues 0, ±1.
        assert!(e.values[0].abs() < 1e-9);
        let mut rest = [e.values[1], e.values[2]];
        rest.sort_by(f64::total_cmp);
        assert!((rest[0] + 1.0).abs() < 1e-9 && (rest[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spacing_scales_second_derivatives() {
        let mut v = field(7, |x, _, _| x * x);
        let mut meta = v.meta().clone();
        meta.spacing = [2.0, 1.0, 1.0];
        v = Volume::from_values(meta, v.data().to_vec()).unwrap();
        let e = hessian_at(&v, [3, 3, 3]).unwrap();
        assert!((e.values[2] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn border_rejected() {
        let v = field(5, |x, _, _| x);
        assert_eq!(
            hessian_at(&v, [0, 2, 2]),
            Err(HessianError::BorderVoxel([0, 2, 2]))
        );
        assert!(hessian_at(&v, [2, 2, 4]).is_err());
        assert!(hessian_at(&v, [1, 1, 3]).is_ok());
    }

    #[test]
    fn interpolated_structure_matches_on_grid() {
        let v = field(9, |x, y, z| x * x - 0.5 * y * z + z);
        let (h, g) = local_structure(&v, [4.0, 4.0, 4.0]).unwrap();
        assert!((h - hessian_matrix(&v, 4, 4, 4)).norm() < 1e-12);
        assert!((g - gradient(&v, 4, 4, 4)).norm() < 1e-12);
        assert!(local_structure(&v, [0.5, 4.0, 4.0]).is_none());
        assert!(local_structure(&v, [4.0, 7.5, 4.0]).is_none());
    }

    #[test]
    fn diagonal_and_degenerate_matrices() {
        let e = symmetric_eigen(&Mat3::from_diagonal(&Vec3::new(-3.0, 1.0, 2.0)));
        assert_eq!(e.values, [1.0, 2.0, -3.0]);
        let z = symmetric_eigen(&Mat3::zeros());
        assert_eq!(z.values, [0.0; 3]);
    }
}
