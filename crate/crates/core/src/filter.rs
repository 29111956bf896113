//! Separable Gaussian smoothing of volumes.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{ceil, exp};
use crate::par;
use crate::volume::{Dtype, Volume};

/// Discrete Gaussian taps for offsets `-r..=r` with `r = ceil(3 sigma)`,
/// renormalized to sum to one.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let radius = ceil(3.0 * sigma) as i64;
    let two_s2 = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| exp(-((i * i) as f64) / two_s2))
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Blurs a volume with three 1-D passes (x, then y, then z), clamping to the
/// edge at borders.
///
/// The result is float32 and keeps the source intensity window so that
/// normalized values stay comparable.
///
/// # Panics
/// If `sigma <= 0`.
pub fn gaussian_blur(v: &Volume, sigma: f64) -> Volume {
    let kernel = gaussian_kernel(sigma);
    let dims = v.dims();
    let mut a: Vec<f32> = v.data().to_vec();
    let mut b = vec![0f32; a.len()];
    for axis in 0..3 {
        convolve_axis(&a, &mut b, dims, axis, &kernel);
        core::mem::swap(&mut a, &mut b);
    }
    let mut meta = v.meta().clone();
    meta.dtype = Dtype::Float32;
    Volume::with_window(meta, a, v.window()).expect("dims unchanged")
}

fn convolve_axis(src: &[f32], dst: &mut [f32], dims: [usize; 3], axis: usize, kernel: &[f64]) {
    let [dx, dy, _] = dims;
    let radius = (kernel.len() / 2) as isize;
    let stride = [1, dx, dx * dy][axis];
    let len = dims[axis] as isize;
    let plane = dx * dy;
    // One chunk per z-plane of the output.
    par::for_each_chunk(dst, plane, |z, out| {
        for y in 0..dy {
            for x in 0..dx {
                let base = x + dx * (y + dy * z);
                let pos = [x, y, z][axis] as isize;
                let line_start = base - (pos as usize) * stride;
                let mut acc = 0.0f64;
                for (k, w) in kernel.iter().enumerate() {
                    let p = (pos + k as isize - radius).clamp(0, len - 1) as usize;
                    acc += w * src[line_start + p * stride] as f64;
                }
                out[x + dx * y] = acc as f32;
            }
        }
    });
}
