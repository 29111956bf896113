//! Small numeric helpers shared by the kernels.
//!
//! Transcendentals go through `libm` so results are identical with and
//! without `std`.

pub use libm::{acos, atan2, ceil, cos, exp, fabs, floor, log, pow, round, sin, sqrt, tan};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

pub const DEG: f64 = core::f64::consts::PI / 180.0;

#[inline]
pub fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Maps a value in `[0, 1]` to a byte with round-half-up.
#[inline]
pub fn to_u8(x: f64) -> u8 {
    floor(clamp01(x) * 255.0 + 0.5) as u8
}

/// Angle in degrees between two direction vectors, ignoring sign when
/// `undirected` is set.
pub fn angle_between_deg(a: &Vec3, b: &Vec3, undirected: bool) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let mut c = a.dot(b) / (na * nb);
    if undirected {
        c = fabs(c);
    }
    acos(c.clamp(-1.0, 1.0)) / DEG
}

/// Any unit vector orthogonal to `axis` (assumed unit length).
pub fn any_orthogonal(axis: &Vec3) -> Vec3 {
    let reference = if fabs(axis.z) < 0.9 { Vec3::z() } else { Vec3::x() };
    let u = reference - axis * reference.dot(axis);
    u / u.norm()
}
