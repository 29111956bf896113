//! Primary voxel data: headerless RAW payloads described by a small
//! key=value sidecar.
//!
//! Layout contract: voxel `(x, y, z)` lives at flat index
//! `x + dims[0] * (y + dims[1] * z)` (x fastest), no padding, byte order per
//! the sidecar `ByteOrder` key.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VolumeError {
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("bad value for `{key}`: `{token}`")]
    BadValue { key: String, token: String },
    #[error("unknown element type `{0}` (expected uint8, uint16 or float32)")]
    UnknownDtype(String),
    #[error("RAW length mismatch: expected {expected} bytes, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("slice index {index} out of range for axis {axis:?} of length {len}")]
    IndexOutOfRange { axis: Axis, index: usize, len: usize },
    #[error("data length {actual} does not match dims product {expected}")]
    DataLength { expected: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    Uint8,
    Uint16,
    Float32,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::Uint8 => 1,
            Dtype::Uint16 => 2,
            Dtype::Float32 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dtype::Uint8 => "uint8",
            Dtype::Uint16 => "uint16",
            Dtype::Float32 => "float32",
        }
    }

    pub fn is_integer(self) -> bool {
        !matches!(self, Dtype::Float32)
    }
}

impl FromStr for Dtype {
    type Err = VolumeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // MetaImage spellings are accepted so existing headers load as-is.
        match s {
            "uint8" | "MET_UCHAR" => Ok(Dtype::Uint8),
            "uint16" | "MET_USHORT" => Ok(Dtype::Uint16),
            "float32" | "MET_FLOAT" => Ok(Dtype::Float32),
            other => Err(VolumeError::UnknownDtype(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ByteOrder {
    #[default]
    Little,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(format!("unknown axis `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeMeta {
    pub dims: [usize; 3],
    /// Millimetres per voxel along x, y, z.
    pub spacing: [f64; 3],
    pub dtype: Dtype,
    pub byte_order: ByteOrder,
    /// World position (mm) of voxel (0, 0, 0).
    pub origin: [f64; 3],
}

impl VolumeMeta {
    pub fn new(dims: [usize; 3], dtype: Dtype) -> Self {
        Self {
            dims,
            spacing: [1.0; 3],
            dtype,
            byte_order: ByteOrder::Little,
            origin: [0.0; 3],
        }
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn byte_len(&self) -> usize {
        self.voxel_count() * self.dtype.size()
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn validate(&self) -> Result<(), VolumeError> {
        if let Some(d) = self.dims.iter().find(|&&d| d == 0) {
            return Err(VolumeError::BadValue {
                key: "DimSize".into(),
                token: d.to_string(),
            });
        }
        if let Some(s) = self.spacing.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(VolumeError::BadValue {
                key: "ElementSpacing".into(),
                token: format!("{s}"),
            });
        }
        Ok(())
    }
}

fn parse_triple<T: FromStr>(key: &str, value: &str) -> Result<[T; 3], VolumeError> {
    let bad = |token: &str| VolumeError::BadValue {
        key: key.to_string(),
        token: token.to_string(),
    };
    let tokens: Vec<&str> = value.split_whitespace().collect();
    if tokens.len() != 3 {
        return Err(bad(value));
    }
    let mut out = Vec::with_capacity(3);
    for t in tokens {
        out.push(t.parse::<T>().map_err(|_| bad(t))?);
    }
    match <[T; 3]>::try_from(out) {
        Ok(a) => Ok(a),
        Err(_) => Err(bad(value)),
    }
}

/// Parses the sidecar header.
///
/// One `Key = value` pair per line; blank lines and `#` comments are skipped,
/// unknown keys are ignored. `DimSize` and `ElementType` are required;
/// `ElementSpacing` defaults to `1 1 1`, `ByteOrder` to `little`, `Origin` to
/// `0 0 0`.
pub fn parse_meta(text: &str) -> Result<VolumeMeta, VolumeError> {
    let mut dims = None;
    let mut dtype = None;
    let mut spacing = [1.0; 3];
    let mut byte_order = ByteOrder::Little;
    let mut origin = [0.0; 3];

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(VolumeError::BadValue {
                key: "<line>".into(),
                token: line.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "DimSize" => {
                let d: [usize; 3] = parse_triple(key, value)?;
                if let Some(z) = d.iter().find(|&&v| v == 0) {
                    return Err(VolumeError::BadValue {
                        key: key.into(),
                        token: z.to_string(),
                    });
                }
                dims = Some(d);
            }
            "ElementType" => dtype = Some(value.parse::<Dtype>()?),
            "ElementSpacing" => spacing = parse_triple(key, value)?,
            "Origin" | "Offset" => origin = parse_triple(key, value)?,
            "ByteOrder" => {
                byte_order = match value.to_ascii_lowercase().as_str() {
                    "little" => ByteOrder::Little,
                    "big" => ByteOrder::Big,
                    _ => {
                        return Err(VolumeError::BadValue {
                            key: key.into(),
                            token: value.into(),
                        })
                    }
                }
            }
            "ElementByteOrderMSB" | "BinaryDataByteOrderMSB" => {
                byte_order = match value {
                    "True" | "true" => ByteOrder::Big,
                    "False" | "false" => ByteOrder::Little,
                    _ => {
                        return Err(VolumeError::BadValue {
                            key: key.into(),
                            token: value.into(),
                        })
                    }
                }
            }
            _ => {}
        }
    }

    let meta = VolumeMeta {
        dims: dims.ok_or(VolumeError::MissingKey("DimSize"))?,
        spacing,
        dtype: dtype.ok_or(VolumeError::MissingKey("ElementType"))?,
        byte_order,
        origin,
    };
    meta.validate()?;
    Ok(meta)
}

/// Serializes a header that [`parse_meta`] reads back unchanged.
pub fn write_meta(meta: &VolumeMeta) -> String {
    let mut s = String::new();
    let [dx, dy, dz] = meta.dims;
    let [sx, sy, sz] = meta.spacing;
    let [ox, oy, oz] = meta.origin;
    let order = match meta.byte_order {
        ByteOrder::Little => "little",
        ByteOrder::Big => "big",
    };
    let _ = writeln!(s, "DimSize = {dx} {dy} {dz}");
    let _ = writeln!(s, "ElementType = {}", meta.dtype.name());
    let _ = writeln!(s, "ElementSpacing = {sx:?} {sy:?} {sz:?}");
    let _ = writeln!(s, "ByteOrder = {order}");
    let _ = writeln!(s, "Origin = {ox:?} {oy:?} {oz:?}");
    s
}

/// A decoded volume.
///
/// Raw scalar values are kept as `f32` (exact for every supported dtype) so
/// histograms see the stored integers; [`Volume::normalized`] maps them to
/// `[0, 1]` through the intensity window.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    meta: VolumeMeta,
    data: Vec<f32>,
    window: (f64, f64),
}

impl Volume {
    /// Builds a volume from raw values, using the dtype's natural window
    /// (full integer range, or the data min..max for float32).
    pub fn from_values(meta: VolumeMeta, data: Vec<f32>) -> Result<Self, VolumeError> {
        meta.validate()?;
        let expected = meta.voxel_count();
        if data.len() != expected {
            return Err(VolumeError::DataLength {
                expected,
                actual: data.len(),
            });
        }
        let window = default_window(meta.dtype, &data);
        Ok(Self { meta, data, window })
    }

    /// Like [`Volume::from_values`] with an explicit normalization window.
    pub fn with_window(
        meta: VolumeMeta,
        data: Vec<f32>,
        window: (f64, f64),
    ) -> Result<Self, VolumeError> {
        let mut v = Self::from_values(meta, data)?;
        v.window = window;
        Ok(v)
    }

    pub fn meta(&self) -> &VolumeMeta {
        &self.meta
    }

    pub fn dims(&self) -> [usize; 3] {
        self.meta.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.meta.spacing
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        let [dx, dy, _] = self.meta.dims;
        x + dx * (y + dy * z)
    }

    /// Raw value at an in-bounds voxel.
    #[inline]
    pub fn voxel(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.index(x, y, z)] as f64
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> Option<f64> {
        let [dx, dy, dz] = self.meta.dims;
        (x < dx && y < dy && z < dz).then(|| self.voxel(x, y, z))
    }

    /// Value mapped through the intensity window and clamped to `[0, 1]`.
    #[inline]
    pub fn normalize(&self, raw: f64) -> f64 {
        let (lo, hi) = self.window;
        let span = hi - lo;
        if span <= 0.0 {
            return if raw > lo { 1.0 } else { 0.0 };
        }
        crate::math::clamp01((raw - lo) / span)
    }

    #[inline]
    pub fn normalized(&self, x: usize, y: usize, z: usize) -> f64 {
        self.normalize(self.voxel(x, y, z))
    }

    /// World position (mm) of a voxel-space coordinate.
    pub fn voxel_to_world(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.meta;
        core::array::from_fn(|i| m.origin[i] + p[i] * m.spacing[i])
    }

    pub fn world_to_voxel(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.meta;
        core::array::from_fn(|i| (p[i] - m.origin[i]) / m.spacing[i])
    }

    /// Trilinear interpolation of raw values at a continuous voxel-space
    /// position; `None` outside the hull of voxel centers.
    pub fn trilinear_raw(&self, p: [f64; 3]) -> Option<f64> {
        let dims = self.meta.dims;
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for i in 0..3 {
            let max = (dims[i] - 1) as f64;
            if !(p[i] >= 0.0 && p[i] <= max) {
                return None;
            }
            let b = libm::floor(p[i]).min((dims[i].max(2) - 2) as f64).max(0.0);
            base[i] = b as usize;
            frac[i] = p[i] - b;
        }
        let [dx, dy, _] = dims;
        let d = &self.data;
        let step = |axis: usize| usize::from(dims[axis] > 1);
        let (ox, oy, oz) = (step(0), dx * step(1), dx * dy * step(2));
        let i0 = base[0] + dx * (base[1] + dy * base[2]);
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let v = |o: usize| d[i0 + o] as f64;
        let c00 = lerp(v(0), v(ox), frac[0]);
        let c10 = lerp(v(oy), v(ox + oy), frac[0]);
        let c01 = lerp(v(oz), v(ox + oz), frac[0]);
        let c11 = lerp(v(oy + oz), v(ox + oy + oz), frac[0]);
        Some(lerp(
            lerp(c00, c10, frac[1]),
            lerp(c01, c11, frac[1]),
            frac[2],
        ))
    }

    /// Re-encodes the stored values with the header's dtype and byte order.
    pub fn to_raw_bytes(&self) -> Vec<u8> {
        let big = self.meta.byte_order == ByteOrder::Big;
        let mut out = Vec::with_capacity(self.meta.byte_len());
        match self.meta.dtype {
            Dtype::Uint8 => out.extend(self.data.iter().map(|&v| v as u8)),
            Dtype::Uint16 => {
                for &v in &self.data {
                    let v = v as u16;
                    out.extend_from_slice(&if big { v.to_be_bytes() } else { v.to_le_bytes() });
                }
            }
            Dtype::Float32 => {
                for &v in &self.data {
                    out.extend_from_slice(&if big { v.to_be_bytes() } else { v.to_le_bytes() });
                }
            }
        }
        out
    }

    /// Axis-aligned cross-section.
    ///
    /// The two remaining axes keep ascending order: slicing z gives an image
    /// indexed `(x, y)`, slicing y gives `(x, z)`, slicing x gives `(y, z)`.
    /// Pixel `(i, j)` is stored at `i + width * j`.
    pub fn extract_slice(&self, axis: Axis, index: usize) -> Result<Image2D, VolumeError> {
        let [dx, dy, dz] = self.meta.dims;
        let len = self.meta.dims[axis.index()];
        if index >= len {
            return Err(VolumeError::IndexOutOfRange { axis, index, len });
        }
        let (width, height) = match axis {
            Axis::X => (dy, dz),
            Axis::Y => (dx, dz),
            Axis::Z => (dx, dy),
        };
        let mut pixels = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                let v = match axis {
                    Axis::X => self.voxel(index, i, j),
                    Axis::Y => self.voxel(i, index, j),
                    Axis::Z => self.voxel(i, j, index),
                };
                pixels.push(v);
            }
        }
        Ok(Image2D {
            width,
            height,
            pixels,
        })
    }
}

fn default_window(dtype: Dtype, data: &[f32]) -> (f64, f64) {
    match dtype {
        Dtype::Uint8 => (0.0, u8::MAX as f64),
        Dtype::Uint16 => (0.0, u16::MAX as f64),
        Dtype::Float32 => {
            let (lo, hi) = data
                .iter()
                .filter(|v| v.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v as f64), hi.max(v as f64))
                });
            if lo.is_finite() && hi > lo {
                (lo, hi)
            } else if lo.is_finite() {
                (lo, lo + 1.0)
            } else {
                (0.0, 1.0)
            }
        }
    }
}

/// Decodes a headerless RAW payload.
pub fn load_raw(bytes: &[u8], meta: VolumeMeta) -> Result<Volume, VolumeError> {
    meta.validate()?;
    let expected = meta.byte_len();
    if bytes.len() != expected {
        return Err(VolumeError::LengthMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let big = meta.byte_order == ByteOrder::Big;
    let data: Vec<f32> = match meta.dtype {
        Dtype::Uint8 => bytes.iter().map(|&b| b as f32).collect(),
        Dtype::Uint16 => bytes
            .chunks_exact(2)
            .map(|c| {
                let b = [c[0], c[1]];
                (if big { u16::from_be_bytes(b) } else { u16::from_le_bytes(b) }) as f32
            })
            .collect(),
        Dtype::Float32 => bytes
            .chunks_exact(4)
            .map(|c| {
                let b = [c[0], c[1], c[2], c[3]];
                if big {
                    f32::from_be_bytes(b)
                } else {
                    f32::from_le_bytes(b)
                }
            })
            .collect(),
    };
    Volume::from_values(meta, data)
}

/// A 2D scalar image (slices, grayscale camera frames).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image2D {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Image2D {
    pub fn new(width: usize, height: usize, fill: f64) -> Self {
        Self {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Option<Self> {
        (width >= 1 && height >= 1 && pixels.len() == width * height).then_some(Self {
            width,
            height,
            pixels,
        })
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.pixels[x + self.width * y]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[x + self.width * y] = v;
    }

    /// Bilinear sample with pixel centers at integer coordinates, clamped at
    /// the border.
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let xm = (self.width - 1) as f64;
        let ym = (self.height - 1) as f64;
        let x = x.clamp(0.0, xm);
        let y = y.clamp(0.0, ym);
        let x0 = libm::floor(x) as usize;
        let y0 = libm::floor(y) as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let a = self.at(x0, y0) * (1.0 - fx) + self.at(x1, y0) * fx;
        let b = self.at(x0, y1) * (1.0 - fx) + self.at(x1, y1) * fx;
        a * (1.0 - fy) + b * fy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(dims: [usize; 3]) -> Volume {
        let n = dims.iter().product::<usize>();
        Volume::from_values(
            VolumeMeta::new(dims, Dtype::Uint8),
            (0..n).map(|v| v as f32).collect(),
        )
        .unwrap()
    }

    #[test]
    fn meta_defaults() {
        let m = parse_meta("DimSize=2 2 2\nElementType=uint8").unwrap();
        assert_eq!(m.dims, [2, 2, 2]);
        assert_eq!(m.dtype, Dtype::Uint8);
        assert_eq!(m.spacing, [1.0, 1.0, 1.0]);
        assert_eq!(m.origin, [0.0, 0.0, 0.0]);
        assert_eq!(m.byte_order, ByteOrder::Little);
    }

    #[test]
    fn meta_use_case_dims() {
        let m = parse_meta("DimSize=250 250 300\nElementType=uint16").unwrap();
        assert_eq!(m.dims, [250, 250, 300]);
        assert_eq!(m.byte_len(), 37_500_000);
    }

    #[test]
    fn meta_errors() {
        assert!(matches!(
            parse_meta("DimSize=0 2 2\nElementType=uint8"),
            Err(VolumeError::BadValue { ref key, ref token }) if key == "DimSize" && token == "0"
        ));
        assert_eq!(
            parse_meta("ElementType=uint8"),
            Err(VolumeError::MissingKey("DimSize"))
        );
        assert_eq!(
            parse_meta("DimSize=1 1 1"),
            Err(VolumeError::MissingKey("ElementType"))
        );
        assert_eq!(
            parse_meta("DimSize=1 1 1\nElementType=int64"),
            Err(VolumeError::UnknownDtype("int64".into()))
        );
        assert!(matches!(
            parse_meta("DimSize=1 x 1\nElementType=uint8"),
            Err(VolumeError::BadValue { ref token, .. }) if token == "x"
        ));
        assert!(parse_meta("DimSize=1 1 1\nElementType=uint8\nElementSpacing=1 -1 1").is_err());
    }

    #[test]
    fn meta_full_and_mhd_aliases() {
        let text = "# scan 42\nDimSize = 4 5 6\nElementType = MET_USHORT\n\
                    ElementSpacing = 0.5 0.5 2\nElementByteOrderMSB = True\nOffset = 1 2 3\nNDims = 3\n";
        let m = parse_meta(text).unwrap();
        assert_eq!(m.dims, [4, 5, 6]);
        assert_eq!(m.dtype, Dtype::Uint16);
        assert_eq!(m.spacing, [0.5, 0.5, 2.0]);
        assert_eq!(m.byte_order, ByteOrder::Big);
        assert_eq!(m.origin, [1.0, 2.0, 3.0]);
        assert_eq!(parse_meta(&write_meta(&m)).unwrap(), m);
    }

    #[test]
    fn raw_identity_layout() {
        let v = load_raw(&[0, 1, 2, 3, 4, 5, 6, 7], VolumeMeta::new([2, 2, 2], Dtype::Uint8)).unwrap();
        assert_eq!(v.voxel(1, 1, 1), 7.0);
        assert_eq!(v.voxel(1, 0, 0), 1.0);
        assert_eq!(v.voxel(0, 1, 0), 2.0);
        assert_eq!(v.voxel(0, 0, 1), 4.0);
    }

    #[test]
    fn raw_length_mismatch() {
        let meta = VolumeMeta::new([2, 2, 2], Dtype::Uint16);
        assert_eq!(
            load_raw(&[0; 15], meta),
            Err(VolumeError::LengthMismatch {
                expected: 16,
                actual: 15
            })
        );
    }

    #[test]
    fn raw_big_endian() {
        let mut meta = VolumeMeta::new([1, 1, 1], Dtype::Uint16);
        meta.byte_order = ByteOrder::Big;
        let v = load_raw(&[0x01, 0x00], meta).unwrap();
        assert_eq!(v.voxel(0, 0, 0), 256.0);
        assert_eq!(v.to_raw_bytes(), [0x01, 0x00]);
    }

    #[test]
    fn normalized_window() {
        let v = load_raw(&[0, 255], VolumeMeta::new([2, 1, 1], Dtype::Uint8)).unwrap();
        assert_eq!(v.normalized(0, 0, 0), 0.0);
        assert_eq!(v.normalized(1, 0, 0), 1.0);
        let f = Volume::from_values(VolumeMeta::new([2, 1, 1], Dtype::Float32), vec![-2.0, 6.0]).unwrap();
        assert_eq!(f.window(), (-2.0, 6.0));
        assert_eq!(f.normalize(2.0), 0.5);
    }

    #[test]
    fn slice_z() {
        let v = ramp([2, 2, 2]);
        let s = v.extract_slice(Axis::Z, 1).unwrap();
        assert_eq!((s.width, s.height), (2, 2));
        assert_eq!(s.pixels, [4.0, 5.0, 6.0, 7.0]);
        assert_eq!(
            v.extract_slice(Axis::Z, 2),
            Err(VolumeError::IndexOutOfRange {
                axis: Axis::Z,
                index: 2,
                len: 2
            })
        );
    }

    #[test]
    fn slice_orientation_xy() {
        let v = ramp([2, 3, 4]);
        let sx = v.extract_slice(Axis::X, 1).unwrap();
        assert_eq!((sx.width, sx.height), (3, 4));
        assert_eq!(sx.at(2, 3), v.voxel(1, 2, 3));
        let sy = v.extract_slice(Axis::Y, 2).unwrap();
        assert_eq!((sy.width, sy.height), (2, 4));
        assert_eq!(sy.at(1, 3), v.voxel(1, 2, 3));
    }

    #[test]
    fn slice_of_constant_is_constant() {
        let v = Volume::from_values(VolumeMeta::new([3, 4, 5], Dtype::Uint8), vec![9.0; 60]).unwrap();
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let s = v.extract_slice(axis, 1).unwrap();
            assert!(s.pixels.iter().all(|&p| p == 9.0));
        }
    }
}
