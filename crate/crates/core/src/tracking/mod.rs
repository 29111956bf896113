//! Square binary fiducials: dictionary, detection, planar pose and a
//! synthetic frame generator.
//!
//! Camera frame: x right, y down, z forward. Marker frame: origin at the
//! marker center, x right, y down, z into the marker, so a marker facing
//! the camera squarely has identity rotation. Corners are reported
//! top-left, bottom-left, bottom-right, top-right in the marker's own
//! orientation.

pub mod code;
mod detect;
pub mod pose;
pub mod registry;
pub mod synth;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use code::{Dictionary, DictionaryError, MarkerDescriptor};
pub use detect::{detect_markers, detect_markers_with, DetectorParams};
pub use pose::{estimate_pose, CameraIntrinsics, PoseError};
pub use registry::{MarkerRegistry, RegistryError};

use crate::geometry::Pose6DoF;
use crate::math::floor;

/// 8-bit grayscale frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Option<Self> {
        (pixels.len() == width * height).then_some(GrayImage {
            width,
            height,
            pixels,
        })
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Bilinear sample with pixel centers at integer coordinates, clamped
    /// at the borders.
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let xm = (self.width - 1) as f64;
        let ym = (self.height - 1) as f64;
        let x = x.clamp(0.0, xm);
        let y = y.clamp(0.0, ym);
        let x0 = floor(x) as usize;
        let y0 = floor(y) as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let a = self.at(x0, y0) as f64 * (1.0 - fx) + self.at(x1, y0) as f64 * fx;
        let b = self.at(x0, y1) as f64 * (1.0 - fx) + self.at(x1, y1) as f64 * fx;
        a * (1.0 - fy) + b * fy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub id: u32,
    /// Subpixel corners: top-left, bottom-left, bottom-right, top-right.
    pub corners: [[f64; 2]; 4],
    /// Marker-to-camera pose (mm).
    pub pose: Pose6DoF,
    /// Bits corrected while decoding (0 or 1).
    pub bit_errors: u32,
    /// Gray-level difference between quiet zone and border.
    pub contrast: f64,
    /// RMS distance between the corners and the reprojected pose (px).
    pub reprojection_rms: f64,
}
