//! Analysis kernels for X-ray CT inspection of fiber-reinforced composites.
//!
//! The crate is `no_std` (with `alloc`) and contains no IO. Byte buffers and
//! text documents go in, typed values come out:
//!
//! - [`volume`]: RAW voxel decoding, the key=value sidecar header, slices.
//! - [`filter`]: separable Gaussian smoothing.
//! - [`hessian`]: finite-difference Hessians and symmetric 3×3 eigensolves.
//! - [`fibers`]: tubularity response, medial-axis tracing, per-fiber
//!   characterization.
//! - [`table`]: the 20-column fiber record schema.
//! - [`geometry`]: similarity poses, cylinder meshes, zoom math.
//! - [`render`]: software raycasting (MIP and emission/absorption DVR).
//! - [`charts`]: histogram, KDE, bar aggregation and 3D scatter data.
//! - [`tracking`]: square binary fiducials, homography pose recovery.
//! - [`phantom`]: seeded synthetic cylinder volumes with ground truth.
//!
//! The default `std` feature only enables `std` linkage; `parallel` adds
//! rayon-backed voxel and pixel loops whose output is identical to the
//! sequential path.

#![cfg_attr(not(feature = "std"), no_std)]
// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod charts;
pub mod fibers;
pub mod filter;
pub mod geometry;
pub mod hessian;
pub mod math;
mod par;
pub mod phantom;
pub mod render;
pub mod table;
pub mod tracking;
pub mod volume;

pub use fibers::{characterize, trace_fibers, ExtractionConfig, FiberTrace};
pub use geometry::{fiber_to_cylinder, pinch_scale, CylinderMesh, Pose6DoF};
pub use table::{FiberRecord, FiberTable};
pub use volume::{load_raw, parse_meta, Axis, Dtype, Image2D, Volume, VolumeMeta};
