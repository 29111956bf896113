//! PNG encoding for renders and slices; PNG/PGM decoding for camera frames.

use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbaImage};
use xct_core::render::ImageRGBA;
use xct_core::tracking::GrayImage;
use xct_core::volume::{Image2D, Volume};

use crate::error::read_file;
use crate::LabError;

fn encode(img: image::DynamicImage) -> Result<Vec<u8>, LabError> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| LabError::Internal(format!("PNG encoding failed: {e}")))?;
    Ok(out.into_inner())
}

pub fn encode_rgba(img: &ImageRGBA) -> Result<Vec<u8>, LabError> {
    let buf = RgbaImage::from_raw(img.width as u32, img.height as u32, img.pixels.clone())
        .ok_or_else(|| LabError::Internal("pixel buffer does not match image size".into()))?;
    encode(buf.into())
}

pub fn encode_gray(img: &GrayImage) -> Result<Vec<u8>, LabError> {
    let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, img.pixels.clone())
        .ok_or_else(|| LabError::Internal("pixel buffer does not match image size".into()))?;
    encode(buf.into())
}

/// Decodes a PNG or binary/ASCII PGM into 8-bit luminance.
pub fn decode_frame(bytes: &[u8]) -> Result<GrayImage, LabError> {
    let img = image::load_from_memory(bytes).map_err(|e| LabError::Image(e.to_string()))?;
    let gray = img.to_luma8();
    let (w, h) = gray.dimensions();
    GrayImage::from_pixels(w as usize, h as usize, gray.into_raw())
        .ok_or_else(|| LabError::Image("empty frame".into()))
}

pub fn read_frame(path: &Path) -> Result<GrayImage, LabError> {
    decode_frame(&read_file(path)?)
}

/// Binary PGM (`P5`) bytes of a frame.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// A slice of `v` mapped through the volume's intensity window to 8 bits.
pub fn slice_to_gray(v: &Volume, slice: &Image2D) -> GrayImage {
    let pixels = slice
        .pixels
        .iter()
        .map(|&raw| (255.0 * v.normalize(raw) + 0.5).floor().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::from_pixels(slice.width, slice.height, pixels).expect("slice dimensions match")
}
