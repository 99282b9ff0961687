//! PNG / BMP / TIFF decode and encode.
//!
//! 8-bit samples are divided by 255 and 16-bit samples by 65535. Alpha is
//! dropped. Encoding is 8-bit, format picked from the file extension.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use crate::error::{FusionError, Result};
use crate::raster::Image;

const SUPPORTED: &[ImageFormat] = &[ImageFormat::Png, ImageFormat::Bmp, ImageFormat::Tiff];

pub fn load(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let decoded = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
        .map_err(|source| FusionError::Decode {
            path: path.to_path_buf(),
            source,
        })?;
    from_dynamic(&decoded)
}

pub fn from_dynamic(img: &DynamicImage) -> Result<Image> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let gray = !img.color().has_color();
    let sixteen = img.color().bytes_per_pixel() / img.color().channel_count() >= 2;
    match (gray, sixteen) {
        (true, false) => {
            let buf = img.to_luma8();
            Image::from_plane(
                w,
                h,
                buf.pixels().map(|p| f64::from(p[0]) / 255.0).collect(),
            )
        }
        (true, true) => {
            let buf = img.to_luma16();
            Image::from_plane(
                w,
                h,
                buf.pixels().map(|p| f64::from(p[0]) / 65535.0).collect(),
            )
        }
        (false, false) => {
            let buf = img.to_rgb8();
            split_rgb(
                w,
                h,
                buf.pixels().map(|p| p.0.map(|v| f64::from(v) / 255.0)),
            )
        }
        (false, true) => {
            let buf = img.to_rgb16();
            split_rgb(
                w,
                h,
                buf.pixels().map(|p| p.0.map(|v| f64::from(v) / 65535.0)),
            )
        }
    }
}

fn split_rgb(w: usize, h: usize, pixels: impl Iterator<Item = [f64; 3]>) -> Result<Image> {
    let mut planes = vec![Vec::with_capacity(w * h); 3];
    for px in pixels {
        for (plane, v) in planes.iter_mut().zip(px) {
            plane.push(v);
        }
    }
    Image::from_planes(w, h, planes)
}

#[inline]
fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn to_dynamic(img: &Image) -> DynamicImage {
    let (w, h) = (img.width() as u32, img.height() as u32);
    if img.is_gray() {
        let data = img.plane(0).iter().map(|&v| to_u8(v)).collect();
        let buf = ImageBuffer::<Luma<u8>, Vec<u8>>::from_raw(w, h, data)
            .expect("buffer length matches dimensions");
        DynamicImage::ImageLuma8(buf)
    } else {
        let mut data = Vec::with_capacity(img.len() * 3);
        for i in 0..img.len() {
            for c in 0..3 {
                data.push(to_u8(img.plane(c)[i]));
            }
        }
        let buf = ImageBuffer::<Rgb<u8>, Vec<u8>>::from_raw(w, h, data)
            .expect("buffer length matches dimensions");
        DynamicImage::ImageRgb8(buf)
    }
}

/// Encode as 8-bit, clamping to `[0, 1]`.
pub fn save(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = ImageFormat::from_path(path)
        .ok()
        .filter(|f| SUPPORTED.contains(f))
        .ok_or_else(|| {
            FusionError::param(format!(
                "{}: output must end in .png, .bmp, .tif or .tiff",
                path.display()
            ))
        })?;
    to_dynamic(img)
        .save_with_format(path, format)
        .map_err(|source| match source {
            image::ImageError::IoError(e) => FusionError::Io(e),
            source => FusionError::Encode {
                path: path.to_path_buf(),
                source,
            },
        })
}

/// Min-max stretch to `[0, 1]` and save. Visualization only.
pub fn save_normalized(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let (lo, hi) = img.min_max();
    let span = hi - lo;
    let stretched = if span > 0.0 {
        img.map(|v| (v - lo) / span)
    } else {
        img.map(|_| 0.0)
    };
    save(&stretched, path)
}
