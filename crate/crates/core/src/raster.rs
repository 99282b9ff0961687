//! Planar floating-point raster.
//!
//! Every image in the pipeline is stored as one `Vec<f64>` per channel in
//! row-major order. Decoded sources and fused outputs live in `[0, 1]`;
//! intermediate planes (saliency responses, filter coefficients) reuse the
//! same type but are not range-limited.

use crate::error::{FusionError, Result};

/// ITU-R BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    planes: Vec<Vec<f64>>,
}

impl Image {
    /// Zero-filled image with 1 or 3 channels.
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        check_shape(width, height, channels)?;
        if !value.is_finite() {
            return Err(FusionError::input("fill value must be finite"));
        }
        Ok(Self {
            width,
            height,
            planes: vec![vec![value; width * height]; channels],
        })
    }

    /// Single-channel image from a row-major buffer.
    pub fn from_plane(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_planes(width, height, vec![data])
    }

    pub fn from_planes(width: usize, height: usize, planes: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(width, height, planes.len())?;
        for (c, plane) in planes.iter().enumerate() {
            if plane.len() != width * height {
                return Err(FusionError::input(format!(
                    "plane {c} has {} samples, expected {}x{}={}",
                    plane.len(),
                    width,
                    height,
                    width * height
                )));
            }
            if plane.iter().any(|v| !v.is_finite()) {
                return Err(FusionError::input(format!(
                    "plane {c} contains non-finite samples"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    /// Single-channel image sampled from `f(x, y)`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_plane(width, height, data)
    }

    /// Internal constructor for buffers produced by our own kernels.
    pub(crate) fn from_plane_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            planes: vec![data],
        }
    }

    pub(crate) fn from_planes_unchecked(
        width: usize,
        height: usize,
        planes: Vec<Vec<f64>>,
    ) -> Self {
        debug_assert!(planes.iter().all(|p| p.len() == width * height));
        Self {
            width,
            height,
            planes,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_gray(&self) -> bool {
        self.planes.len() == 1
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        &self.planes[c]
    }

    pub fn planes(&self) -> &[Vec<f64>] {
        &self.planes
    }

    pub fn into_planes(self) -> Vec<Vec<f64>> {
        self.planes
    }

    /// First-channel sample at `(x, y)`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.planes[0][y * self.width + x]
    }

    #[inline]
    pub fn get_channel(&self, c: usize, x: usize, y: usize) -> f64 {
        self.planes[c][y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.planes[0][y * self.width + x] = value;
    }

    #[inline]
    pub fn set_channel(&mut self, c: usize, x: usize, y: usize, value: f64) {
        self.planes[c][y * self.width + x] = value;
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.dims() == other.dims()
    }

    /// Apply `f` to every sample of every channel.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        let planes = self
            .planes
            .iter()
            .map(|p| p.iter().map(|&v| f(v)).collect())
            .collect();
        Image::from_planes_unchecked(self.width, self.height, planes)
    }

    pub fn clamped(&self) -> Image {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// `(min, max)` over all channels.
    pub fn min_max(&self) -> (f64, f64) {
        self.planes
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Single channel `c` as its own image.
    pub fn channel(&self, c: usize) -> Image {
        Image::from_plane_unchecked(self.width, self.height, self.planes[c].clone())
    }

    /// Luma conversion; single-channel images are returned unchanged.
    pub fn to_gray(&self) -> Image {
        if self.is_gray() {
            return self.clone();
        }
        let [wr, wg, wb] = LUMA_WEIGHTS;
        let (r, g, b) = (&self.planes[0], &self.planes[1], &self.planes[2]);
        let data = r
            .iter()
            .zip(g)
            .zip(b)
            .map(|((&r, &g), &b)| (wr * r + wg * g + wb * b).clamp(0.0, 1.0))
            .collect();
        Image::from_plane_unchecked(self.width, self.height, data)
    }
}

/// Free-function form of [`Image::to_gray`].
pub fn to_gray(img: &Image) -> Image {
    img.to_gray()
}

fn check_shape(width: usize, height: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(FusionError::input(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if channels != 1 && channels != 3 {
        return Err(FusionError::input(format!(
            "images must have 1 or 3 channels, got {channels}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Image::new(0, 4, 1).is_err());
        assert!(Image::new(4, 4, 2).is_err());
        assert!(Image::from_plane(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::from_plane(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn gray_of_white_is_one() {
        let img = Image::filled(3, 2, 3, 1.0).unwrap();
        let g = img.to_gray();
        assert_eq!(g.channels(), 1);
        for &v in g.plane(0) {
            assert!((v - 1.0).abs() < 1e-12 && v <= 1.0);
        }
    }

    #[test]
    fn gray_of_red_is_red_weight() {
        let img = Image::from_planes(1, 1, vec![vec![1.0], vec![0.0], vec![0.0]]).unwrap();
        assert_eq!(img.to_gray().get(0, 0), 0.299);
    }

    #[test]
    fn gray_is_identity_on_gray() {
        let img = Image::from_fn(4, 3, |x, y| (x + y) as f64 / 10.0).unwrap();
        assert_eq!(to_gray(&img), img);
    }

    #[test]
    fn gray_stays_in_unit_range() {
        let planes = (0..3)
            .map(|c| {
                (0..64)
                    .map(|i| ((i * 7 + c * 13) % 17) as f64 / 16.0)
                    .collect()
            })
            .collect();
        let img = Image::from_planes(8, 8, planes).unwrap();
        let (lo, hi) = img.to_gray().min_max();
        assert!(lo >= 0.0 && hi <= 1.0);
    }
}
