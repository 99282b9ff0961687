//! Sampled Gaussian scale space and its difference-of-Gaussian stack.
//!
//! Each octave holds `s + 1` layers at nominal scales `sigma0 * k^j`,
//! `k = 2^(1/s)`, measured in that octave's pixels. Layer 0 of octave 0 is
//! the input blurred to `sigma0`; each following layer adds just enough
//! blur to reach the next scale. Layer `s` sits at `2 * sigma0`, and its
//! decimation seeds the next octave.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FusionError, Result};
use crate::filter::{convolve_plane, Kernel1D};
use crate::io::save_normalized;
use crate::raster::Image;
use crate::resample::downsample_half;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PyramidParams {
    octaves: usize,
    layers: usize,
    sigma0: f64,
    k: f64,
}

impl PyramidParams {
    pub const DEFAULT_SIGMA0: f64 = 1.0;

    pub fn new(octaves: usize, layers: usize) -> Result<Self> {
        Self::with_sigma0(octaves, layers, Self::DEFAULT_SIGMA0)
    }

    pub fn with_sigma0(octaves: usize, layers: usize, sigma0: f64) -> Result<Self> {
        if octaves == 0 {
            return Err(FusionError::param("octave count must be at least 1"));
        }
        if layers == 0 {
            return Err(FusionError::param("layers per octave must be at least 1"));
        }
        if !(sigma0.is_finite() && sigma0 > 0.0) {
            return Err(FusionError::param(format!(
                "initial scale must be positive, got {sigma0}"
            )));
        }
        Ok(Self {
            octaves,
            layers,
            sigma0,
            k: 2f64.powf(1.0 / layers as f64),
        })
    }

    pub fn octaves(&self) -> usize {
        self.octaves
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// Scale ratio between adjacent layers, `2^(1/s)`.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Nominal scale of layer `j` in its octave's pixel units.
    pub fn layer_sigma(&self, j: usize) -> f64 {
        self.sigma0 * self.k.powi(j as i32)
    }

    /// Blur taking layer `j` to layer `j + 1`.
    pub fn increment_sigma(&self, j: usize) -> f64 {
        self.layer_sigma(j) * (self.k * self.k - 1.0).sqrt()
    }

    /// Largest octave count an image of this size supports.
    pub fn max_octaves_for(width: usize, height: usize) -> usize {
        let min = width.min(height);
        if min == 0 {
            return 0;
        }
        (min.ilog2() as usize).saturating_sub(1)
    }

    pub fn validate_for(&self, width: usize, height: usize) -> Result<()> {
        let max = Self::max_octaves_for(width, height);
        if self.octaves > max {
            return Err(FusionError::param(format!(
                "{} octaves requested but a {width}x{height} image supports at most {max}",
                self.octaves
            )));
        }
        Ok(())
    }

    pub(crate) fn kernels(&self) -> Result<Vec<Kernel1D>> {
        let mut kernels = Vec::with_capacity(self.layers + 1);
        kernels.push(Kernel1D::gaussian(self.sigma0)?);
        for j in 0..self.layers {
            kernels.push(Kernel1D::gaussian(self.increment_sigma(j))?);
        }
        Ok(kernels)
    }
}

/// One octave of Gaussian layers at a common resolution.
#[derive(Clone, Debug)]
pub struct Octave {
    pub index: usize,
    pub layers: Vec<Image>,
}

impl Octave {
    pub fn dims(&self) -> (usize, usize) {
        self.layers[0].dims()
    }

    /// `|L_j - L_{j+1}|` for `j = 0..s`.
    pub fn dog_planes(&self) -> Vec<Image> {
        self.layers
            .windows(2)
            .map(|pair| abs_difference(&pair[0], &pair[1]))
            .collect()
    }
}

fn abs_difference(a: &Image, b: &Image) -> Image {
    let data = a
        .plane(0)
        .iter()
        .zip(b.plane(0))
        .map(|(x, y)| (x - y).abs())
        .collect();
    Image::from_plane_unchecked(a.width(), a.height(), data)
}

/// Lazily builds octaves one at a time, so callers that reduce each octave
/// immediately never hold the whole pyramid.
pub struct OctaveIter {
    params: PyramidParams,
    kernels: Vec<Kernel1D>,
    next_base: Option<Image>,
    index: usize,
}

impl OctaveIter {
    pub fn new(img: &Image, params: PyramidParams) -> Result<Self> {
        if !img.is_gray() {
            return Err(FusionError::input(
                "scale space is built on single-channel images",
            ));
        }
        params.validate_for(img.width(), img.height())?;
        let kernels = params.kernels()?;
        let (w, h) = img.dims();
        let base =
            Image::from_plane_unchecked(w, h, convolve_plane(img.plane(0), w, h, &kernels[0]));
        Ok(Self {
            params,
            kernels,
            next_base: Some(base),
            index: 0,
        })
    }

    pub fn params(&self) -> &PyramidParams {
        &self.params
    }
}

impl Iterator for OctaveIter {
    type Item = Octave;

    fn next(&mut self) -> Option<Octave> {
        if self.index >= self.params.octaves {
            return None;
        }
        let base = self.next_base.take()?;
        let (w, h) = base.dims();
        let mut layers = Vec::with_capacity(self.params.layers + 1);
        layers.push(base);
        for kernel in &self.kernels[1..] {
            let prev = layers.last().expect("octave has a base layer");
            let next = convolve_plane(prev.plane(0), w, h, kernel);
            layers.push(Image::from_plane_unchecked(w, h, next));
        }
        let octave = Octave {
            index: self.index,
            layers,
        };
        self.index += 1;
        if self.index < self.params.octaves {
            // validate_for guarantees every octave is at least 2x2.
            self.next_base = downsample_half(&octave.layers[self.params.layers]).ok();
        }
        Some(octave)
    }
}

#[derive(Clone, Debug)]
pub struct GaussianPyramid {
    params: PyramidParams,
    octaves: Vec<Octave>,
}

impl GaussianPyramid {
    pub fn params(&self) -> &PyramidParams {
        &self.params
    }

    pub fn octaves(&self) -> &[Octave] {
        &self.octaves
    }

    pub fn pixel_count(&self) -> usize {
        self.octaves
            .iter()
            .flat_map(|o| &o.layers)
            .map(Image::len)
            .sum()
    }

    /// Write every layer as `oct{t}_lay{j}.png` under `dir`.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for oct in &self.octaves {
            for (j, layer) in oct.layers.iter().enumerate() {
                crate::io::save(layer, dir.join(format!("oct{}_lay{j}.png", oct.index)))?;
            }
        }
        Ok(())
    }
}

/// Per-octave stacks of `|L(sigma) - L(k sigma)|` planes.
#[derive(Clone, Debug)]
pub struct DoGPyramid {
    octaves: Vec<Vec<Image>>,
}

impl DoGPyramid {
    pub fn octaves(&self) -> &[Vec<Image>] {
        &self.octaves
    }

    /// Write every plane as `oct{t}_lay{j}.png` under `dir`, min-max
    /// stretched for viewing.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (t, planes) in self.octaves.iter().enumerate() {
            for (j, plane) in planes.iter().enumerate() {
                save_normalized(plane, dir.join(format!("oct{t}_lay{j}.png")))?;
            }
        }
        Ok(())
    }
}

pub fn build_gaussian_pyramid(img: &Image, params: PyramidParams) -> Result<GaussianPyramid> {
    let octaves = OctaveIter::new(img, params)?.collect();
    Ok(GaussianPyramid { params, octaves })
}

pub fn build_dog_pyramid(gp: &GaussianPyramid) -> DoGPyramid {
    DoGPyramid {
        octaves: gp.octaves.iter().map(Octave::dog_planes).collect(),
    }
}
