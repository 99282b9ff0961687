//! Scale-invariant structure saliency.
//!
//! Every pyramid layer yields a scale-dependent response (DoG magnitude,
//! gradient energy, or scale-normalized Laplacian) smoothed by a 3x3
//! Gaussian integration filter. Responses are max-reduced within each
//! octave, the octave maxima are upsampled to the source grid, and the
//! final map is their pixelwise maximum.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FusionError, Result};
use crate::filter::{convolve_plane, convolve_plane_into, convolve_rows_into, Kernel1D};
use crate::raster::Image;
use crate::resample::{downsample_half, upsample_rows};
use crate::scale_space::PyramidParams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaliencyMetric {
    /// `|L(sigma) - L(k sigma)|`.
    #[default]
    Dog,
    /// `Lx^2 + Ly^2`, no scale normalization.
    #[serde(rename = "grad")]
    Gradient,
    /// `sigma^2 |Lxx + Lyy|`.
    Log,
}

impl SaliencyMetric {
    pub fn as_str(&self) -> &'static str {
        match self {
            SaliencyMetric::Dog => "dog",
            SaliencyMetric::Gradient => "grad",
            SaliencyMetric::Log => "log",
        }
    }
}

impl fmt::Display for SaliencyMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SaliencyMetric {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dog" => Ok(Self::Dog),
            "grad" | "gradient" => Ok(Self::Gradient),
            "log" => Ok(Self::Log),
            other => Err(FusionError::param(format!(
                "unknown saliency metric {other:?} (expected dog, grad or log)"
            ))),
        }
    }
}

/// 3x3 Gaussian low-pass applied to raw per-layer responses.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationFilter {
    sigma: f64,
    kernel: Kernel1D,
}

impl IntegrationFilter {
    pub const DEFAULT_SIGMA: f64 = 0.8;

    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(FusionError::param(format!(
                "integration sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self {
            sigma,
            kernel: Kernel1D::gaussian_with_radius(sigma, 1),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The 3x3 weight matrix, row-major.
    pub fn weights_2d(&self) -> [[f64; 3]; 3] {
        let k = self.kernel.weights();
        std::array::from_fn(|i| std::array::from_fn(|j| k[i] * k[j]))
    }

    pub fn apply(&self, img: &Image) -> Image {
        let (w, h) = img.dims();
        Image::from_plane_unchecked(w, h, self.apply_plane(img.plane(0), w, h))
    }

    fn apply_plane(&self, data: &[f64], w: usize, h: usize) -> Vec<f64> {
        convolve_plane(data, w, h, &self.kernel)
    }
}

impl Default for IntegrationFilter {
    fn default() -> Self {
        Self::new(Self::DEFAULT_SIGMA).expect("default sigma is valid")
    }
}

/// Final saliency map of one source.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    pub map: Image,
    pub source_index: usize,
}

impl SaliencyMap {
    pub fn with_source_index(mut self, index: usize) -> Self {
        self.source_index = index;
        self
    }
}

/// A saliency map together with the per-octave maxima it was built from
/// (each at its own octave resolution).
#[derive(Clone, Debug)]
pub struct SaliencyBreakdown {
    pub map: SaliencyMap,
    pub octave_maxima: Vec<Image>,
}

pub fn saliency_dog(dog_plane: &Image) -> Image {
    IntegrationFilter::default().apply(dog_plane)
}

/// `sigma` is accepted for symmetry with [`saliency_log`]; the gradient
/// response carries no scale normalization.
pub fn saliency_gradient(layer: &Image, _sigma: f64) -> Image {
    let (w, h) = layer.dims();
    let energy = gradient_energy(layer.plane(0), w, h);
    Image::from_plane_unchecked(
        w,
        h,
        IntegrationFilter::default().apply_plane(&energy, w, h),
    )
}

pub fn saliency_log(layer: &Image, sigma: f64) -> Image {
    let (w, h) = layer.dims();
    let response = laplacian_response(layer.plane(0), w, h, sigma);
    Image::from_plane_unchecked(
        w,
        h,
        IntegrationFilter::default().apply_plane(&response, w, h),
    )
}

/// Central-difference `Lx^2 + Ly^2` with replicated borders.
pub(crate) fn gradient_energy(data: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    gradient_energy_into(data, w, h, &mut out);
    out
}

fn gradient_energy_into(data: &[f64], w: usize, h: usize, out: &mut [f64]) {
    for (y, orow) in out.chunks_exact_mut(w).enumerate() {
        gradient_energy_row(data, w, h, y, orow);
    }
}

fn gradient_energy_row(data: &[f64], w: usize, h: usize, y: usize, orow: &mut [f64]) {
    let up = &data[y.saturating_sub(1) * w..][..w];
    let down = &data[(y + 1).min(h - 1) * w..][..w];
    let row = &data[y * w..][..w];
    for (x, o) in orow.iter_mut().enumerate() {
        let gx = 0.5 * (row[(x + 1).min(w - 1)] - row[x.saturating_sub(1)]);
        let gy = 0.5 * (down[x] - up[x]);
        *o = gx * gx + gy * gy;
    }
}

/// `sigma^2 |5-point Laplacian|` with replicated borders.
pub(crate) fn laplacian_response(data: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    laplacian_response_into(data, w, h, sigma, &mut out);
    out
}

fn laplacian_response_into(data: &[f64], w: usize, h: usize, sigma: f64, out: &mut [f64]) {
    for (y, orow) in out.chunks_exact_mut(w).enumerate() {
        laplacian_response_row(data, w, h, sigma, y, orow);
    }
}

fn laplacian_response_row(
    data: &[f64],
    w: usize,
    h: usize,
    sigma: f64,
    y: usize,
    orow: &mut [f64],
) {
    let s2 = sigma * sigma;
    let up = &data[y.saturating_sub(1) * w..][..w];
    let down = &data[(y + 1).min(h - 1) * w..][..w];
    let row = &data[y * w..][..w];
    for (x, o) in orow.iter_mut().enumerate() {
        let lap =
            row[(x + 1).min(w - 1)] + row[x.saturating_sub(1)] + up[x] + down[x] - 4.0 * row[x];
        *o = s2 * lap.abs();
    }
}

/// Row generator for the gradient and Laplacian responses of one layer.
fn single_layer_response(
    metric: SaliencyMetric,
    layer: &[f64],
    w: usize,
    h: usize,
    sigma: f64,
) -> impl Fn(usize, &mut [f64]) + Sync + '_ {
    move |y, row| match metric {
        SaliencyMetric::Dog => unreachable!("DoG responses need two layers"),
        SaliencyMetric::Gradient => gradient_energy_row(layer, w, h, y, row),
        SaliencyMetric::Log => laplacian_response_row(layer, w, h, sigma, y, row),
    }
}

/// Walk the pyramid of `img` one layer at a time and hand each octave's
/// pixelwise maximum response to `sink`. Only the current and previous
/// layer of the current octave are alive at any point.
fn for_each_octave_maximum(
    img: &Image,
    params: PyramidParams,
    metric: SaliencyMetric,
    mut sink: impl FnMut(Image),
) -> Result<()> {
    if !img.is_gray() {
        return Err(FusionError::input(
            "saliency is computed on single-channel images",
        ));
    }
    params.validate_for(img.width(), img.height())?;
    let kernels = params.kernels()?;
    let filter = IntegrationFilter::default();
    let (mut w, mut h) = img.dims();
    let mut cur = convolve_plane(img.plane(0), w, h, &kernels[0]);

    for t in 0..params.octaves() {
        let n = w * h;
        let mut best = vec![0.0f64; n];
        let mut next = vec![0.0; n];
        // Integrate a response given row by row and max it into `best`.
        let mut fold = |response: &(dyn Fn(usize, &mut [f64]) + Sync)| {
            convolve_rows_into(w, h, &filter.kernel, response, &mut best, |b, v| {
                *b = b.max(v)
            });
        };
        let sigma = |j| params.layer_sigma(j);

        if metric != SaliencyMetric::Dog {
            fold(&single_layer_response(metric, &cur, w, h, sigma(0)));
        }
        for (j, kernel) in kernels[1..].iter().enumerate() {
            convolve_plane_into(&cur, w, h, kernel, &mut next);
            if metric == SaliencyMetric::Dog {
                let (a, b) = (&cur, &next);
                fold(&|y: usize, row: &mut [f64]| {
                    let span = y * w..(y + 1) * w;
                    for ((r, p), q) in row.iter_mut().zip(&a[span.clone()]).zip(&b[span]) {
                        *r = (p - q).abs();
                    }
                });
            } else {
                fold(&single_layer_response(metric, &next, w, h, sigma(j + 1)));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        sink(Image::from_plane_unchecked(w, h, best));

        if t + 1 < params.octaves() {
            // validate_for guarantees every octave is at least 2x2.
            let top = Image::from_plane_unchecked(w, h, std::mem::take(&mut cur));
            let down = downsample_half(&top)?;
            (w, h) = down.dims();
            cur = down.into_planes().swap_remove(0);
        }
    }
    Ok(())
}

/// `map = max(map, upsample(local))`, without materializing the upsampled plane.
fn max_upsampled_into(map: &mut [f64], w: usize, h: usize, local: &Image) {
    let (lw, lh) = local.dims();
    if (lw, lh) == (w, h) {
        for (m, &v) in map.iter_mut().zip(local.plane(0)) {
            *m = m.max(v);
        }
        return;
    }
    upsample_rows(local.plane(0), lw, lh, w, h, |y, row| {
        for (m, &v) in map[y * w..(y + 1) * w].iter_mut().zip(row) {
            *m = m.max(v);
        }
    });
}

pub fn build_saliency_map(
    img: &Image,
    params: PyramidParams,
    metric: SaliencyMetric,
) -> Result<SaliencyMap> {
    let (w, h) = img.dims();
    let mut map = vec![0.0f64; w * h];
    for_each_octave_maximum(img, params, metric, |local| {
        max_upsampled_into(&mut map, w, h, &local)
    })?;
    Ok(SaliencyMap {
        map: Image::from_plane_unchecked(w, h, map),
        source_index: 0,
    })
}

/// Same as [`build_saliency_map`] but keeps the octave maxima.
pub fn build_saliency_breakdown(
    img: &Image,
    params: PyramidParams,
    metric: SaliencyMetric,
) -> Result<SaliencyBreakdown> {
    let (w, h) = img.dims();
    let mut octave_maxima = Vec::with_capacity(params.octaves());
    for_each_octave_maximum(img, params, metric, |local| octave_maxima.push(local))?;
    let mut map = vec![0.0f64; w * h];
    for local in &octave_maxima {
        max_upsampled_into(&mut map, w, h, local);
    }
    Ok(SaliencyBreakdown {
        map: SaliencyMap {
            map: Image::from_plane_unchecked(w, h, map),
            source_index: 0,
        },
        octave_maxima,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale_space::{build_dog_pyramid, build_gaussian_pyramid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_plane(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    fn max_abs_diff(a: &Image, b: &Image) -> f64 {
        a.plane(0)
            .iter()
            .zip(b.plane(0))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Direct 3x3 weighted window, replicated borders.
    fn naive_integrate(img: &Image) -> Image {
        let wts = IntegrationFilter::default().weights_2d();
        let (w, h) = img.dims();
        Image::from_fn(w, h, |x, y| {
            let mut acc = 0.0;
            for (dy, row) in wts.iter().enumerate() {
                for (dx, &wt) in row.iter().enumerate() {
                    let sx = (x + dx).saturating_sub(1).min(w - 1);
                    let sy = (y + dy).saturating_sub(1).min(h - 1);
                    acc += wt * img.get(sx, sy);
                }
            }
            acc
        })
        .unwrap()
    }

    #[test]
    fn metric_names_round_trip() {
        for m in [
            SaliencyMetric::Dog,
            SaliencyMetric::Gradient,
            SaliencyMetric::Log,
        ] {
            assert_eq!(m.as_str().parse::<SaliencyMetric>().unwrap(), m);
        }
        assert!("hessian".parse::<SaliencyMetric>().is_err());
    }

    #[test]
    fn integration_kernel_is_3x3_normalized() {
        let w = IntegrationFilter::default().weights_2d();
        let sum: f64 = w.iter().flatten().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(w[1][1] > w[0][1] && w[0][1] > w[0][0]);
    }

    #[test]
    fn dog_saliency_of_zero_is_zero() {
        let out = saliency_dog(&Image::new(6, 6, 1).unwrap());
        assert!(out.plane(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dog_saliency_of_impulse_is_stamp() {
        let mut img = Image::new(5, 5, 1).unwrap();
        img.set(2, 2, 1.0);
        let out = saliency_dog(&img);
        let w = IntegrationFilter::default().weights_2d();
        for y in 0..5 {
            for x in 0..5 {
                let expect = if (1..4).contains(&x) && (1..4).contains(&y) {
                    w[y - 1][x - 1]
                } else {
                    0.0
                };
                assert!((out.get(x, y) - expect).abs() < 1e-15);
            }
        }
        assert_eq!(out.min_max().1, out.get(2, 2));
    }

    #[test]
    fn dog_saliency_matches_window_oracle() {
        let img = random_image(8, 8, 21);
        assert!(max_abs_diff(&saliency_dog(&img), &naive_integrate(&img)) < 1e-9);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let img = Image::filled(7, 7, 1, 0.3).unwrap();
        assert!(saliency_gradient(&img, 1.0)
            .plane(0)
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_ramp() {
        let w = 16;
        let img = Image::from_fn(w, 8, |x, _| x as f64 / w as f64).unwrap();
        let energy = gradient_energy(img.plane(0), w, 8);
        let expect = (1.0 / w as f64).powi(2);
        for y in 0..8 {
            for x in 1..w - 1 {
                assert!((energy[y * w + x] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gradient_respects_mirror_symmetry() {
        let base = random_image(9, 7, 3);
        let sym = Image::from_fn(9, 7, |x, y| base.get(x.min(8 - x), y)).unwrap();
        let out = saliency_gradient(&sym, 1.0);
        for y in 0..7 {
            for x in 0..9 {
                assert!((out.get(x, y) - out.get(8 - x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_of_constant_and_ramp_vanishes_inside() {
        let c = Image::filled(7, 7, 1, 0.8).unwrap();
        assert!(saliency_log(&c, 2.0).plane(0).iter().all(|&v| v == 0.0));
        let ramp = Image::from_fn(12, 12, |x, y| 0.02 * x as f64 + 0.03 * y as f64).unwrap();
        let out = saliency_log(&ramp, 1.5);
        for y in 2..10 {
            for x in 2..10 {
                assert!(out.get(x, y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_of_impulse_is_stencil() {
        let mut img = Image::new(9, 9, 1).unwrap();
        img.set(4, 4, 1.0);
        let sigma: f64 = 1.0;
        let resp = laplacian_response(img.plane(0), 9, 9, sigma);
        for y in 0..9 {
            for x in 0..9 {
                let expect = match (x as i32 - 4, y as i32 - 4) {
                    (0, 0) => 4.0,
                    (0, 1) | (0, -1) | (1, 0) | (-1, 0) => 1.0,
                    _ => 0.0,
                } * sigma
                    * sigma;
                assert_eq!(resp[y * 9 + x], expect, "({x},{y})");
            }
        }
    }

    #[test]
    fn constant_image_zero_map_for_all_kinds() {
        let img = Image::filled(32, 32, 1, 0.5).unwrap();
        for kind in [
            SaliencyMetric::Dog,
            SaliencyMetric::Gradient,
            SaliencyMetric::Log,
        ] {
            for (o, s) in [(1, 1), (3, 2), (4, 3)] {
                let m = build_saliency_map(&img, PyramidParams::new(o, s).unwrap(), kind).unwrap();
                assert!(m.map.plane(0).iter().all(|&v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn single_plane_degenerate_case() {
        let img = random_image(16, 16, 4);
        let p = PyramidParams::new(1, 1).unwrap();
        let map = build_saliency_map(&img, p, SaliencyMetric::Dog).unwrap();
        let dog = build_dog_pyramid(&build_gaussian_pyramid(&img, p).unwrap());
        assert_eq!(map.map, saliency_dog(&dog.octaves()[0][0]));
    }

    #[test]
    fn breakdown_agrees_with_map() {
        let img = random_image(40, 36, 5);
        let p = PyramidParams::new(3, 2).unwrap();
        let a = build_saliency_map(&img, p, SaliencyMetric::Log).unwrap();
        let b = build_saliency_breakdown(&img, p, SaliencyMetric::Log).unwrap();
        assert_eq!(a, b.map);
        let dims: Vec<_> = b.octave_maxima.iter().map(Image::dims).collect();
        assert_eq!(dims, vec![(40, 36), (20, 18), (10, 9)]);
    }

    #[test]
    fn streaming_walk_matches_materialized_pyramid() {
        let img = random_image(37, 29, 6);
        for metric in [
            SaliencyMetric::Dog,
            SaliencyMetric::Gradient,
            SaliencyMetric::Log,
        ] {
            for (o, s) in [(1, 1), (2, 3), (3, 2)] {
                let p = PyramidParams::new(o, s).unwrap();
                let gp = build_gaussian_pyramid(&img, p).unwrap();
                let dp = build_dog_pyramid(&gp);
                let responses: Vec<Vec<Image>> = match metric {
                    SaliencyMetric::Dog => dp
                        .octaves()
                        .iter()
                        .map(|o| o.iter().map(saliency_dog).collect())
                        .collect(),
                    SaliencyMetric::Gradient => gp
                        .octaves()
                        .iter()
                        .map(|o| {
                            o.layers
                                .iter()
                                .enumerate()
                                .map(|(j, l)| saliency_gradient(l, p.layer_sigma(j)))
                                .collect()
                        })
                        .collect(),
                    SaliencyMetric::Log => gp
                        .octaves()
                        .iter()
                        .map(|o| {
                            o.layers
                                .iter()
                                .enumerate()
                                .map(|(j, l)| saliency_log(l, p.layer_sigma(j)))
                                .collect()
                        })
                        .collect(),
                };
                let maxima: Vec<Image> = responses
                    .iter()
                    .map(|planes| {
                        let (w, h) = planes[0].dims();
                        let mut m = vec![0.0f64; w * h];
                        for plane in planes {
                            for (a, &b) in m.iter_mut().zip(plane.plane(0)) {
                                *a = a.max(b);
                            }
                        }
                        Image::from_plane(w, h, m).unwrap()
                    })
                    .collect();
                let got = build_saliency_breakdown(&img, p, metric).unwrap();
                assert_eq!(got.octave_maxima, maxima, "{metric} o={o} s={s}");
                let mut full = vec![0.0f64; img.len()];
                for local in &maxima {
                    let up = crate::resample::upsample_to(local, 37, 29).unwrap();
                    for (a, &b) in full.iter_mut().zip(up.plane(0)) {
                        *a = a.max(b);
                    }
                }
                assert_eq!(got.map.map.plane(0), &full[..], "{metric} o={o} s={s}");
            }
        }
    }

    #[test]
    fn larger_blob_needs_more_octaves() {
        let img = Image::from_fn(128, 128, |x, y| {
            let (dx, dy) = (x as f64 - 64.0, y as f64 - 64.0);
            f64::from(dx * dx + dy * dy <= 28.0 * 28.0)
        })
        .unwrap();
        let center = |o| {
            build_saliency_map(&img, PyramidParams::new(o, 3).unwrap(), SaliencyMetric::Dog)
                .unwrap()
                .map
                .get(64, 64)
        };
        let (one, four) = (center(1), center(4));
        assert!(one < 1e-12, "{one}");
        assert!(four > 1e-4, "{four}");
    }

    proptest::proptest! {
        #[test]
        fn maps_are_nonnegative(seed in 0u64..100, kind in 0usize..3) {
            let kind = [SaliencyMetric::Dog, SaliencyMetric::Gradient, SaliencyMetric::Log][kind];
            let img = random_image(20, 17, seed);
            let m = build_saliency_map(&img, PyramidParams::new(2, 2).unwrap(), kind).unwrap();
            proptest::prop_assert!(m.map.plane(0).iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn more_octaves_never_lower(seed in 0u64..100, s in 1usize..4) {
            let img = random_image(64, 48, seed);
            let mut prev: Option<Image> = None;
            for o in 1..=4 {
                let m = build_saliency_map(&img, PyramidParams::new(o, s).unwrap(), SaliencyMetric::Dog).unwrap().map;
                if let Some(p) = &prev {
                    for (a, b) in m.plane(0).iter().zip(p.plane(0)) {
                        proptest::prop_assert!(*a >= b - 1e-6);
                    }
                }
                prev = Some(m);
            }
        }

        #[test]
        fn dog_and_log_ignore_gray_shift(seed in 0u64..100, shift in 0.0f64..0.5) {
            let img = random_image(32, 32, seed).map(|v| 0.5 * v);
            let shifted = img.map(|v| v + shift);
            let p = PyramidParams::new(2, 2).unwrap();
            for kind in [SaliencyMetric::Dog, SaliencyMetric::Log] {
                let a = build_saliency_map(&img, p, kind).unwrap().map;
                let b = build_saliency_map(&shifted, p, kind).unwrap().map;
                proptest::prop_assert!(max_abs_diff(&a, &b) < 1e-9);
            }
        }
    }
}
