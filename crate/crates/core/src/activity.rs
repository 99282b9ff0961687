//! Activity maps: winner-take-all masks over the sources' saliency maps,
//! refined by a guided filter steered by each source's luma.

use serde::{Deserialize, Serialize};

use crate::error::{FusionError, Result};
use crate::filter::box_means_into;
use crate::raster::Image;
use crate::saliency::SaliencyMap;

/// One-hot selection mask of one source.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskMap {
    pub mask: Image,
    pub source_index: usize,
}

/// Refined per-source weights in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivityMap {
    pub weights: Image,
    pub source_index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuidedFilterParams {
    radius: usize,
    epsilon: f64,
}

impl GuidedFilterParams {
    pub const DEFAULT_RADIUS: usize = 2;
    /// Regularization expressed on the 8-bit intensity scale.
    pub const DEFAULT_EPSILON_8BIT: f64 = 2.0;

    /// `epsilon` is on the `[0, 1]` intensity scale.
    pub fn new(radius: usize, epsilon: f64) -> Result<Self> {
        if radius == 0 {
            return Err(FusionError::param(
                "guided filter radius must be at least 1",
            ));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(FusionError::param(format!(
                "guided filter epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self { radius, epsilon })
    }

    /// `epsilon` given on the 0..255 scale, rescaled by `255^2`.
    pub fn from_8bit_epsilon(radius: usize, epsilon: f64) -> Result<Self> {
        Self::new(radius, epsilon / (255.0 * 255.0))
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn window_len(&self) -> usize {
        (2 * self.radius + 1).pow(2)
    }
}

impl Default for GuidedFilterParams {
    fn default() -> Self {
        Self::from_8bit_epsilon(Self::DEFAULT_RADIUS, Self::DEFAULT_EPSILON_8BIT)
            .expect("defaults are valid")
    }
}

/// Per-pixel argmax over the saliency maps; ties go to the lowest index.
pub fn make_masks(saliencies: &[SaliencyMap]) -> Result<Vec<MaskMap>> {
    if saliencies.len() < 2 {
        return Err(FusionError::input(format!(
            "need at least 2 saliency maps, got {}",
            saliencies.len()
        )));
    }
    let (w, h) = saliencies[0].map.dims();
    if let Some(bad) = saliencies.iter().find(|s| s.map.dims() != (w, h)) {
        return Err(FusionError::DimensionMismatch(format!(
            "saliency map {} is {}x{}, expected {w}x{h}",
            bad.source_index,
            bad.map.width(),
            bad.map.height()
        )));
    }

    let winners = winner_indices(saliencies.iter().map(|s| s.map.plane(0)), w * h);
    Ok(saliencies
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let data = winners.iter().map(|&win| f64::from(win == i)).collect();
            MaskMap {
                mask: Image::from_plane_unchecked(w, h, data),
                source_index: s.source_index,
            }
        })
        .collect())
}

pub(crate) fn winner_indices<'a>(
    planes: impl Iterator<Item = &'a [f64]>,
    len: usize,
) -> Vec<usize> {
    let mut best = vec![f64::NEG_INFINITY; len];
    let mut winner = vec![0usize; len];
    for (i, plane) in planes.enumerate() {
        for ((b, w), &v) in best.iter_mut().zip(winner.iter_mut()).zip(plane) {
            if v > *b {
                *b = v;
                *w = i;
            }
        }
    }
    winner
}

/// Guided filter of `input` steered by `guide`.
///
/// Window statistics use clipped box means; each pixel's output is the
/// average of the linear predictions of every window covering it.
pub fn guided_filter(
    guide: &Image,
    input: &MaskMap,
    p: &GuidedFilterParams,
) -> Result<ActivityMap> {
    if !guide.is_gray() || !input.mask.is_gray() {
        return Err(FusionError::input(
            "guided filter expects single-channel planes",
        ));
    }
    if !guide.same_dims(&input.mask) {
        return Err(FusionError::DimensionMismatch(format!(
            "guide is {}x{} but mask is {}x{}",
            guide.width(),
            guide.height(),
            input.mask.width(),
            input.mask.height()
        )));
    }
    let (w, h) = guide.dims();
    let weights = guided_filter_plane(guide.plane(0), input.mask.plane(0), w, h, p);
    Ok(ActivityMap {
        weights: Image::from_plane_unchecked(w, h, weights),
        source_index: input.source_index,
    })
}

pub(crate) fn guided_filter_plane(
    guide: &[f64],
    input: &[f64],
    w: usize,
    h: usize,
    p: &GuidedFilterParams,
) -> Vec<f64> {
    let (r, eps) = (p.radius, p.epsilon);
    let n = w * h;
    let span = |y: usize| y * w..(y + 1) * w;

    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    box_means_into(
        w,
        h,
        r,
        |y, [g, m, gg, gm]: &mut [Vec<f64>; 4]| {
            let (guide, input) = (&guide[span(y)], &input[span(y)]);
            g.copy_from_slice(guide);
            m.copy_from_slice(input);
            for (o, &v) in gg.iter_mut().zip(guide) {
                *o = v * v;
            }
            for ((o, &v), &u) in gm.iter_mut().zip(guide).zip(input) {
                *o = v * u;
            }
        },
        |_, [mean_i, mean_p, corr_ii, corr_ip]: &[Vec<f64>; 4], [a, b]: [&mut [f64]; 2]| {
            for x in 0..a.len() {
                let var = (corr_ii[x] - mean_i[x] * mean_i[x]).max(0.0);
                let cov = corr_ip[x] - mean_i[x] * mean_p[x];
                let ax = cov / (var + eps);
                a[x] = ax;
                b[x] = mean_p[x] - ax * mean_i[x];
            }
        },
        [&mut a, &mut b],
    );

    let mut out = vec![0.0; n];
    box_means_into(
        w,
        h,
        r,
        |y, [ra, rb]: &mut [Vec<f64>; 2]| {
            ra.copy_from_slice(&a[span(y)]);
            rb.copy_from_slice(&b[span(y)]);
        },
        |y, [mean_a, mean_b]: &[Vec<f64>; 2], [q]: [&mut [f64]; 1]| {
            for (((o, &ma), &mb), &g) in q.iter_mut().zip(mean_a).zip(mean_b).zip(&guide[span(y)]) {
                *o = (ma * g + mb).clamp(0.0, 1.0);
            }
        },
        [&mut out],
    );
    out
}

/// Guided-filter each mask with the matching guide.
pub fn make_activity_maps(
    guides: &[Image],
    masks: &[MaskMap],
    p: &GuidedFilterParams,
) -> Result<Vec<ActivityMap>> {
    use rayon::prelude::*;

    if guides.len() != masks.len() {
        return Err(FusionError::input(format!(
            "{} guides for {} masks",
            guides.len(),
            masks.len()
        )));
    }
    guides
        .par_iter()
        .zip(masks)
        .map(|(g, m)| guided_filter(g, m, p))
        .collect()
}
