//! Objective fusion-quality metrics: mutual information, SSIM, the
//! universal quality index and edge-preservation `Q_AB/F`.
//!
//! All metrics work on single-channel planes; color inputs are reduced to
//! luma by [`evaluate`]. Constants follow the usual published values:
//!
//! | metric  | constant                                                   |
//! |---------|------------------------------------------------------------|
//! | MI      | 256 bins on `round(255 v)`, log base 2                     |
//! | SSIM    | 11x11 Gaussian window, sigma 1.5, C1 = 0.01^2, C2 = 0.03^2 |
//! | QI      | 8x8 sliding window, step 1                                 |
//! | Q_AB/F  | Gamma_g 0.9994, k_g -15, s_g 0.5, Gamma_a 0.9879, k_a -22, s_a 0.8 |

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{FusionError, Result};
use crate::filter::Kernel1D;
use crate::raster::Image;

pub const MI_BINS: usize = 256;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;
pub const QI_WINDOW: usize = 8;

/// Sigmoid constants of the edge-preservation metric.
pub mod qabf_constants {
    pub const GAMMA_G: f64 = 0.9994;
    pub const KAPPA_G: f64 = -15.0;
    pub const SIGMA_G: f64 = 0.5;
    pub const GAMMA_A: f64 = 0.9879;
    pub const KAPPA_A: f64 = -22.0;
    pub const SIGMA_A: f64 = 0.8;
}

/// Windows whose variance or luminance term falls below this are treated
/// as flat and skipped by [`quality_index`].
const QI_FLAT: f64 = 1e-12;

fn check_pair(a: &Image, b: &Image) -> Result<()> {
    if !a.is_gray() || !b.is_gray() {
        return Err(FusionError::input(
            "quality metrics expect single-channel planes",
        ));
    }
    if !a.same_dims(b) {
        return Err(FusionError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

#[inline]
pub fn quantize(v: f64) -> usize {
    (v.clamp(0.0, 1.0) * 255.0).round() as usize
}

fn histogram(a: &Image) -> Vec<f64> {
    let mut h = vec![0.0; MI_BINS];
    for &v in a.plane(0) {
        h[quantize(v)] += 1.0;
    }
    h
}

fn entropy_of(counts: &[f64], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Shannon entropy (bits) of the 8-bit quantized intensities.
pub fn entropy(a: &Image) -> f64 {
    entropy_of(&histogram(a), a.len() as f64)
}

/// `MI(a; f) = sum p(a,f) log2(p(a,f) / (p(a) p(f)))` over 256 bins.
pub fn mutual_information(a: &Image, f: &Image) -> Result<f64> {
    check_pair(a, f)?;
    let mut joint = vec![0.0; MI_BINS * MI_BINS];
    for (&x, &y) in a.plane(0).iter().zip(f.plane(0)) {
        joint[quantize(x) * MI_BINS + quantize(y)] += 1.0;
    }
    let n = a.len() as f64;
    let pa = histogram(a);
    let pf = histogram(f);
    let mut mi = 0.0;
    for i in 0..MI_BINS {
        if pa[i] == 0.0 {
            continue;
        }
        for j in 0..MI_BINS {
            let c = joint[i * MI_BINS + j];
            if c > 0.0 {
                // p(a,f) / (p(a) p(f)) = c n / (n_a n_f)
                mi += (c / n) * (c * n / (pa[i] * pf[j])).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// 1-D valid-mode filter of every row.
fn valid_rows(data: &[f64], w: usize, h: usize, k: &[f64]) -> (Vec<f64>, usize) {
    let ow = w + 1 - k.len();
    let mut out = Vec::with_capacity(ow * h);
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        out.extend((0..ow).map(|x| {
            row[x..x + k.len()]
                .iter()
                .zip(k)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        }));
    }
    (out, ow)
}

/// Separable valid-mode 2-D filter.
fn valid_filter(data: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let (rows, ow) = valid_rows(data, w, h, k);
    let oh = h + 1 - k.len();
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        let dst = &mut out[y * ow..(y + 1) * ow];
        for (i, &wt) in k.iter().enumerate() {
            let src = &rows[(y + i) * ow..(y + i + 1) * ow];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += wt * s;
            }
        }
    }
    out
}

/// Local moments `(mean_a, mean_b, E[a^2], E[b^2], E[ab])` per valid window.
fn window_moments(a: &[f64], b: &[f64], w: usize, h: usize, k: &[f64]) -> [Vec<f64>; 5] {
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    [
        valid_filter(a, w, h, k),
        valid_filter(b, w, h, k),
        valid_filter(&aa, w, h, k),
        valid_filter(&bb, w, h, k),
        valid_filter(&ab, w, h, k),
    ]
}

/// Mean SSIM over all fully contained 11x11 windows.
pub fn ssim(a: &Image, f: &Image) -> Result<f64> {
    check_pair(a, f)?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(FusionError::input(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let k = Kernel1D::gaussian_with_radius(SSIM_SIGMA, SSIM_WINDOW / 2);
    let [ma, mf, saa, sff, saf] = window_moments(a.plane(0), f.plane(0), w, h, k.weights());
    let n = ma.len();
    let mut total = 0.0;
    for i in 0..n {
        let (mu_a, mu_f) = (ma[i], mf[i]);
        let var_a = saa[i] - mu_a * mu_a;
        let var_f = sff[i] - mu_f * mu_f;
        let cov = saf[i] - mu_a * mu_f;
        let num = (2.0 * mu_a * mu_f + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (mu_a * mu_a + mu_f * mu_f + SSIM_C1) * (var_a + var_f + SSIM_C2);
        total += num / den;
    }
    Ok(total / n as f64)
}

/// Universal quality index averaged over 8x8 windows (step 1). Flat
/// windows are skipped; if every window is flat the result is 1 for
/// identical inputs and 0 otherwise.
pub fn quality_index(a: &Image, f: &Image) -> Result<f64> {
    check_pair(a, f)?;
    let (w, h) = a.dims();
    if w < QI_WINDOW || h < QI_WINDOW {
        return Ok(flat_fallback(a, f));
    }
    let k = [1.0 / QI_WINDOW as f64; QI_WINDOW];
    let [ma, mf, saa, sff, saf] = window_moments(a.plane(0), f.plane(0), w, h, &k);
    let (mut total, mut count) = (0.0, 0usize);
    for i in 0..ma.len() {
        let (mu_a, mu_f) = (ma[i], mf[i]);
        let var_sum = (saa[i] - mu_a * mu_a) + (sff[i] - mu_f * mu_f);
        let mean_sq = mu_a * mu_a + mu_f * mu_f;
        if var_sum <= QI_FLAT || mean_sq <= QI_FLAT {
            continue;
        }
        let cov = saf[i] - mu_a * mu_f;
        total += 4.0 * cov * mu_a * mu_f / (var_sum * mean_sq);
        count += 1;
    }
    if count == 0 {
        return Ok(flat_fallback(a, f));
    }
    Ok(total / count as f64)
}

fn flat_fallback(a: &Image, f: &Image) -> f64 {
    if a == f {
        1.0
    } else {
        0.0
    }
}

/// Sobel strength and orientation, replicated borders.
pub(crate) fn sobel_strength_orientation(img: &Image) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = img.dims();
    let p = img.plane(0);
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        p[y * w + x]
    };
    let mut g = Vec::with_capacity(w * h);
    let mut alpha = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let sx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let sy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            g.push((sx * sx + sy * sy).sqrt());
            alpha.push(if sx == 0.0 {
                FRAC_PI_2
            } else {
                (sy / sx).atan()
            });
        }
    }
    (g, alpha)
}

/// Per-pixel edge preservation of source `(g_s, a_s)` in fused `(g_f, a_f)`.
#[inline]
fn edge_preservation(g_s: f64, a_s: f64, g_f: f64, a_f: f64) -> f64 {
    use qabf_constants::*;
    let rel_g = if g_s == 0.0 || g_f == 0.0 {
        0.0
    } else if g_s > g_f {
        g_f / g_s
    } else {
        g_s / g_f
    };
    let rel_a = 1.0 - (a_s - a_f).abs() / FRAC_PI_2;
    let q_g = GAMMA_G / (1.0 + (KAPPA_G * (rel_g - SIGMA_G)).exp());
    let q_a = GAMMA_A / (1.0 + (KAPPA_A * (rel_a - SIGMA_A)).exp());
    q_g * q_a
}

/// Highest per-pixel edge preservation, reached when strength and
/// orientation are transferred unchanged.
pub fn qabf_ceiling() -> f64 {
    edge_preservation(1.0, 0.0, 1.0, 0.0)
}

/// Gradient-weighted edge preservation of sources `a` and `b` in `f`.
/// Returns 0 when neither source has any gradient.
pub fn qabf(a: &Image, b: &Image, f: &Image) -> Result<f64> {
    check_pair(a, f)?;
    check_pair(b, f)?;
    let (ga, aa) = sobel_strength_orientation(a);
    let (gb, ab) = sobel_strength_orientation(b);
    let (gf, af) = sobel_strength_orientation(f);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..ga.len() {
        num += edge_preservation(ga[i], aa[i], gf[i], af[i]) * ga[i]
            + edge_preservation(gb[i], ab[i], gf[i], af[i]) * gb[i];
        den += ga[i] + gb[i];
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Per-source components of a [`QualityReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceScores {
    pub source: usize,
    pub mi: f64,
    pub ssim: f64,
    pub qi: f64,
}

/// Fusion quality of `fused` against its sources.
///
/// With two sources: `mi = MI(A;F) + MI(B;F)`, `ssim` and `qi` are the
/// means of the per-source values and `qabf = Q_AB/F`. With more sources
/// each figure is averaged over all unordered source pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub mi: f64,
    pub ssim: f64,
    pub qi: f64,
    pub qabf: f64,
    pub per_source: Vec<SourceScores>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub dataset: String,
    pub image_set: String,
    pub metric: String,
    pub value: f64,
}

impl QualityReport {
    /// One row per metric and per-source component.
    pub fn rows(&self, dataset: &str, image_set: &str) -> Vec<MetricRow> {
        let row = |metric: String, value: f64| MetricRow {
            dataset: dataset.to_owned(),
            image_set: image_set.to_owned(),
            metric,
            value,
        };
        let mut rows = vec![
            row("mi".into(), self.mi),
            row("ssim".into(), self.ssim),
            row("qi".into(), self.qi),
            row("qabf".into(), self.qabf),
        ];
        for s in &self.per_source {
            rows.push(row(format!("mi_s{}", s.source), s.mi));
            rows.push(row(format!("ssim_s{}", s.source), s.ssim));
            rows.push(row(format!("qi_s{}", s.source), s.qi));
        }
        rows
    }
}

pub fn evaluate(sources: &[Image], fused: &Image) -> Result<QualityReport> {
    use rayon::prelude::*;

    if sources.len() < 2 {
        return Err(FusionError::input("evaluation needs at least 2 sources"));
    }
    let f = fused.to_gray();
    let grays: Vec<Image> = sources.iter().map(Image::to_gray).collect();
    let per_source = grays
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(SourceScores {
                source: i,
                mi: mutual_information(s, &f)?,
                ssim: ssim(s, &f)?,
                qi: quality_index(s, &f)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = grays.len() as f64;
    let mean = |pick: fn(&SourceScores) -> f64| per_source.iter().map(pick).sum::<f64>() / n;
    let mut qabf_sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..grays.len() {
        for j in i + 1..grays.len() {
            qabf_sum += qabf(&grays[i], &grays[j], &f)?;
            pairs += 1;
        }
    }
    Ok(QualityReport {
        mi: 2.0 * mean(|s| s.mi),
        ssim: mean(|s| s.ssim),
        qi: mean(|s| s.qi),
        qabf: qabf_sum / pairs as f64,
        per_source,
    })
}
