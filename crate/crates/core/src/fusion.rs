//! End-to-end fusion: luma -> saliency -> masks -> activity maps -> blend.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activity::{make_activity_maps, make_masks, ActivityMap, GuidedFilterParams};
use crate::error::{FusionError, Result};
use crate::io;
use crate::raster::Image;
use crate::saliency::{build_saliency_breakdown, build_saliency_map, SaliencyMap, SaliencyMetric};
use crate::scale_space::{build_dog_pyramid, build_gaussian_pyramid, PyramidParams};

/// Below this total weight a pixel falls back to uniform weights.
pub const WEIGHT_SUM_FLOOR: f64 = 1e-8;

/// Named parameter sets for the three kinds of source material.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Multi-modal medical pairs: 5 octaves, 3 layers.
    Multimodal,
    /// Natural multi-focus photographs: 1 octave, 1 layer.
    #[default]
    Natural,
    /// Multi-focus microscopy stacks: 3 octaves, 5 layers.
    Cell,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Multimodal, Preset::Natural, Preset::Cell];

    /// `(octaves, layers)`.
    pub fn octaves_layers(self) -> (usize, usize) {
        match self {
            Preset::Multimodal => (5, 3),
            Preset::Natural => (1, 1),
            Preset::Cell => (3, 5),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Multimodal => "multimodal",
            Preset::Natural => "natural",
            Preset::Cell => "cell",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "multimodal" => Ok(Preset::Multimodal),
            "natural" => Ok(Preset::Natural),
            "cell" => Ok(Preset::Cell),
            other => Err(FusionError::param(format!(
                "unknown preset {other:?} (expected multimodal, natural or cell)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub pyramid: PyramidParams,
    pub metric: SaliencyMetric,
    pub guided: GuidedFilterParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub debug_dir: Option<PathBuf>,
}

impl FusionConfig {
    pub fn from_preset(preset: Preset) -> Self {
        let (o, s) = preset.octaves_layers();
        Self {
            pyramid: PyramidParams::new(o, s).expect("preset parameters are valid"),
            metric: SaliencyMetric::Dog,
            guided: GuidedFilterParams::default(),
            debug_dir: None,
        }
    }
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self::from_preset(Preset::default())
    }
}

/// Wall-clock time per pipeline stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub saliency: Duration,
    pub masks: Duration,
    pub guided_filter: Duration,
    pub blend: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.saliency + self.masks + self.guided_filter + self.blend
    }
}

#[derive(Clone, Debug)]
pub struct FusionResult {
    pub fused: Image,
    pub activity_maps: Vec<ActivityMap>,
    pub timings: StageTimings,
}

fn check_sources(sources: &[Image], cfg: &FusionConfig) -> Result<()> {
    if sources.len() < 2 {
        return Err(FusionError::input(format!(
            "fusion needs at least 2 source images, got {}",
            sources.len()
        )));
    }
    let first = &sources[0];
    for (i, img) in sources.iter().enumerate().skip(1) {
        if !img.same_dims(first) {
            return Err(FusionError::DimensionMismatch(format!(
                "source {i} is {}x{} but source 0 is {}x{}",
                img.width(),
                img.height(),
                first.width(),
                first.height()
            )));
        }
        if img.channels() != first.channels() {
            return Err(FusionError::DimensionMismatch(format!(
                "source {i} has {} channels but source 0 has {}",
                img.channels(),
                first.channels()
            )));
        }
    }
    cfg.pyramid.validate_for(first.width(), first.height())
}

/// Fuse pre-aligned sources of identical size and channel count.
pub fn fuse(sources: &[Image], cfg: &FusionConfig) -> Result<FusionResult> {
    check_sources(sources, cfg)?;
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let guides: Vec<Image> = sources.par_iter().map(Image::to_gray).collect();
    let saliencies = guides
        .par_iter()
        .enumerate()
        .map(|(i, g)| Ok(build_saliency_map(g, cfg.pyramid, cfg.metric)?.with_source_index(i)))
        .collect::<Result<Vec<SaliencyMap>>>()?;
    timings.saliency = t.elapsed();

    let t = Instant::now();
    let masks = make_masks(&saliencies)?;
    timings.masks = t.elapsed();

    let t = Instant::now();
    let activity_maps = make_activity_maps(&guides, &masks, &cfg.guided)?;
    timings.guided_filter = t.elapsed();

    let t = Instant::now();
    let fused = blend(sources, &activity_maps);
    timings.blend = t.elapsed();

    if let Some(dir) = &cfg.debug_dir {
        dump_debug(dir, &guides, cfg, &masks, &activity_maps)?;
    }

    Ok(FusionResult {
        fused,
        activity_maps,
        timings,
    })
}

/// `F = sum_i W_i I_i / sum_i W_i`, the same weights for every channel.
fn blend(sources: &[Image], weights: &[ActivityMap]) -> Image {
    let (w, h) = sources[0].dims();
    let n = sources.len();
    let uniform = 1.0 / n as f64;

    let planes = (0..sources[0].channels())
        .map(|c| {
            let mut out = vec![0.0; w * h];
            out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
                let span = y * w..(y + 1) * w;
                let mut total = vec![0.0; w];
                for wm in weights {
                    for (t, &v) in total.iter_mut().zip(&wm.weights.plane(0)[span.clone()]) {
                        *t += v;
                    }
                }
                for (src, wm) in sources.iter().zip(weights) {
                    let ws = &wm.weights.plane(0)[span.clone()];
                    for ((o, &v), &wt) in row.iter_mut().zip(&src.plane(c)[span.clone()]).zip(ws) {
                        *o += wt * v;
                    }
                }
                for (x, o) in row.iter_mut().enumerate() {
                    *o = if total[x] < WEIGHT_SUM_FLOOR {
                        let px = y * w + x;
                        sources.iter().map(|s| s.plane(c)[px]).sum::<f64>() * uniform
                    } else {
                        *o / total[x]
                    }
                    .clamp(0.0, 1.0);
                }
            });
            out
        })
        .collect();
    Image::from_planes_unchecked(w, h, planes)
}

fn dump_debug(
    dir: &std::path::Path,
    guides: &[Image],
    cfg: &FusionConfig,
    masks: &[crate::activity::MaskMap],
    activity: &[ActivityMap],
) -> Result<()> {
    for (i, guide) in guides.iter().enumerate() {
        let src_dir = dir.join(format!("source{i}"));
        let gp = build_gaussian_pyramid(guide, cfg.pyramid)?;
        gp.dump(&src_dir.join("gaussian"))?;
        build_dog_pyramid(&gp).dump(&src_dir.join("dog"))?;
        let breakdown = build_saliency_breakdown(guide, cfg.pyramid, cfg.metric)?;
        io::save_normalized(&breakdown.map.map, src_dir.join("saliency.png"))?;
        for (t, m) in breakdown.octave_maxima.iter().enumerate() {
            io::save_normalized(m, src_dir.join(format!("saliency_oct{t}.png")))?;
        }
        io::save(&masks[i].mask, src_dir.join("mask.png"))?;
        io::save(&activity[i].weights, src_dir.join("activity.png"))?;
    }
    Ok(())
}

/// Native n-ary fusion against folding the stack pairwise,
/// `fuse(fuse(fuse(I0, I1), I2), ...)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub sources: usize,
    pub mean_abs_diff: f64,
    pub max_abs_diff: f64,
}

pub fn fuse_stack_pairwise_equivalence_check(
    sources: &[Image],
    cfg: &FusionConfig,
) -> Result<PairwiseReport> {
    let mut cfg = cfg.clone();
    cfg.debug_dir = None;
    let native = fuse(sources, &cfg)?.fused;
    let mut serial = sources[0].clone();
    for next in &sources[1..] {
        serial = fuse(&[serial, next.clone()], &cfg)?.fused;
    }
    let diffs = native
        .planes()
        .iter()
        .zip(serial.planes())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()));
    let (mut sum, mut max, mut count) = (0.0, 0.0f64, 0usize);
    for d in diffs {
        sum += d;
        max = max.max(d);
        count += 1;
    }
    Ok(PairwiseReport {
        sources: sources.len(),
        mean_abs_diff: sum / count as f64,
        max_abs_diff: max,
    })
}
