use std::path::PathBuf;
use std::time::Instant;

use anyhow::anyhow;
use dogfuse::{fuse, synth, Image, StageTimings};
use serde::{Deserialize, Serialize};

use crate::args::BenchArgs;
use crate::error::{CliError, CliResult};
use crate::inputs;
use crate::report::{ConfigSummary, Hardware, StageStats, Stat};

/// Seed of the generated benchmark scene.
pub const SYNTH_SEED: u64 = 2040;
/// Blur applied to the out-of-focus half of each generated source.
pub const SYNTH_BLUR: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub sources: usize,
    /// Source files, or empty for a generated pair.
    pub paths: Vec<PathBuf>,
    pub synthetic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTimes {
    pub saliency_s: f64,
    pub masks_s: f64,
    pub guided_filter_s: f64,
    pub blend_s: f64,
    pub total_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: ConfigSummary,
    pub input: InputSummary,
    pub reps: usize,
    pub threads: usize,
    pub hardware: Hardware,
    pub warmup_s: f64,
    pub stages: StageStats,
    /// Wall time of the whole fusion call.
    pub total: Stat,
    pub runs: Vec<RunTimes>,
}

/// Color focus pair: left half sharp in the first image, right half in the second.
pub fn synthetic_pair(width: usize, height: usize) -> CliResult<Vec<Image>> {
    let base = synth::textured_scene(width, height, 3, SYNTH_SEED);
    let (a, b) = synth::focus_pair(&base, SYNTH_BLUR)?;
    Ok(vec![a, b])
}

pub fn run(args: &BenchArgs) -> CliResult<BenchReport> {
    if args.reps == 0 {
        return Err(CliError::usage(anyhow!("--reps must be at least 1")));
    }
    let cfg = args.fusion.resolve()?;
    let (sources, paths) = match &args.synth {
        Some(size) => {
            let (w, h) = synth::parse_size(size)?;
            (synthetic_pair(w, h)?, Vec::new())
        }
        None => {
            let paths = inputs::resolve(&args.inputs)?;
            (inputs::load_sources(&paths)?, paths)
        }
    };
    cfg.pyramid
        .validate_for(sources[0].width(), sources[0].height())?;

    let t = Instant::now();
    fuse(&sources, &cfg)?;
    let warmup_s = t.elapsed().as_secs_f64();

    let mut stage_runs: Vec<StageTimings> = Vec::with_capacity(args.reps);
    let mut walls = Vec::with_capacity(args.reps);
    for _ in 0..args.reps {
        let t = Instant::now();
        let result = fuse(&sources, &cfg)?;
        walls.push(t.elapsed());
        stage_runs.push(result.timings);
    }

    let runs = stage_runs
        .iter()
        .zip(&walls)
        .map(|(s, w)| RunTimes {
            saliency_s: s.saliency.as_secs_f64(),
            masks_s: s.masks.as_secs_f64(),
            guided_filter_s: s.guided_filter.as_secs_f64(),
            blend_s: s.blend.as_secs_f64(),
            total_s: w.as_secs_f64(),
        })
        .collect();
    let first = &sources[0];
    Ok(BenchReport {
        config: ConfigSummary::new(args.fusion.preset(), &cfg),
        input: InputSummary {
            width: first.width(),
            height: first.height(),
            channels: first.channels(),
            sources: sources.len(),
            synthetic: args.synth.is_some(),
            paths,
        },
        reps: args.reps,
        threads: rayon::current_num_threads(),
        hardware: Hardware::detect(),
        warmup_s,
        stages: StageStats::of(&stage_runs),
        total: Stat::of(walls),
        runs,
    })
}
