use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dogfuse::{FusionConfig, GuidedFilterParams, Preset, PyramidParams, SaliencyMetric};

use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "dogfuse",
    version,
    about = "Multi-source image fusion by scale-invariant saliency"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Does not change results.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fuse two or more aligned images into one.
    Fuse(FuseArgs),
    /// Fuse over a grid of octave and layer counts and score every cell.
    Sweep(SweepArgs),
    /// Time repeated fusion runs and report per-stage statistics as JSON.
    Bench(BenchArgs),
    /// Score a fused image against its sources.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Multimodal,
    Natural,
    Cell,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Multimodal => Preset::Multimodal,
            PresetArg::Natural => Preset::Natural,
            PresetArg::Cell => Preset::Cell,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Dog,
    Grad,
    Log,
}

impl From<MetricArg> for SaliencyMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Dog => SaliencyMetric::Dog,
            MetricArg::Grad => SaliencyMetric::Gradient,
            MetricArg::Log => SaliencyMetric::Log,
        }
    }
}

/// Parameters shared by every command that runs the fusion pipeline.
/// Explicit flags override the preset, which overrides the defaults.
#[derive(Clone, Debug, Default, Args)]
pub struct FusionArgs {
    /// Named parameter set.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,

    /// Octave count o.
    #[arg(short = 'O', long, value_name = "O")]
    pub octaves: Option<usize>,

    /// Layers per octave s.
    #[arg(short = 's', long, value_name = "S")]
    pub layers: Option<usize>,

    /// Structure saliency measure.
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,

    /// Guided filter window radius r.
    #[arg(short = 'r', long, value_name = "R")]
    pub radius: Option<usize>,

    /// Guided filter regularization on the 0..255 intensity scale (default 2).
    #[arg(long, value_name = "E", conflicts_with = "epsilon_raw")]
    pub epsilon: Option<f64>,

    /// Guided filter regularization applied as is on the 0..1 intensity scale.
    #[arg(long, value_name = "E")]
    pub epsilon_raw: Option<f64>,
}

impl FusionArgs {
    pub fn preset(&self) -> Preset {
        self.preset.map(Preset::from).unwrap_or_default()
    }

    pub fn resolve(&self) -> CliResult<FusionConfig> {
        let base = FusionConfig::from_preset(self.preset());
        let octaves = self.octaves.unwrap_or(base.pyramid.octaves());
        let layers = self.layers.unwrap_or(base.pyramid.layers());
        let radius = self.radius.unwrap_or(base.guided.radius());
        let guided = match (self.epsilon, self.epsilon_raw) {
            (_, Some(raw)) => GuidedFilterParams::new(radius, raw)?,
            (Some(e), None) => GuidedFilterParams::from_8bit_epsilon(radius, e)?,
            (None, None) => GuidedFilterParams::new(radius, base.guided.epsilon())?,
        };
        Ok(FusionConfig {
            pyramid: PyramidParams::new(octaves, layers)?,
            metric: self.metric.map(SaliencyMetric::from).unwrap_or(base.metric),
            guided,
            debug_dir: None,
        })
    }
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Source images, or a single directory holding them.
    #[arg(required = true, value_name = "INPUT")]
    pub inputs: Vec<PathBuf>,

    /// Fused image path (.png, .bmp, .tif).
    #[arg(short = 'o', long, value_name = "PATH")]
    pub output: PathBuf,

    #[command(flatten)]
    pub fusion: FusionArgs,

    /// Write pyramids, saliency maps, masks and activity maps here.
    #[arg(long, value_name = "DIR")]
    pub debug_dir: Option<PathBuf>,

    /// Also score the result and print the metrics.
    #[arg(long)]
    pub eval: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Source images, or a single directory holding them.
    #[arg(required = true, value_name = "INPUT")]
    pub inputs: Vec<PathBuf>,

    /// Directory receiving fused_o{o}_s{s}.png and sweep.csv.
    #[arg(short = 'o', long, value_name = "DIR")]
    pub out_dir: PathBuf,

    /// Octave counts to visit, e.g. 1-5 or 3.
    #[arg(long, value_name = "A-B", default_value = "1-5", value_parser = parse_range)]
    pub octave_range: RangeInclusive<usize>,

    /// Layer counts to visit, e.g. 1-8 or 2.
    #[arg(long, value_name = "A-B", default_value = "1-8", value_parser = parse_range)]
    pub layer_range: RangeInclusive<usize>,

    /// CSV path (default: <DIR>/sweep.csv).
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,

    #[command(flatten)]
    pub fusion: FusionArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Source images, or a single directory holding them.
    #[arg(
        value_name = "INPUT",
        required_unless_present = "synth",
        conflicts_with = "synth"
    )]
    pub inputs: Vec<PathBuf>,

    /// Benchmark on a generated color focus pair of this size instead.
    #[arg(long, value_name = "WxH")]
    pub synth: Option<String>,

    /// Timed repetitions after one warm-up run.
    #[arg(long, default_value_t = 5, value_name = "R")]
    pub reps: usize,

    /// JSON report path (default: stdout).
    #[arg(short = 'o', long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[command(flatten)]
    pub fusion: FusionArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Source images, or a single directory holding them.
    #[arg(required = true, value_name = "INPUT")]
    pub inputs: Vec<PathBuf>,

    /// Fused image to score.
    #[arg(short = 'f', long, value_name = "PATH")]
    pub fused: PathBuf,

    /// CSV path for one row per metric (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,

    /// JSON report path.
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,

    /// Dataset label written into every row.
    #[arg(long, default_value = "-")]
    pub dataset: String,

    /// Image-set label (default: the fused file's stem).
    #[arg(long)]
    pub image_set: Option<String>,
}

pub fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let bad = || format!("expected a count or a range like 1-5, got {s:?}");
    let (lo, hi) = match s.split_once('-') {
        Some((a, b)) => (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}
