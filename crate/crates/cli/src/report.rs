use std::time::Duration;

use dogfuse::{FusionConfig, Preset, StageTimings};
use serde::{Deserialize, Serialize};

/// Effective fusion parameters, echoed into every CSV and JSON artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub preset: String,
    pub octaves: usize,
    pub layers: usize,
    pub sigma0: f64,
    pub metric: String,
    pub radius: usize,
    pub epsilon: f64,
}

impl ConfigSummary {
    pub fn new(preset: Preset, cfg: &FusionConfig) -> Self {
        Self {
            preset: preset.to_string(),
            octaves: cfg.pyramid.octaves(),
            layers: cfg.pyramid.layers(),
            sigma0: cfg.pyramid.sigma0(),
            metric: cfg.metric.to_string(),
            radius: cfg.guided.radius(),
            epsilon: cfg.guided.epsilon(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hardware {
    pub cpu: String,
    pub logical_cores: usize,
    pub os: String,
    pub arch: String,
}

impl Hardware {
    pub fn detect() -> Self {
        let cpu = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|info| {
                info.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split_once(':'))
                    .map(|(_, v)| v.trim().to_owned())
            })
            .unwrap_or_else(|| "unknown".to_owned());
        Self {
            cpu,
            logical_cores: std::thread::available_parallelism().map_or(1, |n| n.get()),
            os: std::env::consts::OS.to_owned(),
            arch: std::env::consts::ARCH.to_owned(),
        }
    }
}

/// Mean and minimum of a series of durations, in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean_s: f64,
    pub min_s: f64,
}

impl Stat {
    pub fn of(samples: impl IntoIterator<Item = Duration>) -> Self {
        let secs: Vec<f64> = samples.into_iter().map(|d| d.as_secs_f64()).collect();
        Self {
            mean_s: secs.iter().sum::<f64>() / secs.len().max(1) as f64,
            min_s: secs.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub saliency: Stat,
    pub masks: Stat,
    pub guided_filter: Stat,
    pub blend: Stat,
    /// Sum of the four stages.
    pub stage_sum: Stat,
}

impl StageStats {
    pub fn of(runs: &[StageTimings]) -> Self {
        Self {
            saliency: Stat::of(runs.iter().map(|t| t.saliency)),
            masks: Stat::of(runs.iter().map(|t| t.masks)),
            guided_filter: Stat::of(runs.iter().map(|t| t.guided_filter)),
            blend: Stat::of(runs.iter().map(|t| t.blend)),
            stage_sum: Stat::of(runs.iter().map(StageTimings::total)),
        }
    }
}
