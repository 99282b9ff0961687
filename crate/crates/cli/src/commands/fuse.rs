use std::path::PathBuf;

use dogfuse::{evaluate, fuse, io, QualityReport, StageTimings};

use crate::args::FuseArgs;
use crate::error::{CliError, CliResult};
use crate::inputs;
use crate::report::ConfigSummary;

#[derive(Debug)]
pub struct FuseOutcome {
    pub sources: Vec<PathBuf>,
    pub output: PathBuf,
    pub dims: (usize, usize, usize),
    pub config: ConfigSummary,
    pub timings: StageTimings,
    pub quality: Option<QualityReport>,
}

pub fn run(args: &FuseArgs) -> CliResult<FuseOutcome> {
    inputs::check_image_output(&args.output)?;
    let mut cfg = args.fusion.resolve()?;
    cfg.debug_dir = args.debug_dir.clone();
    let paths = inputs::resolve(&args.inputs)?;
    let sources = inputs::load_sources(&paths)?;
    cfg.pyramid
        .validate_for(sources[0].width(), sources[0].height())?;

    let result = fuse(&sources, &cfg).map_err(|e| match e {
        dogfuse::FusionError::Io(_) | dogfuse::FusionError::Encode { .. } => {
            CliError::output(e, "debug images")
        }
        e => e.into(),
    })?;
    io::save(&result.fused, &args.output)
        .map_err(|e| CliError::output(e, args.output.display()))?;

    let quality = if args.eval {
        Some(evaluate(&sources, &result.fused)?)
    } else {
        None
    };
    let f = &result.fused;
    Ok(FuseOutcome {
        sources: paths,
        output: args.output.clone(),
        dims: (f.width(), f.height(), f.channels()),
        config: ConfigSummary::new(args.fusion.preset(), &cfg),
        timings: result.timings,
        quality,
    })
}

impl std::fmt::Display for FuseOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (w, h, c) = self.dims;
        let cfg = &self.config;
        writeln!(
            f,
            "fused {} images ({w}x{h}, {c} channel{}) -> {}",
            self.sources.len(),
            if c == 1 { "" } else { "s" },
            self.output.display()
        )?;
        writeln!(
            f,
            "config: preset={} o={} s={} metric={} r={} eps={:.6e}",
            cfg.preset, cfg.octaves, cfg.layers, cfg.metric, cfg.radius, cfg.epsilon
        )?;
        let t = &self.timings;
        for (name, d) in [
            ("saliency", t.saliency),
            ("masks", t.masks),
            ("guided filter", t.guided_filter),
            ("blend", t.blend),
            ("total", t.total()),
        ] {
            writeln!(f, "  {name:<14}{:>10.4} s", d.as_secs_f64())?;
        }
        if let Some(q) = &self.quality {
            writeln!(
                f,
                "MI {:.4}  SSIM {:.4}  QI {:.4}  Q_AB/F {:.4}",
                q.mi, q.ssim, q.qi, q.qabf
            )?;
        }
        Ok(())
    }
}
