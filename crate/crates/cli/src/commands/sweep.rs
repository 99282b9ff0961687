use std::path::PathBuf;

use anyhow::anyhow;
use dogfuse::{evaluate, fuse, io, PyramidParams};
use serde::{Deserialize, Serialize};

use crate::args::SweepArgs;
use crate::error::{CliError, CliResult};
use crate::inputs;

/// One grid cell of a sweep: effective parameters and quality scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub octaves: usize,
    pub layers: usize,
    pub preset: String,
    pub sigma0: f64,
    pub metric: String,
    pub radius: usize,
    pub epsilon: f64,
    pub mi: f64,
    pub ssim: f64,
    pub qi: f64,
    pub qabf: f64,
    pub output: String,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub csv: PathBuf,
    pub rows: Vec<SweepRow>,
}

pub fn run(args: &SweepArgs) -> CliResult<SweepOutcome> {
    if args.fusion.octaves.is_some() || args.fusion.layers.is_some() {
        return Err(CliError::usage(anyhow!(
            "sweep takes --octave-range and --layer-range instead of --octaves/--layers"
        )));
    }
    let base = args.fusion.resolve()?;
    let paths = inputs::resolve(&args.inputs)?;
    let sources = inputs::load_sources(&paths)?;
    let (w, h) = sources[0].dims();
    let top = *args.octave_range.end();
    if top > PyramidParams::max_octaves_for(w, h) {
        return Err(CliError::usage(anyhow!(
            "octave range reaches {top} but {w}x{h} inputs allow at most {}",
            PyramidParams::max_octaves_for(w, h)
        )));
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::output(e, args.out_dir.display()))?;
    let csv_path = args
        .csv
        .clone()
        .unwrap_or_else(|| args.out_dir.join("sweep.csv"));

    let mut rows = Vec::new();
    for o in args.octave_range.clone() {
        for s in args.layer_range.clone() {
            let mut cfg = base.clone();
            cfg.pyramid = PyramidParams::with_sigma0(o, s, base.pyramid.sigma0())?;
            let fused = fuse(&sources, &cfg)?.fused;
            let name = format!("fused_o{o}_s{s}.png");
            let out = args.out_dir.join(&name);
            io::save(&fused, &out).map_err(|e| CliError::output(e, out.display()))?;
            let q = evaluate(&sources, &fused)?;
            rows.push(SweepRow {
                octaves: o,
                layers: s,
                preset: args.fusion.preset().to_string(),
                sigma0: cfg.pyramid.sigma0(),
                metric: cfg.metric.to_string(),
                radius: cfg.guided.radius(),
                epsilon: cfg.guided.epsilon(),
                mi: q.mi,
                ssim: q.ssim,
                qi: q.qi,
                qabf: q.qabf,
                output: name,
            });
        }
    }

    let write = || -> anyhow::Result<()> {
        let mut wtr = csv::Writer::from_path(&csv_path)?;
        for row in &rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    };
    write().map_err(|e| CliError::output(e, csv_path.display()))?;
    Ok(SweepOutcome {
        csv: csv_path,
        rows,
    })
}
