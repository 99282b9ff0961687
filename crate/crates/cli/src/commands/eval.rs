use std::path::PathBuf;

use anyhow::anyhow;
use dogfuse::metrics::MetricRow;
use dogfuse::{evaluate, QualityReport};
use serde::{Deserialize, Serialize};

use crate::args::EvalArgs;
use crate::error::{CliError, CliResult};
use crate::inputs;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sources: Vec<PathBuf>,
    pub fused: PathBuf,
    pub dataset: String,
    pub image_set: String,
    pub report: QualityReport,
}

impl EvalReport {
    pub fn rows(&self) -> Vec<MetricRow> {
        self.report.rows(&self.dataset, &self.image_set)
    }
}

pub fn write_csv<W: std::io::Write>(rows: &[MetricRow], out: W) -> anyhow::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn run(args: &EvalArgs) -> CliResult<EvalReport> {
    if !args.fused.is_file() {
        return Err(CliError::usage(anyhow!(
            "fused image not found: {}",
            args.fused.display()
        )));
    }
    let paths = inputs::resolve(&args.inputs)?;
    let sources = inputs::load_sources(&paths)?;
    let fused = inputs::load_one(&args.fused)?;
    if !fused.same_dims(&sources[0]) {
        return Err(CliError::usage(anyhow!(
            "size mismatch: {} is {}x{} but {} is {}x{}",
            args.fused.display(),
            fused.width(),
            fused.height(),
            paths[0].display(),
            sources[0].width(),
            sources[0].height()
        )));
    }
    let report = evaluate(&sources, &fused)?;
    let image_set = args.image_set.clone().unwrap_or_else(|| {
        args.fused
            .file_stem()
            .map_or_else(|| "-".to_owned(), |s| s.to_string_lossy().into_owned())
    });
    let out = EvalReport {
        sources: paths,
        fused: args.fused.clone(),
        dataset: args.dataset.clone(),
        image_set,
        report,
    };

    if let Some(path) = &args.csv {
        let file = std::fs::File::create(path).map_err(|e| CliError::output(e, path.display()))?;
        write_csv(&out.rows(), file).map_err(|e| CliError::output(e, path.display()))?;
    }
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&out).map_err(CliError::internal)?;
        std::fs::write(path, text + "\n").map_err(|e| CliError::output(e, path.display()))?;
    }
    Ok(out)
}
