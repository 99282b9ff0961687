use std::path::{Path, PathBuf};

use anyhow::anyhow;
use dogfuse::{io, Image};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

const IMAGE_EXTENSIONS: &[&str] = &["png", "bmp", "tif", "tiff"];

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// A single directory expands to the images inside it, sorted by name.
pub fn resolve(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let paths = match inputs {
        [dir] if dir.is_dir() => {
            let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| CliError::usage(anyhow!("cannot list {}: {e}", dir.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && is_image(p))
                .collect();
            found.sort();
            found
        }
        _ => inputs.to_vec(),
    };
    if let Some(missing) = paths.iter().find(|p| !p.is_file()) {
        return Err(CliError::usage(anyhow!(
            "input not found: {}",
            missing.display()
        )));
    }
    if paths.len() < 2 {
        return Err(CliError::usage(anyhow!(
            "need at least 2 source images, got {}",
            paths.len()
        )));
    }
    Ok(paths)
}

pub fn load_one(path: &Path) -> CliResult<Image> {
    io::load(path).map_err(|e| CliError::usage(anyhow!("cannot read {}: {e}", path.display())))
}

/// Decode every source and check they agree in size and channel count.
pub fn load_sources(paths: &[PathBuf]) -> CliResult<Vec<Image>> {
    let images = paths
        .par_iter()
        .map(|p| load_one(p))
        .collect::<CliResult<Vec<_>>>()?;
    check_same_shape(paths, &images)?;
    Ok(images)
}

pub fn check_same_shape(paths: &[PathBuf], images: &[Image]) -> CliResult<()> {
    let first = &images[0];
    for (p, img) in paths.iter().zip(images).skip(1) {
        if !img.same_dims(first) || img.channels() != first.channels() {
            return Err(CliError::usage(anyhow!(
                "size mismatch: {} is {}x{}x{} but {} is {}x{}x{}",
                paths[0].display(),
                first.width(),
                first.height(),
                first.channels(),
                p.display(),
                img.width(),
                img.height(),
                img.channels()
            )));
        }
    }
    Ok(())
}

/// Checked before any work is done so a bad name fails fast.
pub fn check_image_output(path: &Path) -> CliResult<()> {
    if is_image(path) {
        Ok(())
    } else {
        Err(CliError::usage(anyhow!(
            "{}: output must end in .png, .bmp, .tif or .tiff",
            path.display()
        )))
    }
}
