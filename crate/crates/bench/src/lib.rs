//! Deterministic inputs shared by the benchmarks.

use dogfuse::activity::MaskMap;
use dogfuse::{synth, Image};

/// Benchmark frame sizes, small to full resolution.
pub const SIZES: &[(usize, usize)] = &[(256, 256), (1020, 543), (2040, 1086)];

/// A color focus pair over a textured scene.
pub fn focus_pair(width: usize, height: usize) -> [Image; 2] {
    let base = synth::textured_scene(width, height, 3, 2040);
    let (a, b) = synth::focus_pair(&base, 3.0).expect("blur sigma is valid");
    [a, b]
}

/// A single-channel textured scene.
pub fn gray_scene(width: usize, height: usize) -> Image {
    synth::textured_scene(width, height, 1, 7)
}

/// The left-half mask of a `width x height` frame.
pub fn half_mask(width: usize, height: usize) -> MaskMap {
    let mask =
        Image::from_fn(width, height, |x, _| f64::from(2 * x < width)).expect("frame is non-empty");
    MaskMap {
        mask,
        source_index: 0,
    }
}

pub fn label(width: usize, height: usize) -> String {
    format!("{width}x{height}")
}
