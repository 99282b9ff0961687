//! Spatial-domain image fusion driven by scale-invariant structure saliency.
//!
//! Each source's luma is decomposed into a difference-of-Gaussian scale
//! space; the per-pixel maximum response across all scales gives a saliency
//! map. Sources compete pixel by pixel on saliency, and the resulting
//! one-hot masks are smoothed by a guided filter into activity maps that
//! weight a per-pixel average of the sources.
//!
//! ```no_run
//! use dogfuse::{fuse, io, FusionConfig, Preset};
//!
//! let a = io::load("near.png")?;
//! let b = io::load("far.png")?;
//! let out = fuse(&[a, b], &FusionConfig::from_preset(Preset::Natural))?;
//! io::save(&out.fused, "fused.png")?;
//! # Ok::<(), dogfuse::FusionError>(())
//! ```

pub mod activity;
pub mod error;
pub mod filter;
pub mod fusion;
pub mod io;
pub mod metrics;
pub mod raster;
pub mod resample;
pub mod saliency;
pub mod scale_space;
pub mod synth;

pub use activity::{
    guided_filter, make_activity_maps, make_masks, ActivityMap, GuidedFilterParams, MaskMap,
};
pub use error::{FusionError, Result};
pub use filter::{box_mean, convolve_separable, make_gaussian_kernel, Kernel1D};
pub use fusion::{
    fuse, fuse_stack_pairwise_equivalence_check, FusionConfig, FusionResult, PairwiseReport,
    Preset, StageTimings,
};
pub use metrics::{evaluate, QualityReport};
pub use raster::{to_gray, Image};
pub use resample::{downsample_half, upsample_to};
pub use saliency::{
    build_saliency_map, saliency_dog, saliency_gradient, saliency_log, IntegrationFilter,
    SaliencyMap, SaliencyMetric,
};
pub use scale_space::{
    build_dog_pyramid, build_gaussian_pyramid, DoGPyramid, GaussianPyramid, PyramidParams,
};
