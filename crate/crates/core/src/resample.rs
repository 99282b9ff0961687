//! Octave resampling: decimation by two and bilinear upsampling back to
//! the source grid.

use crate::error::{FusionError, Result};
use crate::raster::Image;

/// Keep every second pixel in each row and column, starting at `(0, 0)`.
///
/// Output is `ceil(w/2) x ceil(h/2)`. No pre-filtering: pyramid callers
/// pass an image that is already blurred.
pub fn downsample_half(img: &Image) -> Result<Image> {
    let (w, h) = img.dims();
    if w < 2 || h < 2 {
        return Err(FusionError::TooSmall {
            width: w,
            height: h,
            min_width: 2,
            min_height: 2,
        });
    }
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    let planes = img
        .planes()
        .iter()
        .map(|p| {
            let mut out = Vec::with_capacity(ow * oh);
            for y in 0..oh {
                let row = &p[2 * y * w..(2 * y + 1) * w];
                out.extend(row.iter().step_by(2));
            }
            out
        })
        .collect();
    Ok(Image::from_planes_unchecked(ow, oh, planes))
}

/// Bilinear upsampling with edge clamping to exactly `target_w x target_h`.
///
/// When the target reduces to the source by repeated `ceil(n/2)` halving
/// (the pyramid case), source pixel `i` is placed on target pixel `i * 2^t`,
/// so upsampling inverts [`downsample_half`] on the retained grid points.
/// Other size pairs use the plain ratio `src / target`.
pub fn upsample_to(img: &Image, target_w: usize, target_h: usize) -> Result<Image> {
    let (w, h) = img.dims();
    if target_w < w || target_h < h {
        return Err(FusionError::param(format!(
            "upsample target {target_w}x{target_h} is smaller than source {w}x{h}"
        )));
    }
    if (target_w, target_h) == (w, h) {
        return Ok(img.clone());
    }

    let planes = img
        .planes()
        .iter()
        .map(|p| {
            let mut out = Vec::with_capacity(target_w * target_h);
            upsample_rows(p, w, h, target_w, target_h, |_, row| {
                out.extend_from_slice(row)
            });
            out
        })
        .collect();
    Ok(Image::from_planes_unchecked(target_w, target_h, planes))
}

/// Row-by-row form of [`upsample_to`] for one plane: `emit(y, row)` receives
/// each target row in order. The caller guarantees target >= source.
pub(crate) fn upsample_rows(
    p: &[f64],
    w: usize,
    h: usize,
    target_w: usize,
    target_h: usize,
    mut emit: impl FnMut(usize, &[f64]),
) {
    let xs = axis_taps(w, target_w);
    let ys = axis_taps(h, target_h);
    let mut top = vec![0.0; target_w];
    let mut bottom = vec![0.0; target_w];
    let mut row = vec![0.0; target_w];
    for (y, &(y0, y1, fy)) in ys.iter().enumerate() {
        lerp_row(&p[y0 * w..(y0 + 1) * w], &xs, &mut top);
        lerp_row(&p[y1 * w..(y1 + 1) * w], &xs, &mut bottom);
        for ((o, &t), &b) in row.iter_mut().zip(&top).zip(&bottom) {
            *o = (1.0 - fy) * t + fy * b;
        }
        emit(y, &row);
    }
}

#[inline]
fn lerp_row(row: &[f64], taps: &[(usize, usize, f64)], out: &mut [f64]) {
    for (o, &(x0, x1, fx)) in out.iter_mut().zip(taps) {
        *o = (1.0 - fx) * row[x0] + fx * row[x1];
    }
}

/// Number of `ceil(n/2)` halvings taking `target` to `src`, if any.
fn dyadic_levels(src: usize, target: usize) -> Option<u32> {
    let (mut n, mut t) = (target, 0);
    while n > src {
        n = n.div_ceil(2);
        t += 1;
    }
    (n == src).then_some(t)
}

fn axis_taps(src: usize, target: usize) -> Vec<(usize, usize, f64)> {
    let step = match dyadic_levels(src, target) {
        Some(t) => 1.0 / f64::from(1u32 << t),
        None => src as f64 / target as f64,
    };
    (0..target)
        .map(|d| {
            let s = (d as f64 * step).min((src - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_plane(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn checkerboard_keeps_even_samples() {
        let img = Image::from_fn(4, 4, |x, y| ((x + y) % 2) as f64).unwrap();
        let out = downsample_half(&img).unwrap();
        assert_eq!(out.dims(), (2, 2));
        assert!(out.plane(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn odd_sizes_round_up() {
        let out = downsample_half(&Image::new(5, 5, 1).unwrap()).unwrap();
        assert_eq!(out.dims(), (3, 3));
        let out = downsample_half(&Image::new(7, 2, 3).unwrap()).unwrap();
        assert_eq!((out.dims(), out.channels()), ((4, 1), 3));
    }

    #[test]
    fn downsample_too_small() {
        assert!(matches!(
            downsample_half(&Image::new(1, 8, 1).unwrap()),
            Err(FusionError::TooSmall { .. })
        ));
    }

    #[test]
    fn downsample_index_oracle() {
        let img = random_image(11, 8, 3);
        let out = downsample_half(&img).unwrap();
        for y in 0..out.height() {
            for x in 0..out.width() {
                assert_eq!(out.get(x, y), img.get(2 * x, 2 * y));
            }
        }
    }

    #[test]
    fn constant_upsample() {
        let img = Image::filled(3, 2, 1, 0.4).unwrap();
        let out = upsample_to(&img, 7, 5).unwrap();
        assert_eq!(out.dims(), (7, 5));
        assert!(out.plane(0).iter().all(|&v| (v - 0.4).abs() < 1e-15));
    }

    #[test]
    fn two_by_two_to_three_center_is_mean() {
        let img = Image::from_plane(2, 2, vec![0.1, 0.3, 0.5, 0.9]).unwrap();
        let out = upsample_to(&img, 3, 3).unwrap();
        assert!((out.get(1, 1) - 0.45).abs() < 1e-15);
        assert_eq!(out.get(0, 0), 0.1);
        assert_eq!(out.get(2, 2), 0.9);
    }

    #[test]
    fn rejects_shrinking_target() {
        let img = Image::new(4, 4, 1).unwrap();
        assert!(matches!(
            upsample_to(&img, 3, 4),
            Err(FusionError::InvalidParameter(_))
        ));
    }

    #[test]
    fn double_size_hits_source_on_even_grid() {
        let img = random_image(6, 5, 8);
        let up = upsample_to(&img, 12, 10).unwrap();
        for y in 0..5 {
            for x in 0..6 {
                assert!((up.get(2 * x, 2 * y) - img.get(x, y)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn non_dyadic_target_still_works() {
        let img = random_image(4, 4, 2);
        let up = upsample_to(&img, 10, 9).unwrap();
        assert_eq!(up.dims(), (10, 9));
        let (lo, hi) = img.min_max();
        let (ulo, uhi) = up.min_max();
        assert!(ulo >= lo - 1e-12 && uhi <= hi + 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn downsample_inverts_upsample(w in 1usize..20, h in 1usize..20, levels in 1u32..4, seed in 0u64..500) {
            let img = random_image(w, h, seed);
            let (tw, th) = (w << levels, h << levels);
            let mut back = upsample_to(&img, tw, th).unwrap();
            for _ in 0..levels {
                back = downsample_half(&back).unwrap();
            }
            proptest::prop_assert_eq!(back, img);
        }

        #[test]
        fn pyramid_sizes_round_trip(w in 2usize..40, h in 2usize..40, seed in 0u64..500) {
            let img = random_image(w, h, seed);
            let down = downsample_half(&img).unwrap();
            let up = upsample_to(&down, w, h).unwrap();
            for y in (0..h).step_by(2) {
                for x in (0..w).step_by(2) {
                    proptest::prop_assert_eq!(up.get(x, y), img.get(x, y));
                }
            }
        }
    }
}
