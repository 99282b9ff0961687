//! Deterministic synthetic inputs for tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FusionError, Result};
use crate::filter::{convolve_separable, Kernel1D};
use crate::raster::Image;

/// Textured scene in `[0, 1]`: a few low-frequency sinusoids plus sharp
/// discs and rectangles of random tone, and a fine stripe pattern.
pub fn textured_scene(width: usize, height: usize, channels: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.02..0.25),
                rng.random_range(0.02..0.25),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.05..0.15),
            )
        })
        .collect();
    let scale = width.min(height) as f64;
    let shapes: Vec<(bool, f64, f64, f64, f64, [f64; 3])> = (0..24)
        .map(|_| {
            (
                rng.random_bool(0.5),
                rng.random_range(0.0..width as f64),
                rng.random_range(0.0..height as f64),
                rng.random_range(0.02..0.15) * scale,
                rng.random_range(0.02..0.15) * scale,
                [rng.random(), rng.random(), rng.random()],
            )
        })
        .collect();

    let planes = (0..channels)
        .map(|c| {
            let mut data = Vec::with_capacity(width * height);
            for y in 0..height {
                for x in 0..width {
                    let (xf, yf) = (x as f64, y as f64);
                    let mut v = 0.5;
                    for &(fx, fy, ph, amp) in &waves {
                        v += amp * (fx * xf + fy * yf + ph + c as f64).sin();
                    }
                    for &(disc, cx, cy, a, b, tone) in &shapes {
                        let inside = if disc {
                            (xf - cx).powi(2) + (yf - cy).powi(2) <= a * a
                        } else {
                            (xf - cx).abs() <= a && (yf - cy).abs() <= b
                        };
                        if inside {
                            v = 0.5 * v + 0.5 * tone[c];
                        }
                    }
                    if (x / 2 + y / 3) % 2 == 0 {
                        v += 0.08;
                    }
                    data.push(v.clamp(0.0, 1.0));
                }
            }
            data
        })
        .collect();
    Image::from_planes(width, height, planes).expect("generated planes are well formed")
}

/// Uniform noise in `[0, 1]`.
pub fn noise(width: usize, height: usize, channels: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planes = (0..channels)
        .map(|_| (0..width * height).map(|_| rng.random::<f64>()).collect())
        .collect();
    Image::from_planes(width, height, planes).expect("generated planes are well formed")
}

/// Split `base` into `n` vertical strips; source `i` is sharp on strip `i`
/// and blurred by `sigma` elsewhere.
pub fn focus_stack(base: &Image, n: usize, sigma: f64) -> Result<Vec<Image>> {
    if n < 2 {
        return Err(FusionError::param("a focus stack needs at least 2 images"));
    }
    let blurred = convolve_separable(base, &Kernel1D::gaussian(sigma)?);
    let (w, h) = base.dims();
    Ok((0..n)
        .map(|i| {
            let (lo, hi) = (i * w / n, (i + 1) * w / n);
            let planes = (0..base.channels())
                .map(|c| {
                    let mut data = blurred.plane(c).to_vec();
                    for y in 0..h {
                        let row = y * w;
                        data[row + lo..row + hi]
                            .copy_from_slice(&base.plane(c)[row + lo..row + hi]);
                    }
                    data
                })
                .collect();
            Image::from_planes(w, h, planes).expect("same shape as base")
        })
        .collect())
}

/// Left half sharp in the first image, right half sharp in the second.
pub fn focus_pair(base: &Image, sigma: f64) -> Result<(Image, Image)> {
    let mut stack = focus_stack(base, 2, sigma)?;
    let b = stack.pop().expect("two images");
    let a = stack.pop().expect("two images");
    Ok((a, b))
}

/// Parse `"WxH"`.
pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let err = || FusionError::param(format!("expected a size like 2040x1086, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(err)?;
    let w: usize = w.trim().parse().map_err(|_| err())?;
    let h: usize = h.trim().parse().map_err(|_| err())?;
    if w == 0 || h == 0 {
        return Err(err());
    }
    Ok((w, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_is_deterministic_and_in_range() {
        let a = textured_scene(40, 30, 3, 9);
        assert_eq!(a, textured_scene(40, 30, 3, 9));
        assert_ne!(a, textured_scene(40, 30, 3, 10));
        let (lo, hi) = a.min_max();
        assert!(lo >= 0.0 && hi <= 1.0 && hi - lo > 0.3);
    }

    #[test]
    fn focus_pair_halves() {
        let base = textured_scene(20, 10, 1, 1);
        let (a, b) = focus_pair(&base, 3.0).unwrap();
        for y in 0..10 {
            for x in 0..10 {
                assert_eq!(a.get(x, y), base.get(x, y));
                assert_eq!(b.get(x + 10, y), base.get(x + 10, y));
            }
        }
        assert_ne!(a.get(15, 5), base.get(15, 5));
    }

    #[test]
    fn sizes() {
        assert_eq!(parse_size("2040x1086").unwrap(), (2040, 1086));
        assert_eq!(parse_size("8X4").unwrap(), (8, 4));
        assert!(parse_size("2040").is_err());
        assert!(parse_size("0x5").is_err());
    }
}
