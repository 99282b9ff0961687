//! Linear filters: separable Gaussian convolution and O(1) box means.
//!
//! Convolutions replicate edge pixels. Box means clip the window to the
//! image and divide by the true number of covered pixels.

use rayon::prelude::*;

use crate::error::{FusionError, Result};
use crate::raster::Image;

/// Symmetric, normalized 1-D kernel of `2 * radius + 1` taps.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel1D {
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel1D {
    /// Sampled Gaussian truncated at `ceil(3 * sigma)`.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(FusionError::param(format!(
                "gaussian sigma must be positive and finite, got {sigma}"
            )));
        }
        let radius = (3.0 * sigma).ceil() as usize;
        Ok(Self::gaussian_with_radius(sigma, radius))
    }

    /// Sampled Gaussian with an explicit support radius.
    pub fn gaussian_with_radius(sigma: f64, radius: usize) -> Self {
        let two_s2 = 2.0 * sigma * sigma;
        let raw: Vec<f64> = (0..=2 * radius)
            .map(|i| {
                let d = i as f64 - radius as f64;
                (-d * d / two_s2).exp()
            })
            .collect();
        Self::normalized(raw)
    }

    fn normalized(raw: Vec<f64>) -> Self {
        let radius = raw.len() / 2;
        let sum: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| w / sum).collect();
        Self { radius, weights }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Free-function form of [`Kernel1D::gaussian`].
pub fn make_gaussian_kernel(sigma: f64) -> Result<Kernel1D> {
    Kernel1D::gaussian(sigma)
}

/// Horizontal then vertical pass with `k`, per channel.
pub fn convolve_separable(img: &Image, k: &Kernel1D) -> Image {
    let (w, h) = img.dims();
    let planes = img
        .planes()
        .iter()
        .map(|p| convolve_plane(p, w, h, k))
        .collect();
    Image::from_planes_unchecked(w, h, planes)
}

/// Wraps a pixel kernel `$body` (an `#[inline(always)]` fn) in `$name`,
/// which runs an AVX2 build of it when the CPU has AVX2. The kernels only
/// add, multiply and divide, and the compiler never fuses those, so both
/// builds give identical results.
macro_rules! simd_dispatch {
    (
        fn $name:ident[$($g:tt)*]($($arg:ident: $ty:ty),* $(,)?) => $body:ident
        where $($bound:tt)*
    ) => {
        #[allow(clippy::too_many_arguments)]
        fn $name<$($g)*>($($arg: $ty),*) where $($bound)* {
            #[cfg(target_arch = "x86_64")]
            {
                #[target_feature(enable = "avx2")]
                #[allow(clippy::too_many_arguments)]
                unsafe fn avx2<$($g)*>($($arg: $ty),*) where $($bound)* {
                    $body($($arg),*)
                }
                if std::is_x86_feature_detected!("avx2") {
                    // SAFETY: AVX2 support was checked just above.
                    return unsafe { avx2($($arg),*) };
                }
            }
            $body($($arg),*)
        }
    };
}

/// Output rows are produced in fixed bands so that only a band's worth of
/// horizontally filtered rows is held at a time. Band boundaries do not
/// depend on the thread count, and every output sample is accumulated in
/// the same order, so results are identical however the bands are scheduled.
const BAND_ROWS: usize = 64;

pub(crate) fn convolve_plane(src: &[f64], w: usize, h: usize, k: &Kernel1D) -> Vec<f64> {
    let mut dst = vec![0.0; w * h];
    convolve_plane_into(src, w, h, k, &mut dst);
    dst
}

pub(crate) fn convolve_plane_into(src: &[f64], w: usize, h: usize, k: &Kernel1D, dst: &mut [f64]) {
    convolve_rows_into(
        w,
        h,
        k,
        |y, row| row.copy_from_slice(&src[y * w..(y + 1) * w]),
        dst,
        |o, v| *o = v,
    );
}

/// Separable convolution of a plane whose rows come from `fill_row(y, row)`.
/// Each filtered sample is handed to `store(&mut dst[i], value)`, so callers
/// can overwrite or reduce into `dst`.
pub(crate) fn convolve_rows_into<F, S>(
    w: usize,
    h: usize,
    k: &Kernel1D,
    fill_row: F,
    dst: &mut [f64],
    store: S,
) where
    F: Fn(usize, &mut [f64]) + Sync,
    S: Fn(&mut f64, f64) + Sync,
{
    let r = k.radius;
    dst.par_chunks_mut(BAND_ROWS * w).enumerate().for_each_init(
        || (vec![0.0; w + 2 * r], Vec::new(), vec![0.0; w]),
        |(padded, rows, acc), (band, out)| {
            let scratch = BandScratch { padded, rows, acc };
            let y0 = band * BAND_ROWS;
            convolve_band_dispatch(w, h, &k.weights, y0, &fill_row, &store, scratch, out);
        },
    );
}

struct BandScratch<'a> {
    padded: &'a mut [f64],
    rows: &'a mut Vec<f64>,
    acc: &'a mut [f64],
}

simd_dispatch! {
    fn convolve_band_dispatch[F, S](
        w: usize,
        h: usize,
        weights: &[f64],
        y0: usize,
        fill_row: &F,
        store: &S,
        scratch: BandScratch<'_>,
        out: &mut [f64],
    ) => convolve_band
    where
        F: Fn(usize, &mut [f64]),
        S: Fn(&mut f64, f64),
}

/// Horizontal pass over the band's rows plus halo, then the vertical pass.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn convolve_band<F, S>(
    w: usize,
    h: usize,
    weights: &[f64],
    y0: usize,
    fill_row: &F,
    store: &S,
    scratch: BandScratch<'_>,
    out: &mut [f64],
) where
    F: Fn(usize, &mut [f64]),
    S: Fn(&mut f64, f64),
{
    let BandScratch { padded, rows, acc } = scratch;
    let r = weights.len() / 2;
    let n_out = out.len() / w;
    rows.resize((n_out + 2 * r) * w, 0.0);
    for (j, hrow) in rows.chunks_exact_mut(w).enumerate() {
        let sy = (y0 + j).saturating_sub(r).min(h - 1);
        fill_row(sy, &mut padded[r..r + w]);
        let (first, last) = (padded[r], padded[r + w - 1]);
        padded[..r].fill(first);
        padded[r + w..].fill(last);
        hrow.fill(0.0);
        for (i, &wt) in weights.iter().enumerate() {
            for (o, &v) in hrow.iter_mut().zip(&padded[i..i + w]) {
                *o += wt * v;
            }
        }
    }
    for (yy, orow) in out.chunks_exact_mut(w).enumerate() {
        acc.fill(0.0);
        for (i, &wt) in weights.iter().enumerate() {
            let hrow = &rows[(yy + i) * w..(yy + i + 1) * w];
            for (o, &v) in acc.iter_mut().zip(hrow) {
                *o += wt * v;
            }
        }
        for (o, &v) in orow.iter_mut().zip(acc.iter()) {
            store(o, v);
        }
    }
}

/// Mean over the `(2r+1)^2` window clipped to the image, per channel.
pub fn box_mean(img: &Image, r: usize) -> Image {
    let (w, h) = img.dims();
    let planes = img
        .planes()
        .iter()
        .map(|p| box_mean_plane(p, w, h, r))
        .collect();
    Image::from_planes_unchecked(w, h, planes)
}

pub(crate) fn box_mean_plane(src: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    if r == 0 {
        return src.to_vec();
    }
    let mut dst = vec![0.0; w * h];
    box_means_into(
        w,
        h,
        r,
        |y, [row]: &mut [Vec<f64>; 1]| row.copy_from_slice(&src[y * w..(y + 1) * w]),
        |_, [mean]: &[Vec<f64>; 1], [out]: [&mut [f64]; 1]| out.copy_from_slice(mean),
        [&mut dst],
    );
    dst
}

/// Box means of `K` planes at once. `fill(y, rows)` produces row `y` of
/// every plane, and `finish(y, means, outs)` turns the `K` mean rows of
/// output row `y` into row `y` of each of the `M` output planes.
///
/// Each band keeps running column sums of horizontal window sums, adding
/// the row entering the window and subtracting the one leaving it. Windows
/// are clipped to the image and divided by the integer pixel count, so sums
/// of ones come out exact.
pub(crate) fn box_means_into<const K: usize, const M: usize, F, G>(
    w: usize,
    h: usize,
    r: usize,
    fill: F,
    finish: G,
    outs: [&mut [f64]; M],
) where
    F: Fn(usize, &mut [Vec<f64>; K]) + Sync,
    G: Fn(usize, &[Vec<f64>; K], [&mut [f64]; M]) + Sync,
{
    let col_counts: Vec<f64> = (0..w)
        .map(|x| ((x + r).min(w - 1) - x.saturating_sub(r) + 1) as f64)
        .collect();
    let mut chunks = outs.map(|o| o.chunks_mut(BAND_ROWS * w));
    let mut bands = Vec::new();
    while let Some(band) = chunks
        .each_mut()
        .map(Iterator::next)
        .into_iter()
        .collect::<Option<Vec<_>>>()
    {
        let band: [&mut [f64]; M] = band.try_into().unwrap_or_else(|_| unreachable!());
        bands.push(band);
    }
    let plane_rows = || std::array::from_fn::<Vec<f64>, K, _>(|_| vec![0.0; w]);
    bands.into_par_iter().enumerate().for_each_init(
        || BoxScratch {
            rows: plane_rows(),
            prefix: vec![0.0; w + 1],
            ring: std::array::from_fn(|_| vec![0.0; (2 * r + 2) * w]),
            acc: plane_rows(),
            means: plane_rows(),
        },
        |scratch, (band, out)| {
            box_band_dispatch(
                w,
                h,
                r,
                band * BAND_ROWS,
                &col_counts,
                &fill,
                &finish,
                scratch,
                out,
            )
        },
    );
}

struct BoxScratch<const K: usize> {
    rows: [Vec<f64>; K],
    prefix: Vec<f64>,
    /// Horizontal window sums of the `2r + 2` most recent rows per plane,
    /// row `y` in slot `y % (2r + 2)`.
    ring: [Vec<f64>; K],
    acc: [Vec<f64>; K],
    means: [Vec<f64>; K],
}

simd_dispatch! {
    fn box_band_dispatch[const K: usize, const M: usize, F, G](
        w: usize,
        h: usize,
        r: usize,
        y0: usize,
        col_counts: &[f64],
        fill: &F,
        finish: &G,
        scratch: &mut BoxScratch<K>,
        out: [&mut [f64]; M],
    ) => box_band
    where
        F: Fn(usize, &mut [Vec<f64>; K]),
        G: Fn(usize, &[Vec<f64>; K], [&mut [f64]; M]),
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn box_band<const K: usize, const M: usize, F, G>(
    w: usize,
    h: usize,
    r: usize,
    y0: usize,
    col_counts: &[f64],
    fill: &F,
    finish: &G,
    scratch: &mut BoxScratch<K>,
    mut out: [&mut [f64]; M],
) where
    F: Fn(usize, &mut [Vec<f64>; K]),
    G: Fn(usize, &[Vec<f64>; K], [&mut [f64]; M]),
{
    let BoxScratch {
        rows,
        prefix,
        ring,
        acc,
        means,
    } = scratch;
    let slot = |y: usize| (y % (2 * r + 2)) * w..(y % (2 * r + 2) + 1) * w;
    // Add row `y` of every plane to the running column sums, keeping its
    // horizontal window sums until the row leaves the window.
    let mut enter = |y: usize, ring: &mut [Vec<f64>; K], acc: &mut [Vec<f64>; K]| {
        fill(y, rows);
        for ((row, ring), acc) in rows.iter().zip(ring.iter_mut()).zip(acc.iter_mut()) {
            let mut run = 0.0;
            for (x, &v) in row.iter().enumerate() {
                run += v;
                prefix[x + 1] = run;
            }
            let hsum = &mut ring[slot(y)];
            for (x, o) in hsum.iter_mut().enumerate() {
                *o = prefix[(x + r).min(w - 1) + 1] - prefix[x.saturating_sub(r)];
            }
            add_row(acc, hsum);
        }
    };
    let n_out = out[0].len() / w;
    for a in acc.iter_mut() {
        a.fill(0.0);
    }
    for y in y0.saturating_sub(r)..=(y0 + r).min(h - 1) {
        enter(y, ring, acc);
    }
    for yy in 0..n_out {
        let y = y0 + yy;
        let row_count = ((y + r).min(h - 1) - y.saturating_sub(r) + 1) as f64;
        for (mean, acc) in means.iter_mut().zip(acc.iter()) {
            for ((m, &a), &cc) in mean.iter_mut().zip(acc).zip(col_counts) {
                *m = a / (cc * row_count);
            }
        }
        finish(
            y,
            means,
            out.each_mut().map(|o| &mut o[yy * w..(yy + 1) * w]),
        );
        if yy + 1 == n_out {
            break;
        }
        if y + r + 1 < h {
            enter(y + r + 1, ring, acc);
        }
        if y >= r {
            for (ring, acc) in ring.iter().zip(acc.iter_mut()) {
                sub_row(acc, &ring[slot(y - r)]);
            }
        }
    }
}

#[inline]
fn add_row(acc: &mut [f64], row: &[f64]) {
    for (a, &v) in acc.iter_mut().zip(row) {
        *a += v;
    }
}

#[inline]
fn sub_row(acc: &mut [f64], row: &[f64]) {
    for (a, &v) in acc.iter_mut().zip(row) {
        *a -= v;
    }
}
