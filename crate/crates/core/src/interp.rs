//! Bilinear and bicubic (Keys, a = -0.5) resampling with edge clamping.

use alloc::vec::Vec;

use num_traits::Float;

use crate::image::RealImage;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    Bilinear,
    Bicubic,
}

/// Upsamples by an integer factor so that output pixel `s * j` sits exactly on
/// input pixel `j`, matching the sampling of a spectrally zero-padded image.
pub fn upsample(img: &RealImage, factor: usize, kind: Interpolation) -> Result<RealImage> {
    if factor == 0 {
        return Err(Error::InvalidConfig {
            field: "factor",
            reason: "upsampling factor must be positive".into(),
        });
    }
    let s = factor as f64;
    sample(img, img.rows() * factor, img.cols() * factor, kind, |i| i as f64 / s)
}

/// Resamples to `rows x cols` with pixel centres aligned.
pub fn resample(img: &RealImage, rows: usize, cols: usize, kind: Interpolation) -> Result<RealImage> {
    if rows == 0 || cols == 0 {
        return Err(Error::Empty { rows, cols });
    }
    let sy = img.rows() as f64 / rows as f64;
    let sx = img.cols() as f64 / cols as f64;
    // Separate scales per axis; pass the axis through the closure index.
    let ys: Vec<f64> = (0..rows).map(|i| (i as f64 + 0.5) * sy - 0.5).collect();
    let xs: Vec<f64> = (0..cols).map(|j| (j as f64 + 0.5) * sx - 0.5).collect();
    sample_at(img, &ys, &xs, kind)
}

fn sample(
    img: &RealImage,
    rows: usize,
    cols: usize,
    kind: Interpolation,
    coord: impl Fn(usize) -> f64,
) -> Result<RealImage> {
    let ys: Vec<f64> = (0..rows).map(&coord).collect();
    let xs: Vec<f64> = (0..cols).map(&coord).collect();
    sample_at(img, &ys, &xs, kind)
}

fn sample_at(img: &RealImage, ys: &[f64], xs: &[f64], kind: Interpolation) -> Result<RealImage> {
    let (wy, wx) = match kind {
        Interpolation::Bilinear => (weights(ys, img.rows(), linear), weights(xs, img.cols(), linear)),
        Interpolation::Bicubic => (weights(ys, img.rows(), cubic), weights(xs, img.cols(), cubic)),
    };
    let mut out = Vec::with_capacity(ys.len() * xs.len());
    for ry in &wy {
        for rx in &wx {
            let mut acc = 0.0;
            for &(r, a) in ry {
                for &(c, b) in rx {
                    acc += a * b * img[(r, c)];
                }
            }
            out.push(acc);
        }
    }
    RealImage::new(ys.len(), xs.len(), out)
}

type Taps = Vec<(usize, f64)>;

fn weights(coords: &[f64], n: usize, kernel: fn(f64, usize) -> Taps) -> Vec<Taps> {
    coords.iter().map(|&t| kernel(t, n)).collect()
}

fn clamp(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

fn linear(t: f64, n: usize) -> Taps {
    let i0 = Float::floor(t) as isize;
    let f = t - i0 as f64;
    let mut taps = Vec::with_capacity(2);
    taps.push((clamp(i0, n), 1.0 - f));
    taps.push((clamp(i0 + 1, n), f));
    taps
}

fn keys(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

fn cubic(t: f64, n: usize) -> Taps {
    let i0 = Float::floor(t) as isize;
    let f = t - i0 as f64;
    (-1..=2)
        .map(|d| (clamp(i0 + d, n), keys(f - d as f64)))
        .collect()
}
