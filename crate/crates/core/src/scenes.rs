//! Synthetic test objects: band-limited random textures and a phase bar target.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::fft::{Dft2, Direction};
use crate::geometry::signed_frequency;
use crate::image::RealImage;
use crate::metrics::Region;
use crate::sim::GroundTruth;
use crate::Result;

/// Gaussian-filtered white noise on an `n x n` torus, rescaled to `[0, 1]`.
/// `bandwidth` is the filter's standard deviation in frequency bins.
pub fn periodic_texture(rng: &mut ChaCha8Rng, n: usize, bandwidth: f64) -> Result<RealImage> {
    let mut buf: Vec<Complex64> = (0..n * n)
        .map(|_| Complex64::new(StandardNormal.sample(rng), 0.0))
        .collect();
    let dft = Dft2::new(n, n);
    dft.process(&mut buf, Direction::Forward);
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    for r in 0..n {
        let fy = signed_frequency(r, n) as f64;
        for c in 0..n {
            let fx = signed_frequency(c, n) as f64;
            buf[r * n + c] *= Float::exp(-(fx * fx + fy * fy) * inv);
        }
    }
    dft.process(&mut buf, Direction::Inverse);
    let img = RealImage::new(n, n, buf.into_iter().map(|z| z.re).collect())?;
    let (lo, hi) = (img.min(), img.max());
    img.map(|v| (v - lo) / (hi - lo))
}

/// Centre crop of a texture drawn on a twice larger torus, so opposite edges
/// are uncorrelated. `bandwidth` refers to the larger grid.
pub fn aperiodic_texture(rng: &mut ChaCha8Rng, n: usize, bandwidth: f64) -> Result<RealImage> {
    let big = periodic_texture(rng, 2 * n, bandwidth)?;
    big.crop(n / 2, n / 2, n, n)
}

/// Amplitude in `[0.3, 1]` and phase in `[0, pi/2]` from two independent
/// aperiodic textures.
pub fn textured_object(seed: u64, n: usize, bandwidth: f64) -> Result<GroundTruth> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = aperiodic_texture(&mut rng, n, bandwidth)?;
    let p = aperiodic_texture(&mut rng, n, bandwidth)?;
    GroundTruth::new(a.map(|v| 0.3 + 0.7 * v)?, p.map(|v| FRAC_PI_2 * v)?)
}

/// Pure phase object: four horizontal bars running off the left edge and
/// four vertical bars running off the top edge, with soft (logistic) edges.
/// Returns the object and a rectangle of empty background.
pub fn phase_bar_target(n: usize, height: f64) -> Result<(GroundTruth, Region)> {
    // Layout is defined on a 384 grid and scaled.
    let s = n as f64 / 384.0;
    let soft = 1.5 * s;
    let step = |t: f64| 1.0 / (1.0 + Float::exp(-t / soft));
    let window = |t: f64, a: f64, b: f64| step(t - a * s) - step(t - b * s);
    let phase = RealImage::from_fn(n, n, |r, c| {
        let (y, x) = (r as f64, c as f64);
        let mut v = 0.0;
        for i in 0..4 {
            let o = 24.0 * i as f64;
            v += window(x, -50.0, 150.0) * window(y, 40.0 + o, 52.0 + o);
            v += window(x, 200.0 + o, 212.0 + o) * window(y, -50.0, 140.0);
        }
        height * v
    })?;
    let amp = RealImage::filled(n, n, 1.0)?;
    let sc = |v: f64| Float::round(v * s) as usize;
    let background = Region::Rect {
        row0: sc(200.0),
        col0: sc(40.0),
        rows: sc(160.0),
        cols: sc(320.0),
    };
    Ok((GroundTruth::new(amp, phase)?, background))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn texture_range_and_determinism() {
        let t1 = textured_object(3, 48, 10.0).unwrap();
        let t2 = textured_object(3, 48, 10.0).unwrap();
        assert_eq!(t1, t2);
        assert!(t1.amplitude().min() >= 0.3 - 1e-12);
        assert!(t1.amplitude().max() <= 1.0 + 1e-12);
        assert!(t1.phase().max() <= FRAC_PI_2 + 1e-12);
    }

    #[test]
    fn target_background_is_empty() {
        let (t, bg) = phase_bar_target(384, 1.0).unwrap();
        let Region::Rect { row0, col0, rows, cols } = bg else {
            unreachable!()
        };
        for r in row0..row0 + rows {
            for c in col0..col0 + cols {
                assert!(t.phase()[(r, c)] < 1e-9);
            }
        }
        assert!(t.phase().max() > 0.9);
    }
}
