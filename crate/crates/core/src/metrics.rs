//! Error metrics for recovered images and spectra.

use alloc::vec::Vec;

use num_traits::Float;

use crate::geometry::signed_frequency;
use crate::image::{wrap_angle, ComplexImage, RealImage};
use crate::{Error, Result};

/// Root-mean-square difference as a fraction of the reference range `max(f) - min(f)`.
///
/// A flat reference has no range; it is normalised by `max |f|` instead, or
/// not at all when `f` is identically zero.
pub fn rmse(f: &RealImage, g: &RealImage) -> Result<f64> {
    f.check_same_shape(g)?;
    let n = f.len() as f64;
    let sq: f64 = f
        .as_slice()
        .iter()
        .zip(g.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let raw = Float::sqrt(sq / n);
    let range = f.max() - f.min();
    let peak = f.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let norm = if range > 0.0 {
        range
    } else if peak > 0.0 {
        peak
    } else {
        1.0
    };
    Ok(raw / norm)
}

/// Removes the global phase offset of `recovered` relative to `truth`
/// (circular mean of the difference) and wraps to `(-pi, pi]`.
pub fn phase_align(recovered: &RealImage, truth: &RealImage) -> Result<RealImage> {
    recovered.check_same_shape(truth)?;
    let (mut s, mut c) = (0.0, 0.0);
    for (a, b) in recovered.as_slice().iter().zip(truth.as_slice()) {
        let d = a - b;
        s += Float::sin(d);
        c += Float::cos(d);
    }
    let offset = if s == 0.0 && c == 0.0 { 0.0 } else { Float::atan2(s, c) };
    Ok(recovered.map_raw(|v| wrap_angle(v - offset)))
}

/// Pixel set for background statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Rect {
        row0: usize,
        col0: usize,
        rows: usize,
        cols: usize,
    },
    /// Nearest-pixel samples along a segment, both ends included.
    Line { from: (usize, usize), to: (usize, usize) },
}

impl Region {
    pub fn pixels(&self, rows: usize, cols: usize) -> Result<Vec<(usize, usize)>> {
        let oob = Error::RegionOutOfBounds { rows, cols };
        match *self {
            Region::Rect {
                row0,
                col0,
                rows: h,
                cols: w,
            } => {
                if h == 0 || w == 0 {
                    return Err(Error::EmptyRegion);
                }
                if row0 + h > rows || col0 + w > cols {
                    return Err(oob);
                }
                Ok((row0..row0 + h)
                    .flat_map(|r| (col0..col0 + w).map(move |c| (r, c)))
                    .collect())
            }
            Region::Line { from, to } => {
                if from.0 >= rows || to.0 >= rows || from.1 >= cols || to.1 >= cols {
                    return Err(oob);
                }
                let dr = to.0 as f64 - from.0 as f64;
                let dc = to.1 as f64 - from.1 as f64;
                let n = dr.abs().max(dc.abs()) as usize;
                Ok((0..=n)
                    .map(|i| {
                        let t = if n == 0 { 0.0 } else { i as f64 / n as f64 };
                        (
                            Float::round(from.0 as f64 + t * dr) as usize,
                            Float::round(from.1 as f64 + t * dc) as usize,
                        )
                    })
                    .collect())
            }
        }
    }
}

/// Standard deviation of the phase samples in `region`.
pub fn background_phase_std(phase: &RealImage, region: &Region) -> Result<f64> {
    let px = region.pixels(phase.rows(), phase.cols())?;
    let n = px.len() as f64;
    let mean = px.iter().map(|&p| phase[p]).sum::<f64>() / n;
    let var = px.iter().map(|&p| (phase[p] - mean) * (phase[p] - mean)).sum::<f64>() / n;
    Ok(Float::sqrt(var))
}

fn in_dc_disk(fy: isize, fx: isize, radius: f64) -> bool {
    ((fy * fy + fx * fx) as f64) <= radius * radius
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig {
            field: "exclude_dc_radius",
            reason: alloc::format!("must be at least 1 pixel, got {radius}"),
        })
    }
}

/// Share of spectral energy on the two frequency axes (row `ky = 0` and
/// column `kx = 0` of the unshifted layout), both terms taken outside a disk
/// of `exclude_dc_radius` bins around DC.
pub fn axis_artifact_energy(spectrum: &ComplexImage, exclude_dc_radius: f64) -> Result<f64> {
    check_radius(exclude_dc_radius)?;
    let (m, n) = spectrum.shape();
    let (mut axis, mut total) = (0.0, 0.0);
    for r in 0..m {
        let fy = signed_frequency(r, m);
        for c in 0..n {
            let fx = signed_frequency(c, n);
            if in_dc_disk(fy, fx, exclude_dc_radius) {
                continue;
            }
            let e = spectrum[(r, c)].norm_sqr();
            total += e;
            if fy == 0 || fx == 0 {
                axis += e;
            }
        }
    }
    Ok(if total > 0.0 { axis / total } else { 0.0 })
}

/// Value of [`axis_artifact_energy`] for a spectrum of uniform magnitude:
/// the share of axis bins among all bins outside the DC disk.
pub fn axis_null_reference(rows: usize, cols: usize, exclude_dc_radius: f64) -> Result<f64> {
    let flat = ComplexImage::filled(rows, cols, num_complex::Complex64::new(1.0, 0.0))?;
    axis_artifact_energy(&flat, exclude_dc_radius)
}

/// Phase disagreement between a full-tile reconstruction and an independent
/// reconstruction of a sub-tile placed at `sub_origin = (row, col)`.
///
/// A guard band of `ceil(5%)` of each sub-tile side is dropped; the sub-tile is
/// phase-aligned to the full result and the wrapped differences are reduced to
/// an RMS in radians.
pub fn block_consistency(
    full_phase: &RealImage,
    sub_phase: &RealImage,
    sub_origin: (usize, usize),
) -> Result<f64> {
    let (h, w) = sub_phase.shape();
    let (r0, c0) = sub_origin;
    if r0 + h > full_phase.rows() || c0 + w > full_phase.cols() {
        return Err(Error::RegionOutOfBounds {
            rows: full_phase.rows(),
            cols: full_phase.cols(),
        });
    }
    let gh = h.div_ceil(20);
    let gw = w.div_ceil(20);
    if 2 * gh >= h || 2 * gw >= w {
        return Err(Error::EmptyRegion);
    }
    let (ih, iw) = (h - 2 * gh, w - 2 * gw);
    let sub = sub_phase.crop(gh, gw, ih, iw)?;
    let full = full_phase.crop(r0 + gh, c0 + gw, ih, iw)?;
    let aligned = phase_align(&sub, &full)?;
    let sq: f64 = aligned
        .as_slice()
        .iter()
        .zip(full.as_slice())
        .map(|(a, b)| {
            let d = wrap_angle(a - b);
            d * d
        })
        .sum();
    Ok(Float::sqrt(sq / (ih * iw) as f64))
}

/// Evaluation summary. Fields stay `None` when their inputs were not supplied.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricReport {
    pub rmse_intensity: Option<f64>,
    pub rmse_phase: Option<f64>,
    pub background_phase_std: Option<f64>,
    pub axis_artifact_energy: Option<f64>,
    pub block_consistency: Option<f64>,
    pub wall_time: Option<f64>,
}

impl MetricReport {
    /// Intensity and aligned-phase RMSE of a recovered field against truth.
    pub fn compare(
        amplitude: &RealImage,
        phase: &RealImage,
        truth_amplitude: &RealImage,
        truth_phase: &RealImage,
    ) -> Result<Self> {
        let sq = |a: &RealImage| a.map_raw(|v| v * v);
        let aligned = phase_align(phase, truth_phase)?;
        Ok(Self {
            rmse_intensity: Some(rmse(&sq(truth_amplitude), &sq(amplitude))?),
            rmse_phase: Some(rmse(truth_phase, &aligned)?),
            ..Self::default()
        })
    }
}
