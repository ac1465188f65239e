//! LED-array illumination geometry, pupil masks and grid sizing.
//!
//! Spectral grids use the unshifted layout: DC sits at index `(0, 0)` and bin
//! `i` of an `n`-point axis carries signed frequency [`signed_frequency`]`(i, n)`.
//! Rows run along `ky`, columns along `kx`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::image::{ComplexImage, RealImage};
use crate::{Error, Result};

/// Physical layout of the microscope and LED array. Lengths in metres.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemGeometry {
    pub led_rows: usize,
    pub led_cols: usize,
    pub led_pitch: f64,
    pub led_to_sample: f64,
    pub wavelength: f64,
    pub objective_na: f64,
    pub camera_pixel: f64,
    pub magnification: f64,
    /// Side of the square low-resolution tile, pixels.
    pub lr_size: usize,
}

impl SystemGeometry {
    /// 11x11 array, 4 mm pitch, 76 mm high, 630 nm, 4x / 0.1 NA, 6.5 um camera pixel, 128 px tile.
    pub fn example_11x11() -> Self {
        Self {
            led_rows: 11,
            led_cols: 11,
            led_pitch: 4e-3,
            led_to_sample: 76e-3,
            wavelength: 630e-9,
            objective_na: 0.1,
            camera_pixel: 6.5e-6,
            magnification: 4.0,
            lr_size: 128,
        }
    }

    /// 32x32 array (4 mm pitch) at 86 mm, 631 nm, 4x / 0.1 NA, 3.75 um camera pixel, 128 px tile.
    pub fn example_32x32() -> Self {
        Self {
            led_rows: 32,
            led_cols: 32,
            led_pitch: 4e-3,
            led_to_sample: 86e-3,
            wavelength: 631e-9,
            objective_na: 0.1,
            camera_pixel: 3.75e-6,
            magnification: 4.0,
            lr_size: 128,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("led_pitch", self.led_pitch),
            ("led_to_sample", self.led_to_sample),
            ("wavelength", self.wavelength),
            ("objective_na", self.objective_na),
            ("camera_pixel", self.camera_pixel),
            ("magnification", self.magnification),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGeometry {
                    field,
                    reason: format!("must be finite and strictly positive, got {v}"),
                });
            }
        }
        if self.objective_na >= 1.0 {
            return Err(Error::InvalidGeometry {
                field: "objective_na",
                reason: format!("must be below 1, got {}", self.objective_na),
            });
        }
        if self.led_rows == 0 || self.led_cols == 0 {
            return Err(Error::InvalidGeometry {
                field: "led_rows/led_cols",
                reason: "LED array must have at least one row and column".into(),
            });
        }
        if self.lr_size < 2 {
            return Err(Error::InvalidGeometry {
                field: "lr_size",
                reason: format!("tile side must be at least 2, got {}", self.lr_size),
            });
        }
        // Coherent cutoff NA/lambda needs a sample spacing of at most lambda / (2 NA).
        let pixel = self.object_pixel();
        let limit = self.wavelength / (2.0 * self.objective_na);
        if pixel > limit * (1.0 + 1e-12) {
            return Err(Error::InvalidGeometry {
                field: "camera_pixel",
                reason: format!(
                    "object-plane pixel {pixel:.4e} m exceeds the sampling limit \
                     wavelength/(2 NA) = {limit:.4e} m"
                ),
            });
        }
        Ok(())
    }

    /// `2 pi / lambda`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Camera pixel referred to the sample plane.
    pub fn object_pixel(&self) -> f64 {
        self.camera_pixel / self.magnification
    }

    /// Spectral step of the tile grid, rad/m per pixel.
    pub fn spectral_step(&self) -> f64 {
        2.0 * PI / (self.lr_size as f64 * self.object_pixel())
    }

    /// Pupil cutoff `k0 * NA`, rad/m.
    pub fn pupil_radius(&self) -> f64 {
        self.wavenumber() * self.objective_na
    }

    pub fn led_count(&self) -> usize {
        self.led_rows * self.led_cols
    }

    pub fn check_led(&self, led: Led) -> Result<()> {
        if led.row < self.led_rows && led.col < self.led_cols {
            Ok(())
        } else {
            Err(Error::LedOutOfRange {
                row: led.row,
                col: led.col,
                rows: self.led_rows,
                cols: self.led_cols,
            })
        }
    }

    /// Lateral `(x, y)` of an LED relative to the optical axis, metres.
    pub fn led_position(&self, led: Led) -> Result<(f64, f64)> {
        self.check_led(led)?;
        let x = (led.col as f64 - (self.led_cols as f64 - 1.0) / 2.0) * self.led_pitch;
        let y = (led.row as f64 - (self.led_rows as f64 - 1.0) / 2.0) * self.led_pitch;
        Ok((x, y))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Led {
    pub row: usize,
    pub col: usize,
}

impl Led {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Transverse wavevector, rad/m.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Wavevector {
    pub kx: f64,
    pub ky: f64,
}

impl Wavevector {
    pub fn new(kx: f64, ky: f64) -> Self {
        Self { kx, ky }
    }

    pub fn norm(self) -> f64 {
        Float::hypot(self.kx, self.ky)
    }

    pub fn is_finite(self) -> bool {
        self.kx.is_finite() && self.ky.is_finite()
    }

    /// Nearest spectral pixel as `(row, col)` offset.
    pub fn to_pixels(self, spectral_step: f64) -> (isize, isize) {
        (
            Float::round(self.ky / spectral_step) as isize,
            Float::round(self.kx / spectral_step) as isize,
        )
    }
}

impl core::ops::Add for Wavevector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.kx + o.kx, self.ky + o.ky)
    }
}

impl core::ops::Neg for Wavevector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.kx, -self.ky)
    }
}

/// Illumination wavevector of one LED.
pub fn wavevector_for_led(geom: &SystemGeometry, row: usize, col: usize) -> Result<Wavevector> {
    let (x, y) = geom.led_position(Led::new(row, col))?;
    let r = Float::sqrt(x * x + y * y + geom.led_to_sample * geom.led_to_sample);
    let k0 = geom.wavenumber();
    Ok(Wavevector::new(-k0 * x / r, -k0 * y / r))
}

/// Centred rectangular block of lit LEDs. Even leftovers split evenly; an odd
/// leftover puts the extra unlit row or column at the high-index side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LitWindow {
    pub rows: usize,
    pub cols: usize,
}

impl LitWindow {
    pub fn full(geom: &SystemGeometry) -> Self {
        Self {
            rows: geom.led_rows,
            cols: geom.led_cols,
        }
    }

    pub fn leds(&self, geom: &SystemGeometry) -> Result<Vec<Led>> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::NoLeds);
        }
        if self.rows > geom.led_rows || self.cols > geom.led_cols {
            return Err(Error::InvalidConfig {
                field: "lit",
                reason: format!(
                    "window {}x{} exceeds the {}x{} array",
                    self.rows, self.cols, geom.led_rows, geom.led_cols
                ),
            });
        }
        let r0 = (geom.led_rows - self.rows) / 2;
        let c0 = (geom.led_cols - self.cols) / 2;
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in r0..r0 + self.rows {
            for c in c0..c0 + self.cols {
                out.push(Led::new(r, c));
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LedOrder {
    /// Ascending `|k|`, ties broken by `(row, col)`.
    #[default]
    CenterOut,
    Raster,
}

pub fn order_leds(geom: &SystemGeometry, leds: &[Led], order: LedOrder) -> Result<Vec<Led>> {
    let mut keyed = leds
        .iter()
        .map(|&l| Ok((wavevector_for_led(geom, l.row, l.col)?.norm(), l)))
        .collect::<Result<Vec<_>>>()?;
    match order {
        LedOrder::CenterOut => keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))),
        LedOrder::Raster => keyed.sort_by(|a, b| a.1.cmp(&b.1)),
    }
    Ok(keyed.into_iter().map(|(_, l)| l).collect())
}

/// Signed frequency index of bin `i` on an `n`-point axis.
pub fn signed_frequency(i: usize, n: usize) -> isize {
    if i < n.div_ceil(2) {
        i as isize
    } else {
        i as isize - n as isize
    }
}

/// Inverse of [`signed_frequency`].
pub fn frequency_bin(f: isize, n: usize) -> usize {
    f.rem_euclid(n as isize) as usize
}

/// Aberrations carried by the pupil.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PupilSpec {
    /// Phase map in radians on the tile spectral grid (unshifted layout).
    pub aberration_phase: Option<RealImage>,
    /// Defocus distance, metres.
    pub defocus: f64,
}

impl PupilSpec {
    pub fn is_ideal(&self) -> bool {
        self.aberration_phase.is_none() && self.defocus == 0.0
    }
}

/// Coherent transfer function on a `grid_size x grid_size` spectral grid.
pub fn pupil_mask(
    geom: &SystemGeometry,
    grid_size: usize,
    spectral_step: f64,
    pupil: &PupilSpec,
) -> Result<ComplexImage> {
    if !(spectral_step.is_finite() && spectral_step > 0.0) {
        return Err(Error::InvalidConfig {
            field: "spectral_step",
            reason: format!("must be positive, got {spectral_step}"),
        });
    }
    if let Some(map) = &pupil.aberration_phase {
        if map.shape() != (grid_size, grid_size) {
            return Err(Error::AberrationShape {
                rows: map.rows(),
                cols: map.cols(),
                grid: grid_size,
            });
        }
    }
    if !pupil.defocus.is_finite() {
        return Err(Error::InvalidConfig {
            field: "defocus",
            reason: "must be finite".into(),
        });
    }
    let k0 = geom.wavenumber();
    let cutoff = geom.pupil_radius();
    ComplexImage::from_fn(grid_size, grid_size, |r, c| {
        let ky = signed_frequency(r, grid_size) as f64 * spectral_step;
        let kx = signed_frequency(c, grid_size) as f64 * spectral_step;
        let k2 = kx * kx + ky * ky;
        if Float::sqrt(k2) > cutoff {
            return Complex64::default();
        }
        let mut phi = 0.0;
        if let Some(map) = &pupil.aberration_phase {
            phi += map[(r, c)];
        }
        if pupil.defocus != 0.0 {
            phi += pupil.defocus * Float::sqrt(k0 * k0 - k2);
        }
        if phi == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, phi)
        }
    })
}

/// Largest illumination sine over the LED set.
pub fn max_illumination_sine(geom: &SystemGeometry, leds: &[Led]) -> Result<f64> {
    let k0 = geom.wavenumber();
    let mut best: f64 = 0.0;
    for l in leds {
        best = best.max(wavevector_for_led(geom, l.row, l.col)?.norm() / k0);
    }
    Ok(best)
}

/// Radius of the synthetic aperture, rad/m.
pub fn synthetic_aperture_radius(geom: &SystemGeometry, leds: &[Led]) -> Result<f64> {
    Ok(geom.wavenumber() * (geom.objective_na + max_illumination_sine(geom, leds)?))
}

/// Smallest factor `s >= 2` such that the `s * lr_size` grid holds the whole
/// synthetic aperture and every LED's tile-sized sub-spectrum.
///
/// Invalid LEDs are ignored here; they surface as errors where they are used.
pub fn upsampling_factor(geom: &SystemGeometry, leds: &[Led]) -> usize {
    let step = geom.spectral_step();
    let lr = geom.lr_size as f64;
    let valid: Vec<Led> = leds
        .iter()
        .copied()
        .filter(|&l| geom.check_led(l).is_ok())
        .collect();
    let radius_px = synthetic_aperture_radius(geom, &valid).unwrap_or(0.0) / step;
    let max_shift = valid
        .iter()
        .filter_map(|l| wavevector_for_led(geom, l.row, l.col).ok())
        .map(|k| {
            let (r, c) = k.to_pixels(step);
            r.unsigned_abs().max(c.unsigned_abs())
        })
        .max()
        .unwrap_or(0);
    let mut s = 2;
    loop {
        let half = s as f64 * lr / 2.0;
        let crop_fits = sub_spectrum_fits(max_shift as isize, geom.lr_size, s * geom.lr_size);
        if half >= radius_px && crop_fits {
            return s;
        }
        s += 1;
    }
}

/// Whether an `lr`-point window centred `center` bins from DC stays inside an
/// `hr`-point axis, for either sign of `center`.
pub(crate) fn sub_spectrum_fits(center: isize, lr: usize, hr: usize) -> bool {
    let c = center.abs();
    let (lr_lo, lr_hi) = ((lr / 2) as isize, (lr.div_ceil(2)) as isize - 1);
    let (hr_lo, hr_hi) = ((hr / 2) as isize, (hr.div_ceil(2)) as isize - 1);
    -c - lr_lo >= -hr_lo && c + lr_hi <= hr_hi && c - lr_lo >= -hr_lo && -c + lr_hi <= hr_hi
}

/// Index maps from a tile spectral grid onto a larger grid, for a window
/// centred `center = (row, col)` bins from DC. Both grids are unshifted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubAperture {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl SubAperture {
    /// `None` when the window leaves the big grid.
    pub fn new(center: (isize, isize), lr: usize, hr: usize) -> Option<Self> {
        let axis = |c: isize| -> Option<Vec<usize>> {
            let (hr_lo, hr_hi) = (-((hr / 2) as isize), hr.div_ceil(2) as isize - 1);
            (0..lr)
                .map(|i| {
                    let f = signed_frequency(i, lr) + c;
                    (hr_lo..=hr_hi).contains(&f).then(|| frequency_bin(f, hr))
                })
                .collect()
        };
        Some(Self {
            rows: axis(center.0)?,
            cols: axis(center.1)?,
        })
    }

    /// Copies the window out of `big` (row-major, `hr` columns) into `out`.
    pub fn gather<T: Copy>(&self, big: &[T], hr: usize, out: &mut [T]) {
        let lr = self.cols.len();
        for (i, &r) in self.rows.iter().enumerate() {
            let src = &big[r * hr..(r + 1) * hr];
            let dst = &mut out[i * lr..(i + 1) * lr];
            for (d, &c) in dst.iter_mut().zip(&self.cols) {
                *d = src[c];
            }
        }
    }

    /// Writes `small` back into the window of `big`.
    pub fn scatter<T: Copy>(&self, small: &[T], big: &mut [T], hr: usize) {
        let lr = self.cols.len();
        for (i, &r) in self.rows.iter().enumerate() {
            let src = &small[i * lr..(i + 1) * lr];
            let dst = &mut big[r * hr..(r + 1) * hr];
            for (v, &c) in src.iter().zip(&self.cols) {
                dst[c] = *v;
            }
        }
    }
}
