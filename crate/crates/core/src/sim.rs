//! Ground-truth objects and the low-resolution image stack they produce.
//!
//! Each LED sees the object spectrum through a tile-sized window centred at
//! the rounded illumination wavevector, multiplied by the pupil. The field
//! scale `lr / hr` makes a unit-amplitude flat object image to intensity 1
//! under on-axis illumination.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error_model::{ErrorModelSpec, Noise, Quantization};
use crate::fft::{Dft2, Direction};
use crate::geometry::{pupil_mask, wavevector_for_led, Led, SubAperture, SystemGeometry};
use crate::image::{ComplexImage, RealImage};
use crate::interp::{resample, Interpolation};
use crate::{Error, Result};

/// High-resolution complex object `amplitude * exp(i * phase)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    amplitude: RealImage,
    phase: RealImage,
}

impl GroundTruth {
    pub fn new(amplitude: RealImage, phase: RealImage) -> Result<Self> {
        amplitude.check_same_shape(&phase)?;
        if amplitude.as_slice().iter().any(|&a| a < 0.0) {
            return Err(Error::InvalidTruth("amplitude must be non-negative"));
        }
        Ok(Self { amplitude, phase })
    }

    pub fn amplitude(&self) -> &RealImage {
        &self.amplitude
    }

    pub fn phase(&self) -> &RealImage {
        &self.phase
    }

    pub fn intensity(&self) -> RealImage {
        self.amplitude.map_raw(|a| a * a)
    }

    pub fn field(&self) -> ComplexImage {
        self.amplitude
            .zip_map(&self.phase, Complex64::from_polar)
            .expect("finite polar field")
    }

    pub fn shape(&self) -> (usize, usize) {
        self.amplitude.shape()
    }

    pub fn crop(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Result<Self> {
        Ok(Self {
            amplitude: self.amplitude.crop(row0, col0, rows, cols)?,
            phase: self.phase.crop(row0, col0, rows, cols)?,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub enum TruthKind<'a> {
    /// Unit amplitude, zero phase.
    Flat,
    /// Unit amplitude; the map is used as the phase in radians.
    PhaseOnly(&'a RealImage),
    /// Amplitude source normalised to `[floor, 1]`; phase source scaled to the range.
    TwoImage {
        amplitude: &'a RealImage,
        phase: &'a RealImage,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthOptions {
    pub amplitude_floor: f64,
    pub phase_range: (f64, f64),
    pub interpolation: Interpolation,
}

impl Default for TruthOptions {
    fn default() -> Self {
        Self {
            amplitude_floor: 0.05,
            phase_range: (0.0, FRAC_PI_2),
            interpolation: Interpolation::Bicubic,
        }
    }
}

pub fn make_ground_truth(kind: TruthKind<'_>, hr_size: usize, opts: &TruthOptions) -> Result<GroundTruth> {
    if hr_size < 2 {
        return Err(Error::DegenerateAxis {
            rows: hr_size,
            cols: hr_size,
        });
    }
    let fit = |img: &RealImage| -> Result<RealImage> {
        if img.shape() == (hr_size, hr_size) {
            Ok(img.clone())
        } else {
            resample(img, hr_size, hr_size, opts.interpolation)
        }
    };
    let ones = RealImage::filled(hr_size, hr_size, 1.0)?;
    match kind {
        TruthKind::Flat => GroundTruth::new(ones, RealImage::zeros(hr_size, hr_size)?),
        TruthKind::PhaseOnly(map) => GroundTruth::new(ones, fit(map)?),
        TruthKind::TwoImage { amplitude, phase } => {
            let eps = opts.amplitude_floor;
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::InvalidTruth("amplitude floor must lie in [0, 1]"));
            }
            let (lo, hi) = opts.phase_range;
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidTruth("phase range must be finite"));
            }
            let a = normalize(&fit(amplitude)?, eps, 1.0, 1.0);
            let p = normalize(&fit(phase)?, lo, hi, lo);
            GroundTruth::new(a, p)
        }
    }
}

/// Affine map of `[min, max]` onto `[lo, hi]`; a constant image maps to `flat`.
fn normalize(img: &RealImage, lo: f64, hi: f64, flat: f64) -> RealImage {
    let (min, max) = (img.min(), img.max());
    if max > min {
        img.map_raw(|v| lo + (hi - lo) * (v - min) / (max - min))
    } else {
        img.map_raw(|_| flat)
    }
}

/// Low-resolution intensity images, one per lit LED.
#[derive(Clone, Debug, PartialEq)]
pub struct LrStack {
    images: Vec<RealImage>,
    leds: Vec<Led>,
    geometry: SystemGeometry,
}

impl LrStack {
    pub fn new(images: Vec<RealImage>, leds: Vec<Led>, geometry: SystemGeometry) -> Result<Self> {
        geometry.validate()?;
        if images.is_empty() {
            return Err(Error::NoLeds);
        }
        if images.len() != leds.len() {
            return Err(Error::InvalidConfig {
                field: "leds",
                reason: alloc::format!("{} images but {} LEDs", images.len(), leds.len()),
            });
        }
        let n = geometry.lr_size;
        for img in &images {
            if img.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    left_rows: img.rows(),
                    left_cols: img.cols(),
                    right_rows: n,
                    right_cols: n,
                });
            }
        }
        for &l in &leds {
            geometry.check_led(l)?;
        }
        Ok(Self {
            images,
            leds,
            geometry,
        })
    }

    pub fn images(&self) -> &[RealImage] {
        &self.images
    }

    pub fn leds(&self) -> &[Led] {
        &self.leds
    }

    pub fn geometry(&self) -> &SystemGeometry {
        &self.geometry
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image_for(&self, led: Led) -> Option<&RealImage> {
        self.leds.iter().position(|&l| l == led).map(|i| &self.images[i])
    }

    /// Index of the brightfield image closest to normal incidence.
    pub fn on_axis_index(&self) -> Result<usize> {
        let cutoff = self.geometry.pupil_radius();
        let mut best: Option<(f64, usize)> = None;
        for (i, l) in self.leds.iter().enumerate() {
            let k = wavevector_for_led(&self.geometry, l.row, l.col)?.norm();
            if k <= cutoff && best.is_none_or(|(b, _)| k < b) {
                best = Some((k, i));
            }
        }
        best.map(|(_, i)| i).ok_or(Error::MissingOnAxis)
    }

    /// Same LEDs, every image cut to the `size x size` window at `(row0, col0)`.
    pub fn crop(&self, row0: usize, col0: usize, size: usize) -> Result<Self> {
        let images = self
            .images
            .iter()
            .map(|img| img.crop(row0, col0, size, size))
            .collect::<Result<Vec<_>>>()?;
        let mut geometry = self.geometry.clone();
        geometry.lr_size = size;
        Self::new(images, self.leds.clone(), geometry)
    }
}

/// Precomputed object spectrum and pupil; per-LED simulation is independent
/// and safe to run concurrently.
#[derive(Clone, Debug)]
pub struct Simulator {
    geometry: SystemGeometry,
    spectrum: ComplexImage,
    pupil: ComplexImage,
    err: ErrorModelSpec,
    dft: Dft2,
    hr: usize,
    scale: f64,
}

impl Simulator {
    pub fn new(truth: &GroundTruth, geom: &SystemGeometry, err: &ErrorModelSpec) -> Result<Self> {
        geom.validate()?;
        err.validate()?;
        let (rows, cols) = truth.shape();
        let lr = geom.lr_size;
        if rows != cols || rows % lr != 0 {
            return Err(Error::GridMismatch {
                hr_size: rows.max(cols),
                lr_size: lr,
            });
        }
        let hr = rows;
        let step = geom.spectral_step();
        let pupil = pupil_mask(geom, lr, step, &err.pupil)?;
        let mut data = truth.field().into_vec();
        Dft2::new(hr, hr).process(&mut data, Direction::Forward);
        Ok(Self {
            geometry: geom.clone(),
            spectrum: ComplexImage::from_raw(hr, hr, data),
            pupil,
            err: err.clone(),
            dft: Dft2::new(lr, lr),
            hr,
            scale: lr as f64 / hr as f64,
        })
    }

    /// Unitary spectrum of the ground-truth field (unshifted).
    pub fn spectrum(&self) -> &ComplexImage {
        &self.spectrum
    }

    pub fn pupil(&self) -> &ComplexImage {
        &self.pupil
    }

    /// Noise for LED `(row, col)` comes from its own ChaCha stream, so results
    /// do not depend on the order LEDs are simulated in.
    pub fn simulate_led(&self, led: Led, seed: u64) -> Result<RealImage> {
        let g = &self.geometry;
        let k = wavevector_for_led(g, led.row, led.col)? + self.err.offset(led);
        let shift = k.to_pixels(g.spectral_step());
        let lr = g.lr_size;
        let window = SubAperture::new(shift, lr, self.hr).ok_or(Error::SubSpectrumOutOfGrid {
            row: led.row,
            col: led.col,
            shift_row: shift.0,
            shift_col: shift.1,
            hr_size: self.hr,
        })?;
        let mut buf = alloc::vec![Complex64::default(); lr * lr];
        window.gather(self.spectrum.as_slice(), self.hr, &mut buf);
        for (z, p) in buf.iter_mut().zip(self.pupil.as_slice()) {
            *z *= p;
        }
        self.dft.process(&mut buf, Direction::Inverse);
        let w = self.err.weight(led);
        let s2 = self.scale * self.scale;
        let mut intensity: Vec<f64> = buf.iter().map(|z| z.norm_sqr() * s2 * w).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((led.row * g.led_cols + led.col) as u64);
        apply_noise(&mut intensity, self.err.noise, &mut rng);
        if let Some(q) = self.err.quantization {
            quantize(&mut intensity, q);
        }
        RealImage::new(lr, lr, intensity)
    }
}

fn apply_noise(values: &mut [f64], noise: Noise, rng: &mut ChaCha8Rng) {
    match noise {
        Noise::None => {}
        Noise::Gaussian { sigma } => {
            if sigma == 0.0 {
                return;
            }
            let dist = Normal::new(0.0, sigma).expect("validated sigma");
            for v in values {
                *v = (*v + dist.sample(rng)).max(0.0);
            }
        }
        Noise::Poisson { photon_scale } => {
            for v in values {
                let lambda = *v * photon_scale;
                *v = if lambda > 0.0 {
                    let counts: f64 = Poisson::new(lambda).expect("positive rate").sample(rng);
                    counts / photon_scale
                } else {
                    0.0
                };
            }
        }
    }
}

/// Uniform quantizer with `2^bits - 1` steps over `[0, full_scale]`.
pub fn quantize(values: &mut [f64], q: Quantization) {
    let levels = (Float::powi(2.0, q.bits as i32)) - 1.0;
    for v in values {
        let t = (*v / q.full_scale).clamp(0.0, 1.0);
        *v = Float::round(t * levels) / levels * q.full_scale;
    }
}

/// Simulates every lit LED in order.
pub fn simulate_stack(
    truth: &GroundTruth,
    geom: &SystemGeometry,
    lit: &[Led],
    err: &ErrorModelSpec,
    seed: u64,
) -> Result<LrStack> {
    if lit.is_empty() {
        return Err(Error::NoLeds);
    }
    let sim = Simulator::new(truth, geom, err)?;
    let images = lit
        .iter()
        .map(|&l| sim.simulate_led(l, seed))
        .collect::<Result<Vec<_>>>()?;
    LrStack::new(images, lit.to_vec(), geom.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LitWindow;

    fn small_geom() -> SystemGeometry {
        SystemGeometry {
            lr_size: 32,
            ..SystemGeometry::example_11x11()
        }
    }

    #[test]
    fn flat_object_on_axis_gives_unit_intensity() {
        let g = small_geom();
        let truth = make_ground_truth(TruthKind::Flat, 96, &TruthOptions::default()).unwrap();
        let stack =
            simulate_stack(&truth, &g, &[Led::new(5, 5)], &ErrorModelSpec::default(), 0).unwrap();
        for v in stack.images()[0].as_slice() {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn darkfield_sees_nothing_of_flat_object() {
        let g = small_geom();
        let truth = make_ground_truth(TruthKind::Flat, 96, &TruthOptions::default()).unwrap();
        let img = Simulator::new(&truth, &g, &ErrorModelSpec::default())
            .unwrap()
            .simulate_led(Led::new(5, 9), 0)
            .unwrap();
        assert!(img.max() < 1e-20);
    }

    #[test]
    fn weights_scale_exactly() {
        let g = small_geom();
        let amp = RealImage::from_fn(96, 96, |r, c| 0.5 + 0.3 * Float::sin((r * c) as f64 * 0.01)).unwrap();
        let ph = RealImage::from_fn(96, 96, |r, _| r as f64 * 0.01).unwrap();
        let truth = GroundTruth::new(amp, ph).unwrap();
        let plain = Simulator::new(&truth, &g, &ErrorModelSpec::default()).unwrap();
        let mut err = ErrorModelSpec::default();
        err.weights.insert(Led::new(4, 5), 2.0);
        let weighted = Simulator::new(&truth, &g, &err).unwrap();
        let a = plain.simulate_led(Led::new(4, 5), 1).unwrap();
        let b = weighted.simulate_led(Led::new(4, 5), 1).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn out_of_grid_is_an_error() {
        let g = small_geom();
        let truth = make_ground_truth(TruthKind::Flat, 32, &TruthOptions::default()).unwrap();
        let sim = Simulator::new(&truth, &g, &ErrorModelSpec::default()).unwrap();
        assert!(matches!(
            sim.simulate_led(Led::new(0, 0), 0),
            Err(Error::SubSpectrumOutOfGrid { .. })
        ));
        let bad = make_ground_truth(TruthKind::Flat, 40, &TruthOptions::default()).unwrap();
        assert!(matches!(
            Simulator::new(&bad, &g, &ErrorModelSpec::default()),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn ground_truth_kinds() {
        let o = TruthOptions::default();
        let flat = make_ground_truth(TruthKind::Flat, 8, &o).unwrap();
        assert!(flat.amplitude().as_slice().iter().all(|&a| a == 1.0));
        assert!(flat.phase().as_slice().iter().all(|&p| p == 0.0));

        let map = RealImage::from_fn(8, 8, |r, c| (r + c) as f64 * 0.1).unwrap();
        let po = make_ground_truth(TruthKind::PhaseOnly(&map), 8, &o).unwrap();
        assert_eq!(po.phase(), &map);

        let src = RealImage::from_fn(4, 4, |r, c| (r * 4 + c) as f64).unwrap();
        let two = make_ground_truth(
            TruthKind::TwoImage {
                amplitude: &src,
                phase: &src,
            },
            8,
            &o,
        )
        .unwrap();
        assert!((two.amplitude().min() - 0.05).abs() < 1e-12);
        assert!((two.amplitude().max() - 1.0).abs() < 1e-12);
        assert!(two.phase().min().abs() < 1e-12);
        assert!((two.phase().max() - FRAC_PI_2).abs() < 1e-12);
        // Shared structure: phase is an affine image of amplitude.
        let a = two.amplitude().as_slice();
        let p = two.phase().as_slice();
        for i in 0..64 {
            let want = (a[i] - 0.05) / 0.95 * FRAC_PI_2;
            assert!((p[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_amplitude_rejected() {
        let a = RealImage::filled(2, 2, -1.0).unwrap();
        let p = RealImage::zeros(2, 2).unwrap();
        assert!(GroundTruth::new(a, p).is_err());
    }

    #[test]
    fn stack_bookkeeping() {
        let g = small_geom();
        let truth = make_ground_truth(TruthKind::Flat, 96, &TruthOptions::default()).unwrap();
        let lit = LitWindow { rows: 3, cols: 3 }.leds(&g).unwrap();
        let stack = simulate_stack(&truth, &g, &lit, &ErrorModelSpec::default(), 0).unwrap();
        assert_eq!(stack.len(), 9);
        assert_eq!(stack.leds()[stack.on_axis_index().unwrap()], Led::new(5, 5));
        let c = stack.crop(8, 8, 16).unwrap();
        assert_eq!(c.geometry().lr_size, 16);
        assert_eq!(c.images()[0].shape(), (16, 16));

        let dark = simulate_stack(&truth, &g, &[Led::new(5, 9)], &ErrorModelSpec::default(), 0).unwrap();
        assert!(matches!(dark.on_axis_index(), Err(Error::MissingOnAxis)));
        assert!(simulate_stack(&truth, &g, &[], &ErrorModelSpec::default(), 0).is_err());
    }

    #[test]
    fn quantizer_levels() {
        let mut v = [0.0, 0.26, 0.5, 1.2, -0.1];
        quantize(
            &mut v,
            Quantization {
                bits: 2,
                full_scale: 1.0,
            },
        );
        assert_eq!(v, [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 0.0]);
    }
}
