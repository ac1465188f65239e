//! Iterative FPM recovery with a selectable spectral backend.
//!
//! Each sweep visits every LED once. For LED `i` the tile-sized window of the
//! object spectrum at the LED's spectral shift is multiplied by the pupil and
//! inverse transformed to the exit wave `psi`. The modelled amplitude is
//! replaced by the measured one, the wave is transformed back, and the window
//! and (optionally) the pupil are corrected with a damped Gauss-Newton step:
//!
//! ```text
//! O += |P| conj(P) (Psi' - Psi) / (max|P| (|P|^2 + d max|P|^2))
//! P += |O| conj(O) (Psi' - Psi) / (max|O| (|O|^2 + d max|O|^2))
//! ```
//!
//! with `d = gn_regularizer`. For a binary pupil this is `(Psi' - Psi) / (1 + d)`
//! on the pupil support.
//!
//! Backends:
//! - `Fft`: plain unitary DFTs throughout.
//! - `Dct`: measurements and object are evenly extended to twice the size in
//!   each direction; the whole recovery runs on that grid (half the spectral
//!   step, doubled shifts) and rendering keeps the top-left quarter.
//! - `Pft`: the initial guess is analysed with the periodic-plus-smooth
//!   transform. With [`PftMode::Synthesis`] the sweep uses plain DFTs and the
//!   final spectrum is completed outside the measured LED coverage by the
//!   spectrum of the smooth component of the estimate, so the recovered image
//!   carries its own aperiodic boundary instead of a band-truncated cross.
//!   [`PftMode::ExitWave`] instead analyses every amplitude-replaced exit wave
//!   with the periodic-plus-smooth transform.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Uniform};

use crate::fft::{Dft2, Direction};
use crate::geometry::{
    order_leds, pupil_mask, signed_frequency, synthetic_aperture_radius, upsampling_factor,
    wavevector_for_led, Led, LedOrder, PupilSpec, SubAperture, SystemGeometry,
};
use crate::image::{ComplexImage, RealImage};
use crate::interp::{upsample, Interpolation};
use crate::sim::LrStack;
use crate::spectral::{crop_quarter, symmetric_quadruple, PftPlan};
use crate::{Error, Result};

type C = Complex64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Backend {
    #[default]
    Fft,
    Dct,
    Pft,
}

impl Backend {
    /// Grid extension factor per axis.
    pub fn extension(self) -> usize {
        match self {
            Backend::Dct => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitialGuess {
    Bilinear,
    Bicubic,
    #[default]
    Ones,
    /// Uniform `[0, 1)` amplitude, zero phase, from `ReconConfig::seed`.
    Random,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Updater {
    #[default]
    GaussNewton,
    /// PIE-style step `conj(P) (Psi' - Psi) / max|P|^2`.
    AlternatingProjection,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PftMode {
    #[default]
    Synthesis,
    ExitWave,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconConfig {
    pub backend: Backend,
    pub initial_guess: InitialGuess,
    pub iterations: usize,
    /// `None` picks [`upsampling_factor`].
    pub upsampling: Option<usize>,
    pub bandpass: bool,
    pub led_order: LedOrder,
    /// Damping relative to the peak of `|P|^2` (or `|O|^2` for the pupil step).
    pub gn_regularizer: f64,
    pub updater: Updater,
    pub pupil_recovery: bool,
    /// Starting pupil; ideal by default.
    pub pupil: PupilSpec,
    pub pft_mode: PftMode,
    /// Replace the measured amplitudes by the periodic component of each before iterating.
    pub pft_measurements: bool,
    pub seed: u64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Fft,
            initial_guess: InitialGuess::Ones,
            iterations: 30,
            upsampling: None,
            bandpass: false,
            led_order: LedOrder::CenterOut,
            gn_regularizer: 1e-3,
            updater: Updater::GaussNewton,
            pupil_recovery: false,
            pupil: PupilSpec::default(),
            pft_mode: PftMode::Synthesis,
            pft_measurements: false,
            seed: 0,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(Error::InvalidConfig {
                field,
                reason: reason.into(),
            })
        };
        if self.iterations == 0 {
            return bad("iterations", "must be at least 1");
        }
        if matches!(self.upsampling, Some(s) if s < 2) {
            return bad("upsampling", "must be at least 2");
        }
        if !(self.gn_regularizer.is_finite() && self.gn_regularizer > 0.0) {
            return bad("gn_regularizer", "must be a small positive number");
        }
        Ok(())
    }
}

/// Recovered object spectrum and pupil.
///
/// For the `Dct` backend both live on the evenly extended grid, so the
/// spectrum is `2 s m` on a side instead of `s m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconState {
    pub hr_spectrum: ComplexImage,
    pub pupil: ComplexImage,
    pub iteration: usize,
    /// Data-fidelity residual `sum_i || sqrt(I_i) - |psi_i| ||^2`, accumulated
    /// during each sweep before each LED's update.
    pub residuals: Vec<f64>,
    pub backend: Backend,
    pub upsampling: usize,
}

impl ReconState {
    /// Recovered complex field on the high-resolution tile grid.
    pub fn field(&self) -> ComplexImage {
        let (h, w) = self.hr_spectrum.shape();
        let mut data = self.hr_spectrum.as_slice().to_vec();
        Dft2::new(h, w).process(&mut data, Direction::Inverse);
        let full = ComplexImage::from_raw(h, w, data);
        match self.backend {
            Backend::Dct => crop_quarter(&full).expect("extended grid is even"),
            _ => full,
        }
    }

    /// Spectrum used for display and artifact analysis: the DFT of the
    /// rendered field, or its periodic-plus-smooth transform for `Pft`.
    pub fn analysis_spectrum(&self) -> ComplexImage {
        let f = self.field();
        match self.backend {
            Backend::Pft => crate::spectral::pft_forward(&f).expect("tile is at least 2x2"),
            _ => crate::fft::dft2(&f, Direction::Forward),
        }
    }
}

/// Amplitude and phase (in `(-pi, pi]`) of the recovered field.
pub fn render(state: &ReconState) -> (RealImage, RealImage) {
    let f = state.field();
    (f.abs(), f.arg())
}

/// Initial object spectrum on an `hr_size` grid (doubled for `Dct`).
pub fn initial_guess(
    stack: &LrStack,
    strategy: InitialGuess,
    hr_size: usize,
    backend: Backend,
    seed: u64,
) -> Result<ComplexImage> {
    let lr = stack.geometry().lr_size;
    let needs_on_axis = matches!(strategy, InitialGuess::Bilinear | InitialGuess::Bicubic);
    let on_axis = stack.on_axis_index();
    if needs_on_axis {
        on_axis.clone()?;
    }
    if hr_size % lr != 0 || hr_size < lr {
        return Err(Error::GridMismatch { hr_size, lr_size: lr });
    }
    let amplitude = match strategy {
        InitialGuess::Bilinear | InitialGuess::Bicubic => {
            let kind = if strategy == InitialGuess::Bilinear {
                Interpolation::Bilinear
            } else {
                Interpolation::Bicubic
            };
            let amp = stack.images()[on_axis?].map_raw(|v| Float::sqrt(v.max(0.0)));
            upsample(&amp, hr_size / lr, kind)?
        }
        InitialGuess::Ones => RealImage::filled(hr_size, hr_size, 1.0)?,
        InitialGuess::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dist = Uniform::new(0.0, 1.0).expect("valid range");
            RealImage::from_fn(hr_size, hr_size, |_, _| dist.sample(&mut rng))?
        }
    };
    let field = amplitude.to_complex();
    Ok(match backend {
        Backend::Fft => crate::fft::dft2(&field, Direction::Forward),
        Backend::Pft => crate::spectral::pft_forward(&field)?,
        Backend::Dct => crate::fft::dft2(&symmetric_quadruple(&field), Direction::Forward),
    })
}

/// Zeroes everything outside the synthetic-aperture disk of the lit LEDs.
pub fn bandpass_filter(spectrum: &ComplexImage, geom: &SystemGeometry, lit: &[Led]) -> Result<ComplexImage> {
    bandpass_filter_with_step(spectrum, geom, lit, geom.spectral_step())
}

/// As [`bandpass_filter`] for a grid with an explicit spectral step.
pub fn bandpass_filter_with_step(
    spectrum: &ComplexImage,
    geom: &SystemGeometry,
    lit: &[Led],
    spectral_step: f64,
) -> Result<ComplexImage> {
    let r = synthetic_aperture_radius(geom, lit)? / spectral_step;
    let (m, n) = spectrum.shape();
    let mut out = spectrum.clone();
    let data = out.as_mut_slice();
    for y in 0..m {
        let fy = signed_frequency(y, m) as f64;
        for x in 0..n {
            let fx = signed_frequency(x, n) as f64;
            if fx * fx + fy * fy > r * r {
                data[y * n + x] = C::default();
            }
        }
    }
    Ok(out)
}

struct LedPlan {
    led: Led,
    window: SubAperture,
    /// Measured amplitude used by the residual.
    measured: Vec<f64>,
    /// Amplitude used for replacement.
    target: Vec<f64>,
}

pub fn reconstruct(stack: &LrStack, geom: &SystemGeometry, cfg: &ReconConfig) -> Result<ReconState> {
    cfg.validate()?;
    geom.validate()?;
    let lr = geom.lr_size;
    if stack.geometry().lr_size != lr {
        return Err(Error::DimensionMismatch {
            left_rows: stack.geometry().lr_size,
            left_cols: stack.geometry().lr_size,
            right_rows: lr,
            right_cols: lr,
        });
    }
    let ext = cfg.backend.extension();
    let s = cfg.upsampling.unwrap_or_else(|| upsampling_factor(geom, stack.leds()));
    let m = ext * lr;
    let hr = s * m;
    let step = geom.spectral_step() / ext as f64;

    let mut pupil = pupil_mask(geom, m, step, &cfg.pupil)?;
    let support: Vec<bool> = pupil.as_slice().iter().map(|z| z.norm_sqr() > 0.0).collect();
    let pft = PftPlan::new(m, m)?;
    let dft = pft.dft().clone();
    let hr_dft = Dft2::new(hr, hr);

    let order = order_leds(geom, stack.leds(), cfg.led_order)?;
    let mut plans = Vec::with_capacity(order.len());
    for &led in &order {
        let idx = stack.leds().iter().position(|&l| l == led).expect("led from stack");
        let k = wavevector_for_led(geom, led.row, led.col)?;
        let (sr, sc) = k.to_pixels(geom.spectral_step());
        let shift = (sr * ext as isize, sc * ext as isize);
        let window = SubAperture::new(shift, m, hr).ok_or(Error::SubSpectrumOutOfGrid {
            row: led.row,
            col: led.col,
            shift_row: shift.0,
            shift_col: shift.1,
            hr_size: hr,
        })?;
        let img = &stack.images()[idx];
        let img = if ext == 2 { symmetric_quadruple(img) } else { img.clone() };
        let measured: Vec<f64> = img.as_slice().iter().map(|v| Float::sqrt(v.max(0.0))).collect();
        let target = if cfg.pft_measurements {
            let src: Vec<C> = measured.iter().map(|&a| C::new(a, 0.0)).collect();
            let mut e = vec![C::default(); src.len()];
            pft.smooth_component(&src, &mut e);
            measured.iter().zip(&e).map(|(a, e)| (a - e.re).max(0.0)).collect()
        } else {
            measured.clone()
        };
        plans.push(LedPlan {
            led,
            window,
            measured,
            target,
        });
    }

    let guess = initial_guess(stack, cfg.initial_guess, s * lr, cfg.backend, cfg.seed)?;
    let mut spectrum = guess.into_vec();
    // Unitary transforms on grids of different size: scale the window field by m / hr.
    let scale = m as f64 / hr as f64;
    let inv_scale = 1.0 / scale;

    let n = m * m;
    let mut sub = vec![C::default(); n];
    let mut psi = vec![C::default(); n];
    let mut psi_new = vec![C::default(); n];
    let mut residuals = Vec::with_capacity(cfg.iterations);

    for iteration in 0..cfg.iterations {
        let mut residual = 0.0;
        for plan in &plans {
            plan.window.gather(&spectrum, hr, &mut sub);
            for ((p, o), w) in psi.iter_mut().zip(&sub).zip(pupil.as_slice()) {
                *p = o * w;
            }
            // psi holds Psi; keep a copy of the spatial wave in psi_new.
            psi_new.copy_from_slice(&psi);
            dft.process(&mut psi_new, Direction::Inverse);
            let mut peak: f64 = 0.0;
            for z in psi_new.iter_mut() {
                *z *= scale;
                peak = peak.max(z.norm());
            }
            let floor = 1e-12 * peak;
            for ((z, &a), &t) in psi_new.iter_mut().zip(&plan.measured).zip(&plan.target) {
                let mag = z.norm();
                residual += (a - mag) * (a - mag);
                *z = if mag > floor && mag > 0.0 {
                    *z * (t / mag)
                } else {
                    C::new(t, 0.0)
                };
            }
            match (cfg.backend, cfg.pft_mode) {
                (Backend::Pft, PftMode::ExitWave) => {
                    let src = psi_new.clone();
                    pft.forward(&src, &mut psi_new);
                }
                _ => dft.process(&mut psi_new, Direction::Forward),
            }
            psi_new.iter_mut().for_each(|z| *z *= inv_scale);
            // psi_new: Psi'. Turn it into the correction Psi' - Psi.
            for (d, p) in psi_new.iter_mut().zip(&psi) {
                *d -= p;
            }

            let sub_old = if cfg.pupil_recovery { Some(sub.clone()) } else { None };
            update_object(&mut sub, pupil.as_slice(), &psi_new, cfg);
            if sub.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::Numerical {
                    iteration: iteration + 1,
                    row: plan.led.row,
                    col: plan.led.col,
                });
            }
            plan.window.scatter(&sub, &mut spectrum, hr);
            if let Some(o) = sub_old {
                update_pupil(pupil.as_mut_slice(), &o, &psi_new, &support, cfg.gn_regularizer);
                if pupil.as_slice().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(Error::Numerical {
                        iteration: iteration + 1,
                        row: plan.led.row,
                        col: plan.led.col,
                    });
                }
            }
        }
        if !residual.is_finite() {
            let led = plans.last().map(|p| p.led).unwrap_or(Led::new(0, 0));
            return Err(Error::Numerical {
                iteration: iteration + 1,
                row: led.row,
                col: led.col,
            });
        }
        residuals.push(residual);
    }

    let mut spectrum = ComplexImage::new(hr, hr, spectrum)?;
    if cfg.bandpass {
        spectrum = bandpass_filter_with_step(&spectrum, geom, stack.leds(), step)?;
    }
    if cfg.backend == Backend::Pft && cfg.pft_mode == PftMode::Synthesis {
        let mut coverage = vec![false; hr * hr];
        for plan in &plans {
            let mut local = vec![false; n];
            plan.window.gather(&coverage, hr, &mut local);
            for (c, &s) in local.iter_mut().zip(&support) {
                *c |= s;
            }
            plan.window.scatter(&local, &mut coverage, hr);
        }
        let plan = PftPlan::new(hr, hr)?;
        let data = complete_spectrum(spectrum.as_slice(), &coverage, &plan, &hr_dft);
        spectrum = ComplexImage::new(hr, hr, data)?;
    }

    Ok(ReconState {
        hr_spectrum: spectrum,
        pupil,
        iteration: cfg.iterations,
        residuals,
        backend: cfg.backend,
        upsampling: s,
    })
}

fn update_object(sub: &mut [C], pupil: &[C], diff: &[C], cfg: &ReconConfig) {
    let pmax2 = pupil.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    if pmax2 == 0.0 {
        return;
    }
    match cfg.updater {
        Updater::GaussNewton => {
            let pmax = Float::sqrt(pmax2);
            let delta = cfg.gn_regularizer * pmax2;
            for ((o, p), d) in sub.iter_mut().zip(pupil).zip(diff) {
                let a2 = p.norm_sqr();
                if a2 > 0.0 {
                    *o += p.conj() * d * (Float::sqrt(a2) / (pmax * (a2 + delta)));
                }
            }
        }
        Updater::AlternatingProjection => {
            for ((o, p), d) in sub.iter_mut().zip(pupil).zip(diff) {
                *o += p.conj() * d / pmax2;
            }
        }
    }
}

fn update_pupil(pupil: &mut [C], sub: &[C], diff: &[C], support: &[bool], reg: f64) {
    let omax2 = sub.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    if omax2 == 0.0 {
        return;
    }
    let omax = Float::sqrt(omax2);
    let delta = reg * omax2;
    for (((p, o), d), &inside) in pupil.iter_mut().zip(sub).zip(diff).zip(support) {
        if inside {
            let a2 = o.norm_sqr();
            *p += o.conj() * d * (Float::sqrt(a2) / (omax * (a2 + delta)));
        } else {
            *p = C::default();
        }
    }
}

/// Keeps `spectrum` on `coverage` and fills the rest with the spectrum of the
/// smooth component of the current estimate, iterated to a fixed point.
fn complete_spectrum(spectrum: &[C], coverage: &[bool], plan: &PftPlan, dft: &Dft2) -> Vec<C> {
    const MAX_ITER: usize = 100;
    const TOL: f64 = 1e-10;
    let known: Vec<C> = spectrum
        .iter()
        .zip(coverage)
        .map(|(&z, &c)| if c { z } else { C::default() })
        .collect();
    let norm = Float::sqrt(known.iter().map(|z| z.norm_sqr()).sum::<f64>());
    let mut current = known.clone();
    let mut field = known.clone();
    let mut smooth = vec![C::default(); known.len()];
    for _ in 0..MAX_ITER {
        field.copy_from_slice(&current);
        dft.process(&mut field, Direction::Inverse);
        plan.smooth_spectrum(&field, &mut smooth);
        let mut change = 0.0;
        for (((cur, k), e), &c) in current.iter_mut().zip(&known).zip(&smooth).zip(coverage) {
            let next = if c { *k } else { *e };
            change += (next - *cur).norm_sqr();
            *cur = next;
        }
        if Float::sqrt(change) <= TOL * norm {
            break;
        }
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_model::ErrorModelSpec;
    use crate::geometry::LitWindow;
    use crate::sim::{make_ground_truth, simulate_stack, TruthKind, TruthOptions};

    fn geom(lr: usize) -> SystemGeometry {
        SystemGeometry {
            lr_size: lr,
            ..SystemGeometry::example_11x11()
        }
    }

    #[test]
    fn config_validation() {
        let mut c = ReconConfig::default();
        assert!(c.validate().is_ok());
        c.iterations = 0;
        assert!(c.validate().is_err());
        let c = ReconConfig {
            upsampling: Some(1),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ReconConfig {
            gn_regularizer: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_led_flat_object_fixed_point() {
        let g = geom(16);
        let truth = make_ground_truth(TruthKind::Flat, 32, &TruthOptions::default()).unwrap();
        let stack =
            simulate_stack(&truth, &g, &[Led::new(5, 5)], &ErrorModelSpec::default(), 0).unwrap();
        for backend in [Backend::Fft, Backend::Pft, Backend::Dct] {
            let cfg = ReconConfig {
                backend,
                iterations: 5,
                initial_guess: InitialGuess::Random,
                seed: 3,
                ..Default::default()
            };
            let state = reconstruct(&stack, &g, &cfg).unwrap();
            assert_eq!(state.residuals.len(), 5);
            let last = *state.residuals.last().unwrap();
            assert!(last < 1e-6, "{backend:?}: {last}");
        }
    }

    #[test]
    fn ones_guess_is_dc_only() {
        let g = geom(16);
        let truth = make_ground_truth(TruthKind::Flat, 32, &TruthOptions::default()).unwrap();
        let stack =
            simulate_stack(&truth, &g, &[Led::new(5, 5)], &ErrorModelSpec::default(), 0).unwrap();
        let spec = initial_guess(&stack, InitialGuess::Ones, 32, Backend::Fft, 0).unwrap();
        let dc = spec[(0, 0)].norm_sqr();
        assert!(dc / spec.sum_sq() > 0.999);
        // Flat on-axis image: the interpolated guesses are the ones guess.
        let bl = initial_guess(&stack, InitialGuess::Bilinear, 32, Backend::Fft, 0).unwrap();
        for (a, b) in bl.as_slice().iter().zip(spec.as_slice()) {
            assert!((a - b).norm() < 1e-9);
        }
        let r1 = initial_guess(&stack, InitialGuess::Random, 32, Backend::Pft, 9).unwrap();
        let r2 = initial_guess(&stack, InitialGuess::Random, 32, Backend::Pft, 9).unwrap();
        assert_eq!(r1, r2);
        let d = initial_guess(&stack, InitialGuess::Ones, 32, Backend::Dct, 0).unwrap();
        assert_eq!(d.shape(), (64, 64));
    }

    #[test]
    fn interpolated_guess_needs_on_axis_image() {
        let g = geom(16);
        let truth = make_ground_truth(TruthKind::Flat, 48, &TruthOptions::default()).unwrap();
        let stack =
            simulate_stack(&truth, &g, &[Led::new(5, 8)], &ErrorModelSpec::default(), 0).unwrap();
        assert_eq!(
            initial_guess(&stack, InitialGuess::Bicubic, 48, Backend::Fft, 0),
            Err(Error::MissingOnAxis)
        );
    }

    #[test]
    fn render_dc_only() {
        let mut spec = ComplexImage::zeros(8, 8).unwrap();
        spec.as_mut_slice()[0] = C::new(16.0, 0.0);
        let state = ReconState {
            hr_spectrum: spec,
            pupil: ComplexImage::zeros(4, 4).unwrap(),
            iteration: 0,
            residuals: vec![],
            backend: Backend::Fft,
            upsampling: 2,
        };
        let (a, p) = render(&state);
        for (x, y) in a.as_slice().iter().zip(p.as_slice()) {
            assert!((x - 2.0).abs() < 1e-12);
            assert_eq!(*y, 0.0);
        }
    }

    #[test]
    fn bandpass_counts_disk() {
        let g = geom(32);
        let lit = LitWindow { rows: 3, cols: 3 }.leds(&g).unwrap();
        let ones = ComplexImage::filled(96, 96, C::new(1.0, 0.0)).unwrap();
        let f = bandpass_filter(&ones, &g, &lit).unwrap();
        let r = synthetic_aperture_radius(&g, &lit).unwrap() / g.spectral_step();
        let mut count = 0usize;
        for y in 0..96 {
            for x in 0..96 {
                let fy = signed_frequency(y, 96) as f64;
                let fx = signed_frequency(x, 96) as f64;
                count += (fx * fx + fy * fy <= r * r) as usize;
            }
        }
        let kept = f.as_slice().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(kept, count);
        let again = bandpass_filter(&f, &g, &lit).unwrap();
        assert_eq!(again, f);
    }
}
