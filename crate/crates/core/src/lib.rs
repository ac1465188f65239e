//! Fourier ptychographic microscopy (FPM) simulation and reconstruction with
//! edge-effect-free spectral analysis.
//!
//! The plain discrete Fourier transform treats a finite image as one period of
//! an infinite tiling. When the image is not periodic, the wrap-around jump
//! leaks into a cross-shaped streak along the frequency axes. This crate offers
//! three spectral backends for FPM:
//!
//! - [`Backend::Fft`]: the unitary 2D DFT.
//! - [`Backend::Dct`]: even symmetric extension to `2M x 2N`, DFT, quarter crop.
//! - [`Backend::Pft`]: periodic-plus-smooth decomposition, `f = g + e`, where the
//!   smooth component `e` solves a discrete Poisson problem driven by the
//!   boundary mismatch of `f`.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI and
//! parallel drivers live in the companion `fpm` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error_model;
pub mod fft;
pub mod geometry;
pub mod image;
pub mod interp;
pub mod metrics;
pub mod recon;
pub mod scenes;
pub mod sim;
pub mod spectral;

mod error;

pub use error::{Error, Result};
pub use error_model::{ErrorModelSpec, Noise, Quantization};
pub use fft::{dft2, Dft2, Direction};
pub use geometry::{
    pupil_mask, upsampling_factor, wavevector_for_led, Led, LedOrder, LitWindow, PupilSpec,
    SystemGeometry, Wavevector,
};
pub use image::{ComplexImage, Image, RealImage};
pub use metrics::{
    axis_artifact_energy, background_phase_std, block_consistency, phase_align, rmse,
    MetricReport, Region,
};
pub use recon::{
    bandpass_filter, initial_guess, reconstruct, render, Backend, InitialGuess, PftMode,
    ReconConfig, ReconState, Updater,
};
pub use sim::{make_ground_truth, simulate_stack, GroundTruth, LrStack, Simulator, TruthKind};
pub use spectral::{
    boundary_image, crop_quarter, kernel_spectrum, periodic_smooth_decompose, pft_forward,
    symmetric_quadruple, BoundaryImage, Decomposition, KernelSpectrum,
};

pub use num_complex::Complex64;
