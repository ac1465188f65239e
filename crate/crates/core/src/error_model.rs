//! Per-LED system errors injected during simulation: intensity weights,
//! wavevector offsets, detector noise and pupil aberrations.

use alloc::collections::BTreeMap;
use alloc::format;

use crate::geometry::{Led, PupilSpec, Wavevector};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Noise {
    #[default]
    None,
    /// Additive zero-mean Gaussian, standard deviation in intensity units.
    Gaussian { sigma: f64 },
    /// Shot noise on `intensity * photon_scale` counts, rescaled back.
    Poisson { photon_scale: f64 },
}

/// Uniform quantizer applied after noise: `bits` levels over `[0, full_scale]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantization {
    pub bits: u32,
    pub full_scale: f64,
}

/// Missing entries mean weight 1 and zero offset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorModelSpec {
    pub weights: BTreeMap<Led, f64>,
    pub wavevector_offsets: BTreeMap<Led, Wavevector>,
    pub noise: Noise,
    pub pupil: PupilSpec,
    pub quantization: Option<Quantization>,
}

impl ErrorModelSpec {
    pub fn weight(&self, led: Led) -> f64 {
        self.weights.get(&led).copied().unwrap_or(1.0)
    }

    pub fn offset(&self, led: Led) -> Wavevector {
        self.wavevector_offsets.get(&led).copied().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        for (led, &w) in &self.weights {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidConfig {
                    field: "weights",
                    reason: format!("LED ({}, {}) has weight {w}; must be positive", led.row, led.col),
                });
            }
        }
        for (led, k) in &self.wavevector_offsets {
            if !k.is_finite() {
                return Err(Error::InvalidConfig {
                    field: "wavevector_offsets",
                    reason: format!("LED ({}, {}) has a non-finite offset", led.row, led.col),
                });
            }
        }
        match self.noise {
            Noise::None => {}
            Noise::Gaussian { sigma } if sigma.is_finite() && sigma >= 0.0 => {}
            Noise::Poisson { photon_scale } if photon_scale.is_finite() && photon_scale > 0.0 => {}
            _ => {
                return Err(Error::InvalidConfig {
                    field: "noise",
                    reason: format!("bad noise parameters {:?}", self.noise),
                })
            }
        }
        if let Some(q) = self.quantization {
            if q.bits == 0 || q.bits > 32 || !(q.full_scale.is_finite() && q.full_scale > 0.0) {
                return Err(Error::InvalidConfig {
                    field: "quantization",
                    reason: format!("bits must be 1..=32 and full_scale positive, got {q:?}"),
                });
            }
        }
        Ok(())
    }
}
