//! JSON run configuration and the stack manifest.
//!
//! Every optional field has a default, and the manifest written next to a
//! simulated stack repeats the whole configuration with defaults filled in.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use fpm_core::geometry::LitWindow;
use fpm_core::{ErrorModelSpec, Led, Noise, PupilSpec, Quantization, SystemGeometry, Wavevector};
use serde::{Deserialize, Serialize};

use crate::formats::read_image;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const PIXEL_FORMAT: &str = "pfm-f32-le";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub led_rows: usize,
    pub led_cols: usize,
    pub led_pitch: f64,
    pub led_to_sample: f64,
    pub wavelength: f64,
    pub objective_na: f64,
    pub camera_pixel: f64,
    pub magnification: f64,
    pub lr_size: usize,
}

impl From<&GeometryConfig> for SystemGeometry {
    fn from(g: &GeometryConfig) -> Self {
        SystemGeometry {
            led_rows: g.led_rows,
            led_cols: g.led_cols,
            led_pitch: g.led_pitch,
            led_to_sample: g.led_to_sample,
            wavelength: g.wavelength,
            objective_na: g.objective_na,
            camera_pixel: g.camera_pixel,
            magnification: g.magnification,
            lr_size: g.lr_size,
        }
    }
}

impl From<&SystemGeometry> for GeometryConfig {
    fn from(g: &SystemGeometry) -> Self {
        GeometryConfig {
            led_rows: g.led_rows,
            led_cols: g.led_cols,
            led_pitch: g.led_pitch,
            led_to_sample: g.led_to_sample,
            wavelength: g.wavelength,
            objective_na: g.objective_na,
            camera_pixel: g.camera_pixel,
            magnification: g.magnification,
            lr_size: g.lr_size,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LitConfig {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    #[default]
    None,
    Gaussian {
        sigma: f64,
    },
    Poisson {
        photon_scale: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedWeight {
    pub row: usize,
    pub col: usize,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedOffset {
    pub row: usize,
    pub col: usize,
    pub kx: f64,
    pub ky: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizationConfig {
    pub bits: u32,
    pub full_scale: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorModelConfig {
    pub weights: Vec<LedWeight>,
    pub wavevector_offsets: Vec<LedOffset>,
    pub noise: NoiseConfig,
    /// Metres.
    pub defocus: f64,
    /// PFM file with the pupil phase in radians (tile-sized, unshifted).
    pub aberration_phase: Option<PathBuf>,
    pub quantization: Option<QuantizationConfig>,
}

impl ErrorModelConfig {
    /// `base` resolves a relative aberration path.
    pub fn to_spec(&self, base: &Path) -> Result<ErrorModelSpec, CliError> {
        let aberration_phase = match &self.aberration_phase {
            Some(p) => Some(read_image(&base.join(p))?),
            None => None,
        };
        Ok(ErrorModelSpec {
            weights: self
                .weights
                .iter()
                .map(|w| (Led::new(w.row, w.col), w.weight))
                .collect::<BTreeMap<_, _>>(),
            wavevector_offsets: self
                .wavevector_offsets
                .iter()
                .map(|o| (Led::new(o.row, o.col), Wavevector::new(o.kx, o.ky)))
                .collect(),
            noise: match self.noise {
                NoiseConfig::None => Noise::None,
                NoiseConfig::Gaussian { sigma } => Noise::Gaussian { sigma },
                NoiseConfig::Poisson { photon_scale } => Noise::Poisson { photon_scale },
            },
            pupil: PupilSpec {
                aberration_phase,
                defocus: self.defocus,
            },
            quantization: self.quantization.map(|q| Quantization {
                bits: q.bits,
                full_scale: q.full_scale,
            }),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthConfig {
    /// Unit amplitude, zero phase.
    Flat,
    /// Band-limited random amplitude and phase; `bandwidth` in frequency bins.
    Texture { seed: u64, bandwidth: f64 },
    /// Phase bars on an empty background; `height` in radians.
    PhaseTarget { height: f64 },
    /// Source images resampled to the object grid. The amplitude is mapped
    /// onto `[amplitude_floor, 1]` and the phase onto `phase_range`.
    Images {
        amplitude: PathBuf,
        phase: PathBuf,
        #[serde(default = "default_floor")]
        amplitude_floor: f64,
        #[serde(default = "default_phase_range")]
        phase_range: (f64, f64),
    },
}

fn default_floor() -> f64 {
    0.05
}

fn default_phase_range() -> (f64, f64) {
    (0.0, std::f64::consts::FRAC_PI_2)
}

impl Default for TruthConfig {
    fn default() -> Self {
        TruthConfig::Texture {
            seed: 1,
            bandwidth: 60.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "schema")]
    pub schema_version: u32,
    pub geometry: GeometryConfig,
    /// Centred window of lit LEDs; the whole array when absent.
    #[serde(default)]
    pub lit: Option<LitConfig>,
    #[serde(default)]
    pub error_model: ErrorModelConfig,
    #[serde(default)]
    pub truth: TruthConfig,
    /// Object grid factor; derived from the geometry when absent.
    #[serde(default)]
    pub upsampling: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn schema() -> u32 {
    SCHEMA_VERSION
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: SimConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "{}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
                path.display(),
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn geometry(&self) -> SystemGeometry {
        (&self.geometry).into()
    }

    pub fn lit_window(&self) -> LitWindow {
        match self.lit {
            Some(l) => LitWindow {
                rows: l.rows,
                cols: l.cols,
            },
            None => LitWindow::full(&self.geometry()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackFile {
    pub file: String,
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectConfig {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFiles {
    pub amplitude: String,
    pub phase: String,
    /// Empty-background rectangle for phase targets.
    #[serde(default)]
    pub background_region: Option<RectConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub geometry: GeometryConfig,
    pub lit: LitConfig,
    pub error_model: ErrorModelConfig,
    pub pixel_format: String,
    pub upsampling: usize,
    pub seed: u64,
    pub files: Vec<StackFile>,
    #[serde(default)]
    pub truth: Option<TruthFiles>,
    #[serde(default)]
    pub truth_config: Option<TruthConfig>,
}

impl Manifest {
    /// Parses `dir/manifest.json` and checks it against the files on disk.
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        m.check(dir)?;
        Ok(m)
    }

    fn check(&self, dir: &Path) -> Result<(), CliError> {
        let bad = |why: String| Err(CliError::Data(format!("{}: {why}", dir.join(MANIFEST).display())));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {}", self.schema_version));
        }
        if self.pixel_format != PIXEL_FORMAT && self.pixel_format != "pgm" {
            return bad(format!("unknown pixel_format {:?}", self.pixel_format));
        }
        let geom = SystemGeometry::from(&self.geometry);
        let lit = LitWindow {
            rows: self.lit.rows,
            cols: self.lit.cols,
        }
        .leds(&geom)
        .map_err(|e| CliError::Data(e.to_string()))?;
        if self.files.len() != lit.len() {
            return bad(format!(
                "{} files listed for {} lit LEDs",
                self.files.len(),
                lit.len()
            ));
        }
        for f in &self.files {
            if !lit.contains(&Led::new(f.row, f.col)) {
                return bad(format!("LED ({}, {}) is not in the lit window", f.row, f.col));
            }
            if !dir.join(&f.file).is_file() {
                return bad(format!("missing image {}", f.file));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg: SimConfig = serde_json::from_str(
            r#"{"geometry": {"led_rows": 3, "led_cols": 3, "led_pitch": 0.004,
                "led_to_sample": 0.08, "wavelength": 6.3e-7, "objective_na": 0.1,
                "camera_pixel": 6.5e-6, "magnification": 4, "lr_size": 16}}"#,
        )
        .unwrap();
        assert_eq!(cfg.schema_version, SCHEMA_VERSION);
        assert_eq!(cfg.error_model, ErrorModelConfig::default());
        assert_eq!(cfg.lit_window(), LitWindow { rows: 3, cols: 3 });
        assert!(matches!(cfg.truth, TruthConfig::Texture { .. }));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: Result<NoiseConfig, _> = serde_json::from_str(r#"{"kind": "gaussian", "sigma": 1, "mu": 0}"#);
        assert!(r.is_err());
        let r: Result<NoiseConfig, _> = serde_json::from_str(r#"{"kind": "poisson", "photon_scale": 100}"#);
        assert_eq!(r.unwrap(), NoiseConfig::Poisson { photon_scale: 100.0 });
    }
}
