//! The four pipeline stages. Each reads files, calls into `fpm-core` and
//! writes files; nothing here holds state between calls.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fpm_core::metrics::Region;
use fpm_core::scenes::{phase_bar_target, textured_object};
use fpm_core::sim::TruthOptions;
use fpm_core::{
    axis_artifact_energy, background_phase_std, block_consistency, make_ground_truth,
    periodic_smooth_decompose, pft_forward, reconstruct as run_recovery, render, upsampling_factor,
    ComplexImage, Direction, GroundTruth, Led, LrStack, MetricReport, ReconConfig,
    RealImage, Simulator, SystemGeometry, TruthKind,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    LitConfig, Manifest, RectConfig, SimConfig, StackFile, TruthConfig, TruthFiles, MANIFEST,
    PIXEL_FORMAT, SCHEMA_VERSION,
};
use crate::formats::{read_image, write_pfm};
use crate::CliError;

/// Exclusion radius around DC for the axis-energy figure, in bins.
pub const AXIS_EXCLUDE_RADIUS: f64 = 3.0;

pub const TRUTH_AMPLITUDE: &str = "truth_amplitude.pfm";
pub const TRUTH_PHASE: &str = "truth_phase.pfm";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Rayon pool capped by `FPM_THREADS` when set.
fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("FPM_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("FPM_THREADS must be a thread count, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn led_file(led: Led) -> String {
    format!("led_r{:02}_c{:02}.pfm", led.row, led.col)
}

fn build_truth(cfg: &SimConfig, hr: usize, base: &Path) -> Result<(GroundTruth, Option<RectConfig>), CliError> {
    Ok(match &cfg.truth {
        TruthConfig::Flat => (make_ground_truth(TruthKind::Flat, hr, &TruthOptions::default())?, None),
        TruthConfig::Texture { seed, bandwidth } => {
            if !(bandwidth.is_finite() && *bandwidth > 0.0) {
                return Err(CliError::Config(format!("truth.bandwidth must be positive, got {bandwidth}")));
            }
            (textured_object(*seed, hr, *bandwidth)?, None)
        }
        TruthConfig::PhaseTarget { height } => {
            let (t, region) = phase_bar_target(hr, *height)?;
            let rect = match region {
                Region::Rect { row0, col0, rows, cols } => Some(RectConfig { row0, col0, rows, cols }),
                Region::Line { .. } => None,
            };
            (t, rect)
        }
        TruthConfig::Images {
            amplitude,
            phase,
            amplitude_floor,
            phase_range,
        } => {
            let a = read_image(&base.join(amplitude))?;
            let p = read_image(&base.join(phase))?;
            let opts = TruthOptions {
                amplitude_floor: *amplitude_floor,
                phase_range: *phase_range,
                ..TruthOptions::default()
            };
            let kind = TruthKind::TwoImage {
                amplitude: &a,
                phase: &p,
            };
            (make_ground_truth(kind, hr, &opts)?, None)
        }
    })
}

/// Simulates the stack described by `config` into `out`. `seed` overrides
/// the configured noise seed.
pub fn simulate(config: &Path, out: &Path, seed: Option<u64>) -> Result<Manifest, CliError> {
    let mut cfg = SimConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let base = config.parent().unwrap_or(Path::new("."));
    let geom = cfg.geometry();
    geom.validate()?;
    let lit = cfg.lit_window().leds(&geom)?;
    let s = match cfg.upsampling {
        Some(s) if s < 2 => return Err(CliError::Config(format!("upsampling must be at least 2, got {s}"))),
        Some(s) => s,
        None => upsampling_factor(&geom, &lit),
    };
    let hr = s * geom.lr_size;
    let (truth, background) = build_truth(&cfg, hr, base)?;
    // Relative paths in the manifest would be resolved against the output
    // directory, so pin the aberration map to an absolute path.
    if let Some(p) = &cfg.error_model.aberration_phase {
        let abs = base.join(p);
        cfg.error_model.aberration_phase = Some(fs::canonicalize(&abs).map_err(|e| CliError::io(&abs, e))?);
    }
    let err = cfg.error_model.to_spec(base)?;
    let sim = Simulator::new(&truth, &geom, &err)?;

    let images: Vec<RealImage> = thread_pool()?.install(|| {
        lit.par_iter()
            .map(|&led| sim.simulate_led(led, cfg.seed))
            .collect::<Result<_, _>>()
    })?;

    create_dir(out)?;
    let mut files = Vec::with_capacity(lit.len());
    for (&led, img) in lit.iter().zip(&images) {
        let name = led_file(led);
        write_pfm(&out.join(&name), img)?;
        files.push(StackFile {
            file: name,
            row: led.row,
            col: led.col,
        });
    }
    write_pfm(&out.join(TRUTH_AMPLITUDE), truth.amplitude())?;
    write_pfm(&out.join(TRUTH_PHASE), truth.phase())?;
    let window = cfg.lit_window();
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        geometry: (&geom).into(),
        lit: LitConfig {
            rows: window.rows,
            cols: window.cols,
        },
        error_model: cfg.error_model.clone(),
        pixel_format: PIXEL_FORMAT.into(),
        upsampling: s,
        seed: cfg.seed,
        files,
        truth: Some(TruthFiles {
            amplitude: TRUTH_AMPLITUDE.into(),
            phase: TRUTH_PHASE.into(),
            background_region: background,
        }),
        truth_config: Some(cfg.truth.clone()),
    };
    write_json(&out.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Reads a stack directory written by [`simulate`] (or by hand).
pub fn load_stack(dir: &Path) -> Result<(Manifest, LrStack), CliError> {
    let manifest = Manifest::load(dir)?;
    let geom = SystemGeometry::from(&manifest.geometry);
    let lr = geom.lr_size;
    let mut images = Vec::with_capacity(manifest.files.len());
    let mut leds = Vec::with_capacity(manifest.files.len());
    for f in &manifest.files {
        let img = read_image(&dir.join(&f.file))?;
        if img.shape() != (lr, lr) {
            return Err(CliError::Data(format!(
                "{}: image is {}x{}, tile size is {lr}",
                f.file,
                img.rows(),
                img.cols()
            )));
        }
        if img.as_slice().iter().any(|&v| v < 0.0) {
            return Err(CliError::Data(format!("{}: negative intensity", f.file)));
        }
        images.push(img);
        leds.push(Led::new(f.row, f.col));
    }
    let stack = LrStack::new(images, leds, geom)?;
    Ok((manifest, stack))
}

/// `log10(1 + |S|)` with DC moved to the centre for display.
pub fn log_magnitude_centered(spec: &ComplexImage) -> RealImage {
    let (m, n) = spec.shape();
    RealImage::from_fn(m, n, |r, c| {
        // Output pixel (r, c) shows frequency (r - m/2, c - n/2).
        let fy = (r + m - m / 2) % m;
        let fx = (c + n - n / 2) % n;
        (1.0 + spec[(fy, fx)].norm()).log10()
    })
    .expect("finite spectrum")
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconReport {
    pub backend: String,
    pub initial_guess: String,
    pub iterations: usize,
    pub upsampling: usize,
    pub bandpass: bool,
    pub led_order: String,
    pub gn_regularizer: f64,
    pub updater: String,
    pub pupil_recovery: bool,
    pub pft_mode: String,
    pub seed: u64,
    /// Seconds spent in recovery and rendering, excluding file IO.
    pub wall_time: f64,
    pub axis_artifact_energy: f64,
    pub residuals: Vec<f64>,
}

/// Runs recovery on the stack in `stack_dir` and writes `amplitude.pfm`,
/// `phase.pfm`, `spectrum_mag.pfm` and `report.json` to `out`.
pub fn reconstruct(stack_dir: &Path, out: &Path, cfg: &ReconConfig) -> Result<ReconReport, CliError> {
    let (_, stack) = load_stack(stack_dir)?;
    let geom = stack.geometry().clone();
    let start = Instant::now();
    let state = run_recovery(&stack, &geom, cfg)?;
    let (amp, phase) = render(&state);
    let wall_time = start.elapsed().as_secs_f64();
    let spectrum = state.analysis_spectrum();
    let axis = axis_artifact_energy(&spectrum, AXIS_EXCLUDE_RADIUS)?;

    create_dir(out)?;
    write_pfm(&out.join("amplitude.pfm"), &amp)?;
    write_pfm(&out.join("phase.pfm"), &phase)?;
    write_pfm(&out.join("spectrum_mag.pfm"), &log_magnitude_centered(&spectrum))?;
    if cfg.pupil_recovery {
        write_pfm(&out.join("pupil_amplitude.pfm"), &state.pupil.abs())?;
        write_pfm(&out.join("pupil_phase.pfm"), &state.pupil.arg())?;
    }
    let name = |d: &dyn std::fmt::Debug| format!("{d:?}").to_lowercase();
    let report = ReconReport {
        backend: name(&cfg.backend),
        initial_guess: name(&cfg.initial_guess),
        iterations: cfg.iterations,
        upsampling: state.upsampling,
        bandpass: cfg.bandpass,
        led_order: name(&cfg.led_order),
        gn_regularizer: cfg.gn_regularizer,
        updater: name(&cfg.updater),
        pupil_recovery: cfg.pupil_recovery,
        pft_mode: name(&cfg.pft_mode),
        seed: cfg.seed,
        wall_time,
        axis_artifact_energy: axis,
        residuals: state.residuals.clone(),
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

/// Splits one image into its periodic and smooth parts and writes both
/// together with log-magnitude spectra of the input and the two parts.
pub fn decompose(input: &Path, out: &Path) -> Result<Value, CliError> {
    let f = read_image(input)?;
    let d = periodic_smooth_decompose(&f)?;
    let plain = fpm_core::dft2(&f.to_complex(), Direction::Forward);
    let of_g = pft_forward(&f)?;
    let of_e = fpm_core::dft2(&d.e.to_complex(), Direction::Forward);

    create_dir(out)?;
    write_pfm(&out.join("g.pfm"), &d.g)?;
    write_pfm(&out.join("e.pfm"), &d.e)?;
    write_pfm(&out.join("spectrum_f.pfm"), &log_magnitude_centered(&plain))?;
    write_pfm(&out.join("spectrum_g.pfm"), &log_magnitude_centered(&of_g))?;
    write_pfm(&out.join("spectrum_e.pfm"), &log_magnitude_centered(&of_e))?;
    let summary = json!({
        "rows": f.rows(),
        "cols": f.cols(),
        "axis_artifact_energy_f": axis_artifact_energy(&plain, AXIS_EXCLUDE_RADIUS)?,
        "axis_artifact_energy_g": axis_artifact_energy(&of_g, AXIS_EXCLUDE_RADIUS)?,
        "smooth_energy_fraction": d.e.sum_sq() / f.sum_sq().max(f64::MIN_POSITIVE),
    });
    write_json(&out.join("decompose.json"), &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, Default)]
pub struct EvaluateArgs {
    pub recon: PathBuf,
    /// Directory with `truth_amplitude.pfm` / `truth_phase.pfm` (a simulated stack works).
    pub truth: Option<PathBuf>,
    pub background: Option<Region>,
    /// Second reconstruction of a sub-tile and its top-left corner in the first.
    pub sub: Option<(PathBuf, (usize, usize))>,
    pub out: Option<PathBuf>,
}

/// Flat JSON form of [`MetricReport`]; absent metrics are `null`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, serde::Deserialize)]
pub struct ReportJson {
    pub rmse_intensity: Option<f64>,
    pub rmse_phase: Option<f64>,
    pub background_phase_std: Option<f64>,
    pub axis_artifact_energy: Option<f64>,
    pub block_consistency: Option<f64>,
    pub wall_time: Option<f64>,
}

impl From<&MetricReport> for ReportJson {
    fn from(r: &MetricReport) -> Self {
        ReportJson {
            rmse_intensity: r.rmse_intensity,
            rmse_phase: r.rmse_phase,
            background_phase_std: r.background_phase_std,
            axis_artifact_energy: r.axis_artifact_energy,
            block_consistency: r.block_consistency,
            wall_time: r.wall_time,
        }
    }
}

fn truth_files(dir: &Path) -> Result<(PathBuf, PathBuf, Option<RectConfig>), CliError> {
    let manifest_path = dir.join(MANIFEST);
    if manifest_path.is_file() {
        let m = Manifest::load(dir)?;
        if let Some(t) = m.truth {
            return Ok((dir.join(t.amplitude), dir.join(t.phase), t.background_region));
        }
    }
    Ok((dir.join(TRUTH_AMPLITUDE), dir.join(TRUTH_PHASE), None))
}

/// Computes whichever metrics the supplied inputs allow and writes them to
/// `args.out` (default `recon/evaluation.json`).
pub fn evaluate(args: &EvaluateArgs) -> Result<MetricReport, CliError> {
    let amp = read_image(&args.recon.join("amplitude.pfm"))?;
    let phase = read_image(&args.recon.join("phase.pfm"))?;
    let mut report = MetricReport::default();
    let mut background = args.background;

    if let Some(dir) = &args.truth {
        let (ta, tp, region) = truth_files(dir)?;
        let (ta, tp) = (read_image(&ta)?, read_image(&tp)?);
        let cmp = MetricReport::compare(&amp, &phase, &ta, &tp)?;
        report.rmse_intensity = cmp.rmse_intensity;
        report.rmse_phase = cmp.rmse_phase;
        if background.is_none() {
            background = region.map(|r| Region::Rect {
                row0: r.row0,
                col0: r.col0,
                rows: r.rows,
                cols: r.cols,
            });
        }
    }
    if let Some(region) = &background {
        report.background_phase_std = Some(background_phase_std(&phase, region)?);
    }
    if let Some((dir, origin)) = &args.sub {
        let sub = read_image(&dir.join("phase.pfm"))?;
        report.block_consistency = Some(block_consistency(&phase, &sub, *origin)?);
    }
    let recon_report = args.recon.join("report.json");
    if recon_report.is_file() {
        let text = fs::read_to_string(&recon_report).map_err(|e| CliError::io(&recon_report, e))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", recon_report.display())))?;
        report.wall_time = v.get("wall_time").and_then(Value::as_f64);
        report.axis_artifact_energy = v.get("axis_artifact_energy").and_then(Value::as_f64);
    }
    let out = args.out.clone().unwrap_or_else(|| args.recon.join("evaluation.json"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_json(&out, &ReportJson::from(&report))?;
    Ok(report)
}
