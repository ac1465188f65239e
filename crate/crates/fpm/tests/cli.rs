//! End-to-end runs of the `fpm` binary on small stacks.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fpm::commands::ReportJson;
use fpm::config::SimConfig;
use fpm::formats::{decode_image, encode_pfm, read_image, write_pfm};
use fpm_core::{axis_artifact_energy, dft2, pft_forward, upsampling_factor, Direction, RealImage};
use proptest::prelude::*;
use tempfile::TempDir;

fn fpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpm"))
        .args(args)
        .output()
        .expect("spawn fpm")
}

fn fpm_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpm"))
        .args(args)
        .env(key, value)
        .output()
        .expect("spawn fpm")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn repo_configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// 5x5 LEDs around the 11x11 array centre, 32 px tile, Gaussian noise.
fn small_config(dir: &Path, truth: &str) -> PathBuf {
    let text = format!(
        r#"{{
  "geometry": {{"led_rows": 11, "led_cols": 11, "led_pitch": 0.004, "led_to_sample": 0.076,
                "wavelength": 6.3e-7, "objective_na": 0.1, "camera_pixel": 6.5e-6,
                "magnification": 4.0, "lr_size": 32}},
  "lit": {{"rows": 5, "cols": 5}},
  "error_model": {{"noise": {{"kind": "gaussian", "sigma": 0.001}}}},
  "truth": {truth}
}}"#
    );
    let p = dir.join("sim.json");
    fs::write(&p, text).unwrap();
    p
}

const TEXTURE: &str = r#"{"kind": "texture", "seed": 2, "bandwidth": 10.0}"#;

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn simulate_is_deterministic_for_a_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), TEXTURE);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    ok(&fpm(&["simulate", s(&cfg), s(&a), "--seed", "7"]));
    ok(&fpm_env(&["simulate", s(&cfg), s(&b), "--seed", "7"], "FPM_THREADS", "1"));
    ok(&fpm(&["simulate", s(&cfg), s(&c), "--seed", "8"]));
    let (da, db, dc) = (dir_bytes(&a), dir_bytes(&b), dir_bytes(&c));
    assert_eq!(da.len(), 25 + 3);
    assert_eq!(da, db);
    assert_ne!(da, dc);
}

#[test]
fn manifest_materialises_defaults() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), TEXTURE);
    let out = tmp.path().join("stack");
    ok(&fpm(&["simulate", s(&cfg), s(&out)]));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["pixel_format"], "pfm-f32-le");
    assert_eq!(m["files"].as_array().unwrap().len(), 25);
    assert_eq!(m["error_model"]["defocus"], 0.0);
    assert!(m["error_model"]["weights"].as_array().unwrap().is_empty());
    assert_eq!(m["seed"], 0);
    assert!(m["upsampling"].as_u64().unwrap() >= 2);
}

#[test]
fn reconstruct_with_one_iteration_writes_all_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), TEXTURE);
    let stack = tmp.path().join("stack");
    ok(&fpm(&["simulate", s(&cfg), s(&stack)]));
    for backend in ["fft", "pft", "dct"] {
        let out = tmp.path().join(backend);
        ok(&fpm(&["reconstruct", s(&stack), s(&out), "--backend", backend, "--iters", "1"]));
        for f in ["amplitude.pfm", "phase.pfm", "spectrum_mag.pfm", "report.json"] {
            assert!(out.join(f).is_file(), "{backend}: {f}");
        }
        let amp = read_image(&out.join("amplitude.pfm")).unwrap();
        let hr = 32 * serde_json::from_str::<serde_json::Value>(&fs::read_to_string(out.join("report.json")).unwrap())
            .unwrap()["upsampling"]
            .as_u64()
            .unwrap() as usize;
        assert_eq!(amp.shape(), (hr, hr));
        let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["backend"], backend);
        assert!(report["wall_time"].as_f64().unwrap() >= 0.0);
        assert_eq!(report["residuals"].as_array().unwrap().len(), 1);
    }
}

#[test]
fn evaluate_truth_against_itself_is_zero() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), TEXTURE);
    let stack = tmp.path().join("stack");
    ok(&fpm(&["simulate", s(&cfg), s(&stack)]));
    let recon = tmp.path().join("recon");
    fs::create_dir(&recon).unwrap();
    fs::copy(stack.join("truth_amplitude.pfm"), recon.join("amplitude.pfm")).unwrap();
    fs::copy(stack.join("truth_phase.pfm"), recon.join("phase.pfm")).unwrap();
    let o = fpm(&["evaluate", s(&recon), "--truth", s(&stack)]);
    ok(&o);
    let r: ReportJson = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r.rmse_intensity, Some(0.0));
    assert_eq!(r.rmse_phase, Some(0.0));
    assert_eq!(r.block_consistency, None);
    let saved: ReportJson = serde_json::from_str(&fs::read_to_string(recon.join("evaluation.json")).unwrap()).unwrap();
    assert_eq!(saved, r);
}

#[test]
fn evaluate_background_only_is_partial() {
    let tmp = TempDir::new().unwrap();
    let recon = tmp.path().join("recon");
    fs::create_dir(&recon).unwrap();
    let phase = RealImage::from_fn(16, 16, |r, _| if r < 8 { 0.0 } else { 0.1 * (r % 2) as f64 }).unwrap();
    write_pfm(&recon.join("phase.pfm"), &phase).unwrap();
    write_pfm(&recon.join("amplitude.pfm"), &RealImage::filled(16, 16, 1.0).unwrap()).unwrap();
    let o = fpm(&["evaluate", s(&recon), "--background-region", "8,0,8,16"]);
    ok(&o);
    let r: ReportJson = serde_json::from_slice(&o.stdout).unwrap();
    assert!((r.background_phase_std.unwrap() - 0.05).abs() < 1e-7);
    assert_eq!(
        ReportJson {
            background_phase_std: None,
            ..r
        },
        ReportJson::default()
    );
}

#[test]
fn phase_target_pipeline_reports_background_and_blocks() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), r#"{"kind": "phase_target", "height": 1.0}"#);
    let stack = tmp.path().join("stack");
    ok(&fpm(&["simulate", s(&cfg), s(&stack)]));
    let recon = tmp.path().join("recon");
    ok(&fpm(&["reconstruct", s(&stack), s(&recon), "--backend", "pft", "--iters", "3"]));
    let o = fpm(&["evaluate", s(&recon), "--truth", s(&stack), "--sub", s(&recon), "--origin", "0,0"]);
    ok(&o);
    let r: ReportJson = serde_json::from_slice(&o.stdout).unwrap();
    // The target's empty-background rectangle comes from the manifest.
    assert!(r.background_phase_std.is_some());
    assert!(r.rmse_phase.unwrap().is_finite());
    assert!(r.block_consistency.unwrap() < 1e-12);
    assert!(r.wall_time.is_some() && r.axis_artifact_energy.is_some());
}

#[test]
fn decompose_outputs() {
    let tmp = TempDir::new().unwrap();
    let flat = tmp.path().join("flat.pfm");
    write_pfm(&flat, &RealImage::filled(12, 9, 0.7).unwrap()).unwrap();
    let out = tmp.path().join("flat_out");
    ok(&fpm(&["decompose", s(&flat), s(&out)]));
    let e = read_image(&out.join("e.pfm")).unwrap();
    assert!(e.as_slice().iter().all(|&v| v == 0.0));
    for f in ["g.pfm", "spectrum_f.pfm", "spectrum_g.pfm", "spectrum_e.pfm", "decompose.json"] {
        assert!(out.join(f).is_file());
    }

    let step = RealImage::from_fn(40, 40, |r, c| if r + c < 40 { 0.0 } else { 1.0 }).unwrap();
    let path = tmp.path().join("step.pfm");
    write_pfm(&path, &step).unwrap();
    let out = tmp.path().join("step_out");
    ok(&fpm(&["decompose", s(&path), s(&out)]));
    let g = read_image(&out.join("g.pfm")).unwrap();
    let e = read_image(&out.join("e.pfm")).unwrap();
    for i in 0..step.len() {
        assert!((g.as_slice()[i] + e.as_slice()[i] - step.as_slice()[i]).abs() <= 1e-6);
    }
    let of_f = axis_artifact_energy(&dft2(&step.to_complex(), Direction::Forward), 3.0).unwrap();
    let of_g = axis_artifact_energy(&dft2(&g.to_complex(), Direction::Forward), 3.0).unwrap();
    assert!(of_g < of_f);
    let pft = axis_artifact_energy(&pft_forward(&step).unwrap(), 3.0).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("decompose.json")).unwrap()).unwrap();
    assert!((summary["axis_artifact_energy_g"].as_f64().unwrap() - pft).abs() < 1e-12);
}

#[test]
fn decompose_accepts_pgm() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("ramp.pgm");
    let mut bytes = b"P5\n# ramp\n4 3\n255\n".to_vec();
    bytes.extend((0..12u8).map(|v| v * 20));
    fs::write(&path, bytes).unwrap();
    ok(&fpm(&["decompose", s(&path), s(&tmp.path().join("out"))]));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    // Usage errors.
    assert_eq!(fpm(&["simulate"]).status.code(), Some(1));
    assert_eq!(fpm(&["reconstruct", "a", "b", "--backend", "wavelet"]).status.code(), Some(1));
    assert_eq!(fpm(&["--help"]).status.code(), Some(0));

    // Invalid configuration names the field.
    let bad = tmp.path().join("bad.json");
    let text = fs::read_to_string(small_config(tmp.path(), TEXTURE)).unwrap().replace("\"objective_na\": 0.1", "\"objective_na\": 1.5");
    fs::write(&bad, text).unwrap();
    let o = fpm(&["simulate", s(&bad), s(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("objective_na"));
    let o = fpm(&["simulate", s(&tmp.path().join("missing.json")), s(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(1));

    // Corrupt or missing data.
    let cfg = small_config(tmp.path(), TEXTURE);
    let stack = tmp.path().join("stack");
    ok(&fpm(&["simulate", s(&cfg), s(&stack)]));
    let victim = stack.join("led_r05_c05.pfm");
    let bytes = fs::read(&victim).unwrap();
    fs::write(&victim, &bytes[..bytes.len() / 2]).unwrap();
    let o = fpm(&["reconstruct", s(&stack), s(&tmp.path().join("r"))]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    fs::remove_file(&victim).unwrap();
    assert_eq!(fpm(&["reconstruct", s(&stack), s(&tmp.path().join("r"))]).status.code(), Some(2));
    assert_eq!(fpm(&["reconstruct", s(tmp.path()), s(&tmp.path().join("r"))]).status.code(), Some(2));
    assert_eq!(fpm(&["decompose", s(&cfg), s(&tmp.path().join("d"))]).status.code(), Some(2));

    // Shape mismatch in evaluation.
    let recon = tmp.path().join("recon");
    fs::create_dir(&recon).unwrap();
    write_pfm(&recon.join("amplitude.pfm"), &RealImage::filled(8, 8, 1.0).unwrap()).unwrap();
    write_pfm(&recon.join("phase.pfm"), &RealImage::filled(8, 8, 0.0).unwrap()).unwrap();
    assert_eq!(fpm(&["evaluate", s(&recon), "--truth", s(&stack)]).status.code(), Some(2));
    assert_eq!(fpm_env(&["simulate", s(&cfg), s(&stack)], "FPM_THREADS", "many").status.code(), Some(1));
}

#[test]
fn numerical_failures_map_to_exit_code_three() {
    let e: fpm::CliError = fpm_core::Error::Numerical {
        iteration: 2,
        row: 1,
        col: 1,
    }
    .into();
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn bundled_configs_are_valid() {
    let sim = SimConfig::load(&repo_configs().join("sim_11x11.json")).unwrap();
    let g = sim.geometry();
    g.validate().unwrap();
    assert_eq!(g, fpm_core::SystemGeometry::example_11x11());
    let lit = sim.lit_window().leds(&g).unwrap();
    assert_eq!(lit.len(), 121);
    assert_eq!(upsampling_factor(&g, &lit), 3);

    let exp = SimConfig::load(&repo_configs().join("exp_32x32_15x15.json")).unwrap();
    let g = exp.geometry();
    g.validate().unwrap();
    assert_eq!((g.led_rows, g.led_cols), (32, 32));
    assert_eq!(exp.lit_window().leds(&g).unwrap().len(), 225);
    exp.error_model.to_spec(Path::new(".")).unwrap().validate().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pfm_round_trip_is_bit_exact(rows in 1usize..20, cols in 1usize..20, seed in any::<u64>()) {
        // Values representable in f32 survive exactly.
        let mut x = seed;
        let img = RealImage::from_fn(rows, cols, |_, _| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let bits = (x >> 32) as u32;
            let v = f32::from_bits(bits);
            if v.is_finite() { v as f64 } else { 0.0 }
        }).unwrap();
        let back = decode_image(&encode_pfm(&img)).unwrap();
        prop_assert_eq!(back.shape(), img.shape());
        for (a, b) in back.as_slice().iter().zip(img.as_slice()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
