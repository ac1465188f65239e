//! Frozen values. These pin current behaviour rather than an independent
//! truth; a change here needs a reason.

use fpm_core::geometry::LitWindow;
use fpm_core::scenes::textured_object;
use fpm_core::{
    phase_align, reconstruct, render, rmse, simulate_stack, upsampling_factor, wavevector_for_led,
    Backend, ErrorModelSpec, GroundTruth, InitialGuess, Led, ReconConfig, RealImage,
    SystemGeometry,
};

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs()
}

#[test]
fn example_geometry_upsampling() {
    let g = SystemGeometry::example_11x11();
    let leds = LitWindow::full(&g).leds(&g).unwrap();
    assert_eq!(upsampling_factor(&g, &leds), 3);
}

#[test]
fn neighbour_led_wavevector() {
    let g = SystemGeometry::example_11x11();
    let k = wavevector_for_led(&g, 5, 6).unwrap();
    eprintln!("kx {:.6e} ky {:.6e}", k.kx, k.ky);
    assert!(close(k.kx, -5.241_84e5, 1e-5), "{}", k.kx);
    assert_eq!(k.ky, 0.0);
}

#[test]
fn flat_object_on_axis_image() {
    let g = SystemGeometry {
        lr_size: 32,
        ..SystemGeometry::example_11x11()
    };
    let n = 3 * g.lr_size;
    let truth = GroundTruth::new(RealImage::filled(n, n, 1.0).unwrap(), RealImage::filled(n, n, 0.0).unwrap())
        .unwrap();
    let stack = simulate_stack(&truth, &g, &[Led::new(5, 5)], &ErrorModelSpec::default(), 0).unwrap();
    for &v in stack.images()[0].as_slice() {
        assert!((v - 1.0).abs() <= 1e-10, "{v}");
    }
}

#[test]
fn main_scene_fft_phase_error() {
    let g = SystemGeometry::example_11x11();
    let truth = textured_object(1, 384, 60.0).unwrap();
    let leds = LitWindow::full(&g).leds(&g).unwrap();
    let stack = simulate_stack(&truth, &g, &leds, &ErrorModelSpec::default(), 0).unwrap();
    let cfg = ReconConfig {
        backend: Backend::Fft,
        iterations: 30,
        initial_guess: InitialGuess::Ones,
        ..ReconConfig::default()
    };
    let state = reconstruct(&stack, &g, &cfg).unwrap();
    let (_, phase) = render(&state);
    let e = rmse(truth.phase(), &phase_align(&phase, truth.phase()).unwrap()).unwrap();
    eprintln!("fft phase rmse {e:.6e}");
    assert!(close(e, 8.4315e-3, 1e-3), "{e}");
}
