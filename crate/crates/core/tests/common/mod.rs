//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use fpm_core::{Complex64, ComplexImage, RealImage};
use nalgebra::{DMatrix, DVector};

/// Direct `O(M^2 N^2)` unitary 2D DFT.
pub fn naive_dft2(img: &ComplexImage, inverse: bool) -> Vec<Complex64> {
    let (m, n) = img.shape();
    let sign = if inverse { 1.0 } else { -1.0 };
    let norm = 1.0 / ((m * n) as f64).sqrt();
    let mut out = vec![Complex64::default(); m * n];
    for x in 0..m {
        for y in 0..n {
            let mut acc = Complex64::default();
            for p in 0..m {
                for q in 0..n {
                    let t = ((x * p) % m) as f64 / m as f64 + ((y * q) % n) as f64 / n as f64;
                    acc += img[(p, q)] * Complex64::from_polar(1.0, sign * 2.0 * PI * t);
                }
            }
            out[x * n + y] = acc * norm;
        }
    }
    out
}

/// Boundary image written straight from its definition.
pub fn boundary_oracle(f: &[f64], m: usize, n: usize) -> Vec<f64> {
    let at = |p: usize, q: usize| f[p * n + q];
    let mut u = vec![0.0; m * n];
    for q in 0..n {
        u[q] += at(m - 1, q) - at(0, q);
        u[(m - 1) * n + q] += at(0, q) - at(m - 1, q);
    }
    for p in 0..m {
        u[p * n] += at(p, n - 1) - at(p, 0);
        u[p * n + n - 1] += at(p, 0) - at(p, n - 1);
    }
    u
}

/// Circular 5-point stencil applied pixel by pixel.
pub fn stencil_oracle(e: &[f64], m: usize, n: usize) -> Vec<f64> {
    let at = |p: usize, q: usize| e[(p % m) * n + (q % n)];
    let mut out = vec![0.0; m * n];
    for p in 0..m {
        for q in 0..n {
            out[p * n + q] =
                at(p + 1, q) + at(p + m - 1, q) + at(p, q + 1) + at(p, q + n - 1) - 4.0 * at(p, q);
        }
    }
    out
}

/// Dense matrix of the circular stencil acting on a row-major `m x n` image.
fn stencil_matrix(m: usize, n: usize) -> DMatrix<f64> {
    let mn = m * n;
    let mut a = DMatrix::zeros(mn, mn);
    for p in 0..m {
        for q in 0..n {
            let i = p * n + q;
            a[(i, i)] -= 4.0;
            for (dp, dq) in [(1, 0), (m - 1, 0), (0, 1), (0, n - 1)] {
                let j = ((p + dp) % m) * n + (q + dq) % n;
                a[(i, j)] += 1.0;
            }
        }
    }
    a
}

/// Zero-mean solution of `K * e = u` by dense linear algebra.
///
/// The stencil has a one-dimensional null space (constants), so the last
/// unknown is eliminated through `sum(e) = 0` and the last (dependent)
/// equation is dropped, leaving an invertible `(MN - 1)`-dimensional system.
pub fn dense_smooth_oracle(f: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mn = m * n;
    let u = boundary_oracle(f, m, n);
    let a = stencil_matrix(m, n);
    let k = mn - 1;
    let mut r = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            r[(i, j)] = a[(i, j)] - a[(i, k)];
        }
    }
    let rhs = DVector::from_iterator(k, u.iter().take(k).copied());
    let sol = r.lu().solve(&rhs).expect("reduced stencil system is invertible");
    let mut e: Vec<f64> = sol.iter().copied().collect();
    e.push(-sol.sum());
    e
}

pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let num: f64 = got.iter().zip(want).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = want.iter().map(|b| b * b).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

pub fn real_image(m: usize, n: usize, data: Vec<f64>) -> RealImage {
    RealImage::new(m, n, data).unwrap()
}
