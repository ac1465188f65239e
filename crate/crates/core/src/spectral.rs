//! Periodic-plus-smooth decomposition and the symmetric-extension helpers.
//!
//! For an image `f` with boundary image `u`, the smooth component `e` is the
//! zero-mean solution of `K * e = u` (circular convolution with the 5-point
//! Laplacian stencil `K`). In the unitary Fourier domain this is a pointwise
//! division by the kernel spectrum, with the DC bin set to zero. The periodic
//! component `g = f - e` then has a spectrum free of the wrap-around cross.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use num_traits::Float;

use crate::fft::{Dft2, Direction, Fft};
use crate::image::{ComplexImage, Image, RealImage, Sample};
use crate::{Error, Result};

type C = Complex64;

/// Scalar types the decomposition accepts. Complex inputs are handled by linearity.
pub trait Field: Sample + Add<Output = Self> + Sub<Output = Self> + Neg<Output = Self> {
    fn to_complex(self) -> C;
    /// Real fields keep the real part.
    fn from_complex(z: C) -> Self;
}

impl Field for f64 {
    fn to_complex(self) -> C {
        C::new(self, 0.0)
    }
    fn from_complex(z: C) -> Self {
        z.re
    }
}

impl Field for C {
    fn to_complex(self) -> C {
        self
    }
    fn from_complex(z: C) -> Self {
        z
    }
}

/// Border mismatch of an image, split into its row part `u1` and column part `u2`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryImage<T> {
    u1: Image<T>,
    u2: Image<T>,
}

impl<T: Field> BoundaryImage<T> {
    /// Nonzero only on the first and last rows.
    pub fn u1(&self) -> &Image<T> {
        &self.u1
    }

    /// Nonzero only on the first and last columns.
    pub fn u2(&self) -> &Image<T> {
        &self.u2
    }

    /// `u1 + u2`; corners carry both contributions.
    pub fn u(&self) -> Image<T> {
        let data = self
            .u1
            .as_slice()
            .iter()
            .zip(self.u2.as_slice())
            .map(|(&a, &b)| a + b)
            .collect();
        Image::from_raw(self.u1.rows(), self.u1.cols(), data)
    }
}

pub fn boundary_image<T: Field>(f: &Image<T>) -> Result<BoundaryImage<T>> {
    f.require_2x2()?;
    let (m, n) = f.shape();
    let mut u1 = vec![T::default(); m * n];
    let mut u2 = vec![T::default(); m * n];
    for q in 0..n {
        let d = f[(m - 1, q)] - f[(0, q)];
        u1[q] = d;
        u1[(m - 1) * n + q] = -d;
    }
    for p in 0..m {
        let d = f[(p, n - 1)] - f[(p, 0)];
        u2[p * n] = d;
        u2[p * n + n - 1] = -d;
    }
    Ok(BoundaryImage {
        u1: Image::from_raw(m, n, u1),
        u2: Image::from_raw(m, n, u2),
    })
}

/// Closed-form eigenvalues of the periodic 5-point Laplacian.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpectrum {
    values: RealImage,
}

impl KernelSpectrum {
    pub fn values(&self) -> &RealImage {
        &self.values
    }

    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.values[(x, y)]
    }
}

pub fn kernel_spectrum(rows: usize, cols: usize) -> Result<KernelSpectrum> {
    if rows < 2 || cols < 2 {
        return Err(Error::DegenerateAxis { rows, cols });
    }
    let cr = cos_table(rows);
    let cc = cos_table(cols);
    let values = RealImage::from_fn(rows, cols, |x, y| cr[x] + cc[y] - 4.0)?;
    Ok(KernelSpectrum { values })
}

/// `2 cos(2 pi j / n)` evaluated so that symmetric bins agree exactly.
fn cos_table(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let jj = j.min(n - j);
            2.0 * Float::cos(2.0 * PI * jj as f64 / n as f64)
        })
        .collect()
}

/// Circular convolution with the stencil: -4 at the centre, +1 at the four neighbours.
pub fn apply_kernel<T: Field>(e: &Image<T>) -> Image<T> {
    let (m, n) = e.shape();
    let mut out = Vec::with_capacity(m * n);
    for p in 0..m {
        for q in 0..n {
            let c = e[(p, q)];
            let s = e[((p + 1) % m, q)]
                + e[((p + m - 1) % m, q)]
                + e[(p, (q + 1) % n)]
                + e[(p, (q + n - 1) % n)];
            out.push(s - c - c - c - c);
        }
    }
    Image::from_raw(m, n, out)
}

/// `f = g + e` with `g` periodic and `e` smooth and zero-mean.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition<T> {
    pub g: Image<T>,
    pub e: Image<T>,
    pub boundary: BoundaryImage<T>,
    pub kernel: KernelSpectrum,
}

pub fn periodic_smooth_decompose<T: Field>(f: &Image<T>) -> Result<Decomposition<T>> {
    let boundary = boundary_image(f)?;
    let (m, n) = f.shape();
    let kernel = kernel_spectrum(m, n)?;
    let dft = Dft2::new(m, n);

    let mut spec: Vec<C> = boundary.u().as_slice().iter().map(|v| v.to_complex()).collect();
    dft.process(&mut spec, Direction::Forward);
    spec[0] = C::default();
    for (z, k) in spec.iter_mut().zip(kernel.values().as_slice()).skip(1) {
        *z /= *k;
    }
    dft.process(&mut spec, Direction::Inverse);

    let e: Vec<T> = spec.into_iter().map(T::from_complex).collect();
    let g: Vec<T> = f.as_slice().iter().zip(&e).map(|(&a, &b)| a - b).collect();
    Ok(Decomposition {
        g: Image::from_raw(m, n, g),
        e: Image::from_raw(m, n, e),
        boundary,
        kernel,
    })
}

/// Unitary spectrum of the periodic component `g`.
pub fn pft_forward<T: Field>(f: &Image<T>) -> Result<ComplexImage> {
    f.require_2x2()?;
    let plan = PftPlan::new(f.rows(), f.cols())?;
    let src: Vec<C> = f.as_slice().iter().map(|v| v.to_complex()).collect();
    let mut out = vec![C::default(); src.len()];
    plan.forward(&src, &mut out);
    Ok(ComplexImage::from_raw(f.rows(), f.cols(), out))
}

/// Reusable transforms for one grid shape.
///
/// The boundary spectrum is formed from two 1D transforms of the edge
/// differences, so a PFT costs one 2D FFT plus `O(MN)` work.
#[derive(Clone, Debug)]
pub struct PftPlan {
    rows: usize,
    cols: usize,
    dft: Dft2,
    row_fft: Fft,
    col_fft: Fft,
    /// `1 / K(x, y)`, with 0 at DC.
    inv_kernel: Vec<f64>,
    /// `1 - exp(2 pi i x / rows)` and `1 - exp(2 pi i y / cols)`.
    row_factor: Vec<C>,
    col_factor: Vec<C>,
}

impl PftPlan {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        let kernel = kernel_spectrum(rows, cols)?;
        let mut inv_kernel: Vec<f64> = kernel.values().as_slice().iter().map(|k| 1.0 / k).collect();
        inv_kernel[0] = 0.0;
        let factor = |n: usize| -> Vec<C> {
            (0..n)
                .map(|x| C::new(1.0, 0.0) - C::from_polar(1.0, 2.0 * PI * x as f64 / n as f64))
                .collect()
        };
        Ok(Self {
            rows,
            cols,
            dft: Dft2::new(rows, cols),
            row_fft: Fft::new(rows),
            col_fft: Fft::new(cols),
            inv_kernel,
            row_factor: factor(rows),
            col_factor: factor(cols),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn dft(&self) -> &Dft2 {
        &self.dft
    }

    /// Unitary spectrum of the boundary image of `f`, written to `out`.
    pub fn boundary_spectrum(&self, f: &[C], out: &mut [C]) {
        let (m, n) = (self.rows, self.cols);
        assert_eq!(f.len(), m * n);
        assert_eq!(out.len(), m * n);
        // a(q): bottom row minus top row; b(p): right column minus left column.
        let mut a: Vec<C> = (0..n).map(|q| f[(m - 1) * n + q] - f[q]).collect();
        let mut b: Vec<C> = (0..m).map(|p| f[p * n + n - 1] - f[p * n]).collect();
        self.col_fft.process(&mut a, Direction::Forward);
        self.row_fft.process(&mut b, Direction::Forward);
        let scale = 1.0 / Float::sqrt((m * n) as f64);
        for x in 0..m {
            for y in 0..n {
                out[x * n + y] = (self.row_factor[x] * a[y] + self.col_factor[y] * b[x]) * scale;
            }
        }
    }

    /// Spectrum of the smooth component, `U / K` with zero DC.
    pub fn smooth_spectrum(&self, f: &[C], out: &mut [C]) {
        self.boundary_spectrum(f, out);
        for (z, k) in out.iter_mut().zip(&self.inv_kernel) {
            *z *= *k;
        }
    }

    /// Smooth component `e` in the spatial domain.
    pub fn smooth_component(&self, f: &[C], out: &mut [C]) {
        self.smooth_spectrum(f, out);
        self.dft.process(out, Direction::Inverse);
    }

    /// `F[f] - F[e]`, the unitary spectrum of the periodic component.
    pub fn forward(&self, f: &[C], out: &mut [C]) {
        let mut smooth = vec![C::default(); f.len()];
        self.smooth_spectrum(f, &mut smooth);
        out.copy_from_slice(f);
        self.dft.process(out, Direction::Forward);
        for (z, s) in out.iter_mut().zip(&smooth) {
            *z -= *s;
        }
    }
}

/// Even extension to `2M x 2N`: the image, its left-right mirror, its up-down
/// mirror and the double mirror. Opposite edges coincide under circular wrap.
pub fn symmetric_quadruple<T: Sample>(f: &Image<T>) -> Image<T> {
    let (m, n) = f.shape();
    let (m2, n2) = (2 * m, 2 * n);
    let mut data = Vec::with_capacity(m2 * n2);
    for p in 0..m2 {
        let sp = if p < m { p } else { m2 - 1 - p };
        let row = f.row(sp);
        data.extend_from_slice(row);
        data.extend(row.iter().rev());
    }
    Image::from_raw(m2, n2, data)
}

/// Top-left quadrant of an even-sized image.
pub fn crop_quarter<T: Sample>(ext: &Image<T>) -> Result<Image<T>> {
    let (m, n) = ext.shape();
    if m % 2 != 0 || n % 2 != 0 {
        return Err(Error::OddDimensions { rows: m, cols: n });
    }
    ext.crop(0, 0, m / 2, n / 2)
}
