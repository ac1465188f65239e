//! Dense row-major 2D grids.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use num_complex::Complex64;
use num_traits::Float;

use crate::{Error, Result};

/// Element types an [`Image`] can hold.
pub trait Sample: Copy + Default + PartialEq + core::fmt::Debug {
    fn is_finite(&self) -> bool;
}

impl Sample for f64 {
    fn is_finite(&self) -> bool {
        Float::is_finite(*self)
    }
}

impl Sample for Complex64 {
    fn is_finite(&self) -> bool {
        Float::is_finite(self.re) && Float::is_finite(self.im)
    }
}

/// A `rows x cols` grid stored row-major. Row index is the vertical (`y`) axis.
///
/// Every constructor rejects empty shapes and non-finite samples, so a live
/// `Image` always holds finite data.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type RealImage = Image<f64>;
pub type ComplexImage = Image<Complex64>;

impl<T: Sample> Image<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        check_shape(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::BufferLength {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i / cols,
                col: i % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::filled(rows, cols, T::default())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        check_shape(rows, cols)?;
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Skips the finiteness scan; the caller guarantees shape and values.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        (row < self.rows && col < self.cols).then(|| self.data[row * self.cols + col])
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Element-wise map. Fails only if `f` produces a non-finite value.
    pub fn map<U: Sample>(&self, f: impl FnMut(T) -> U) -> Result<Image<U>> {
        Image::new(self.rows, self.cols, self.data.iter().copied().map(f).collect())
    }

    pub(crate) fn map_raw<U: Sample>(&self, f: impl FnMut(T) -> U) -> Image<U> {
        Image::from_raw(self.rows, self.cols, self.data.iter().copied().map(f).collect())
    }

    pub fn zip_map<U: Sample, V: Sample>(
        &self,
        other: &Image<U>,
        mut f: impl FnMut(T, U) -> V,
    ) -> Result<Image<V>> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(other.as_slice())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Image::new(self.rows, self.cols, data)
    }

    pub fn check_same_shape<U>(&self, other: &Image<U>) -> Result<()> {
        if (self.rows, self.cols) == (other.rows, other.cols) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            })
        }
    }

    /// Rejects grids with a single row or column.
    pub fn require_2x2(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            Err(Error::DegenerateAxis {
                rows: self.rows,
                cols: self.cols,
            })
        } else {
            Ok(())
        }
    }

    /// Copies the `rows x cols` window whose top-left corner is `(row0, col0)`.
    pub fn crop(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Result<Self> {
        check_shape(rows, cols)?;
        if row0 + rows > self.rows || col0 + cols > self.cols {
            return Err(Error::RegionOutOfBounds {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in row0..row0 + rows {
            let start = r * self.cols + col0;
            data.extend_from_slice(&self.data[start..start + cols]);
        }
        Ok(Self::from_raw(rows, cols, data))
    }
}

impl<T> Index<(usize, usize)> for Image<T> {
    type Output = T;

    fn index(&self, (row, col): (usize, usize)) -> &T {
        assert!(row < self.rows && col < self.cols, "pixel index out of bounds");
        &self.data[row * self.cols + col]
    }
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        Err(Error::Empty { rows, cols })
    } else {
        Ok(())
    }
}

impl RealImage {
    pub fn to_complex(&self) -> ComplexImage {
        self.map_raw(|v| Complex64::new(v, 0.0))
    }

    /// `amplitude * exp(i * phase)`.
    pub fn polar(amplitude: &RealImage, phase: &RealImage) -> Result<ComplexImage> {
        amplitude.zip_map(phase, Complex64::from_polar)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

impl ComplexImage {
    pub fn re(&self) -> RealImage {
        self.map_raw(|z| z.re)
    }

    pub fn im(&self) -> RealImage {
        self.map_raw(|z| z.im)
    }

    pub fn abs(&self) -> RealImage {
        self.map_raw(|z| z.norm())
    }

    pub fn norm_sqr(&self) -> RealImage {
        self.map_raw(|z| z.norm_sqr())
    }

    /// Phase in `(-pi, pi]`.
    pub fn arg(&self) -> RealImage {
        self.map_raw(|z| wrap_angle(z.arg()))
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        Float::sqrt(self.sum_sq())
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use core::f64::consts::PI;
    let tau = 2.0 * PI;
    let mut t = theta - tau * Float::floor(theta / tau);
    // t in [0, 2pi)
    if t > PI {
        t -= tau;
    }
    t
}
