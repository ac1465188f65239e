//! Mixed-radix FFT with a Bluestein fallback, and the unitary 2D DFT built on it.
//!
//! Lengths whose prime factors are all at most [`MAX_DIRECT_RADIX`] use a
//! recursive decimation-in-time transform. Anything else goes through
//! Bluestein's chirp-z algorithm on a power-of-two inner transform.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::image::ComplexImage;

type C = Complex64;

const MAX_DIRECT_RADIX: usize = 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `exp(-2 pi i j k / n)` kernel.
    Forward,
    Inverse,
}

/// Unnormalized 1D transform plan. Immutable, so one plan can serve many threads.
#[derive(Clone, Debug)]
pub struct Fft {
    len: usize,
    kind: Kind,
}

#[derive(Clone, Debug)]
enum Kind {
    Identity,
    Mixed {
        factors: Vec<usize>,
        /// `exp(-2 pi i j / len)` for `j in 0..len`.
        twiddles: Vec<C>,
    },
    Bluestein {
        inner: Box<Fft>,
        chirp: Vec<C>,
        kernel: Vec<C>,
    },
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        if len == 1 {
            return Self {
                len,
                kind: Kind::Identity,
            };
        }
        let factors = factorize(len);
        if factors.iter().all(|&p| p <= MAX_DIRECT_RADIX) {
            return Self {
                len,
                kind: Kind::Mixed {
                    factors,
                    twiddles: root_table(len),
                },
            };
        }

        let m = (2 * len - 1).next_power_of_two();
        let inner = Fft::new(m);
        // k^2 mod 2n keeps the chirp argument small.
        let chirp: Vec<C> = (0..len)
            .map(|k| {
                let k2 = (k as u128 * k as u128 % (2 * len as u128)) as f64;
                C::from_polar(1.0, -PI * k2 / len as f64)
            })
            .collect();
        let mut kernel = vec![C::default(); m];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        let mut scratch = vec![C::default(); inner.scratch_len()];
        inner.process_with_scratch(&mut kernel, &mut scratch, Direction::Forward);
        Self {
            len,
            kind: Kind::Bluestein {
                inner: Box::new(inner),
                chirp,
                kernel,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Scratch length required by [`Fft::process_with_scratch`].
    pub fn scratch_len(&self) -> usize {
        match &self.kind {
            Kind::Identity => 0,
            Kind::Mixed { .. } => self.len + MAX_DIRECT_RADIX,
            Kind::Bluestein { inner, .. } => 2 * inner.len() + inner.scratch_len(),
        }
    }

    pub fn process(&self, buf: &mut [C], direction: Direction) {
        let mut scratch = vec![C::default(); self.scratch_len()];
        self.process_with_scratch(buf, &mut scratch, direction);
    }

    /// In-place unnormalized transform of `buf` (length must equal the plan length).
    pub fn process_with_scratch(&self, buf: &mut [C], scratch: &mut [C], direction: Direction) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        assert!(scratch.len() >= self.scratch_len(), "scratch too short");
        // Inverse via conjugation: conj(F(conj(x))).
        if direction == Direction::Inverse {
            buf.iter_mut().for_each(|z| *z = z.conj());
        }
        match &self.kind {
            Kind::Identity => {}
            Kind::Mixed { factors, twiddles } => {
                let (out, rest) = scratch.split_at_mut(self.len);
                let n = self.len;
                mixed_radix(buf, 0, 1, n, out, factors, twiddles, 1, rest);
                buf.copy_from_slice(out);
            }
            Kind::Bluestein {
                inner,
                chirp,
                kernel,
            } => {
                let m = inner.len();
                let (a, rest) = scratch.split_at_mut(m);
                let (_, inner_scratch) = rest.split_at_mut(m);
                a.iter_mut().for_each(|z| *z = C::default());
                for k in 0..self.len {
                    a[k] = buf[k] * chirp[k];
                }
                inner.process_with_scratch(a, inner_scratch, Direction::Forward);
                for (z, w) in a.iter_mut().zip(kernel) {
                    *z *= w;
                }
                inner.process_with_scratch(a, inner_scratch, Direction::Inverse);
                let scale = 1.0 / m as f64;
                for k in 0..self.len {
                    buf[k] = a[k] * chirp[k] * scale;
                }
            }
        }
        if direction == Direction::Inverse {
            buf.iter_mut().for_each(|z| *z = z.conj());
        }
    }
}

/// Powers of four first, then ascending primes.
fn factorize(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    while n % 4 == 0 {
        out.push(4);
        n /= 4;
    }
    let mut p = 2;
    while p * p <= n {
        while n % p == 0 {
            out.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn root_table(n: usize) -> Vec<C> {
    (0..n)
        .map(|j| {
            // Fold into the first octant-ish range for accuracy: exp(-i theta) with theta in [0, 2pi).
            let theta = 2.0 * PI * j as f64 / n as f64;
            C::new(Float::cos(theta), -Float::sin(theta))
        })
        .collect()
}

/// Out-of-place DIT step: `out[0..n]` receives the DFT of
/// `input[offset], input[offset + stride], ...` (n samples).
/// `tw_stride` maps this level's `n`-th roots onto the global table.
#[allow(clippy::too_many_arguments)]
fn mixed_radix(
    input: &[C],
    offset: usize,
    stride: usize,
    n: usize,
    out: &mut [C],
    factors: &[usize],
    tw: &[C],
    tw_stride: usize,
    tmp: &mut [C],
) {
    if n == 1 {
        out[0] = input[offset];
        return;
    }
    let p = factors[0];
    let m = n / p;
    for q in 0..p {
        mixed_radix(
            input,
            offset + q * stride,
            stride * p,
            m,
            &mut out[q * m..(q + 1) * m],
            &factors[1..],
            tw,
            tw_stride * p,
            tmp,
        );
    }

    let big_n = tw.len();
    match p {
        2 => {
            for k in 0..m {
                let a = out[k];
                let b = out[k + m] * tw[k * tw_stride];
                out[k] = a + b;
                out[k + m] = a - b;
            }
        }
        3 => {
            let s = Float::sqrt(3.0) / 2.0;
            for k in 0..m {
                let t0 = out[k];
                let t1 = out[k + m] * tw[k * tw_stride];
                let t2 = out[k + 2 * m] * tw[2 * k * tw_stride];
                let sum = t1 + t2;
                let diff = t1 - t2;
                // w = -1/2 - i s
                let mid = t0 - sum * 0.5;
                let rot = C::new(diff.im * s, -diff.re * s);
                out[k] = t0 + sum;
                out[k + m] = mid + rot;
                out[k + 2 * m] = mid - rot;
            }
        }
        4 => {
            for k in 0..m {
                let t0 = out[k];
                let t1 = out[k + m] * tw[k * tw_stride];
                let t2 = out[k + 2 * m] * tw[2 * k * tw_stride];
                let t3 = out[k + 3 * m] * tw[3 * k * tw_stride];
                let a = t0 + t2;
                let b = t0 - t2;
                let c = t1 + t3;
                let d = t1 - t3;
                // -i * d
                let nd = C::new(d.im, -d.re);
                out[k] = a + c;
                out[k + m] = b + nd;
                out[k + 2 * m] = a - c;
                out[k + 3 * m] = b - nd;
            }
        }
        _ => {
            let step = big_n / p;
            let t = &mut tmp[..p];
            for k in 0..m {
                for (q, slot) in t.iter_mut().enumerate() {
                    *slot = out[k + q * m] * tw[q * k * tw_stride];
                }
                for r in 0..p {
                    let mut acc = t[0];
                    for (q, v) in t.iter().enumerate().skip(1) {
                        acc += *v * tw[((q * r) % p) * step];
                    }
                    out[k + r * m] = acc;
                }
            }
        }
    }
}

/// Unitary 2D DFT plan for a fixed `rows x cols` shape.
#[derive(Clone, Debug)]
pub struct Dft2 {
    rows: usize,
    cols: usize,
    row_fft: Fft,
    col_fft: Fft,
}

impl Dft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_fft: Fft::new(cols),
            col_fft: Fft::new(rows),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// In-place transform of a row-major buffer, scaled by `1/sqrt(rows*cols)`.
    pub fn process(&self, data: &mut [C], direction: Direction) {
        assert_eq!(data.len(), self.rows * self.cols, "buffer does not match plan");
        let scratch_len = self
            .row_fft
            .scratch_len()
            .max(self.col_fft.scratch_len());
        let mut scratch = vec![C::default(); scratch_len + self.rows];
        let (column, scratch) = scratch.split_at_mut(self.rows);

        for row in data.chunks_exact_mut(self.cols) {
            self.row_fft.process_with_scratch(row, scratch, direction);
        }
        for c in 0..self.cols {
            for (r, slot) in column.iter_mut().enumerate() {
                *slot = data[r * self.cols + c];
            }
            self.col_fft.process_with_scratch(column, scratch, direction);
            for (r, v) in column.iter().enumerate() {
                data[r * self.cols + c] = *v;
            }
        }
        let scale = 1.0 / Float::sqrt((self.rows * self.cols) as f64);
        data.iter_mut().for_each(|z| *z *= scale);
    }

    pub fn transform(&self, img: &ComplexImage, direction: Direction) -> ComplexImage {
        assert_eq!(img.shape(), self.shape(), "image does not match plan");
        let mut data = img.as_slice().to_vec();
        self.process(&mut data, direction);
        ComplexImage::from_raw(self.rows, self.cols, data)
    }
}

/// One-shot unitary 2D DFT. Build a [`Dft2`] when transforming many images of one shape.
pub fn dft2(img: &ComplexImage, direction: Direction) -> ComplexImage {
    Dft2::new(img.rows(), img.cols()).transform(img, direction)
}
