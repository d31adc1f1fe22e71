//! Real orthogonal map built from the DFT.
//!
//! For real `x` of even length `n` with `X = DFT(x)`, the output is
//! `[Re X_0, √2·Re X_1 .. √2·Re X_{n/2-1}, Re X_{n/2}, √2·Im X_1 .. √2·Im X_{n/2-1}] / √n`.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{Permuted, PermuteMode, SquareMixer};
use crate::error::{invalid, Result};
use crate::real::Real;

#[derive(Clone)]
pub struct Fourier<T: Real> {
    size: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for Fourier<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier").field("size", &self.size).finish()
    }
}

impl<T: Real> Fourier<T> {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 || size % 2 != 0 {
            return invalid(format!("Fourier map needs an even length >= 2, got {size}"));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            size,
            fwd: planner.plan_fft_forward(size),
            inv: planner.plan_fft_inverse(size),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn pack(&self, line: &[Complex<T>], out: &mut [T], stride: usize, off: usize) {
        let n = self.size;
        let h = n / 2;
        let s = T::of(1.0 / (n as f64).sqrt());
        let s2 = T::of((2.0 / n as f64).sqrt());
        out[off] = line[0].re * s;
        out[h * stride + off] = line[h].re * s;
        for k in 1..h {
            out[k * stride + off] = line[k].re * s2;
            out[(h + k) * stride + off] = line[k].im * s2;
        }
    }

    fn unpack(&self, src: &[T], stride: usize, off: usize, line: &mut [Complex<T>]) {
        let n = self.size;
        let h = n / 2;
        let s = T::of(1.0 / (n as f64).sqrt());
        let s2 = T::of(1.0 / (2.0 * n as f64).sqrt());
        line[0] = Complex::new(src[off] * s, T::zero());
        line[h] = Complex::new(src[h * stride + off] * s, T::zero());
        for k in 1..h {
            let z = Complex::new(src[k * stride + off] * s2, src[(h + k) * stride + off] * s2);
            line[k] = z;
            line[n - k] = z.conj();
        }
    }
}

pub type FourierFactor<T> = Permuted<Fourier<T>>;

impl<T: Real> FourierFactor<T> {
    pub fn fourier(size: usize, permutation: Vec<usize>, mode: PermuteMode) -> Result<Self> {
        Permuted::new::<T>(Fourier::new(size)?, permutation, mode)
    }
}

impl<T: Real> SquareMixer<T> for Fourier<T> {
    fn size(&self) -> usize {
        self.size
    }

    fn mix(&self, slab: &mut [T], post: usize, transpose: bool) {
        let n = self.size;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n * post];
        if !transpose {
            for (q, line) in buf.chunks_exact_mut(n).enumerate() {
                for (k, z) in line.iter_mut().enumerate() {
                    z.re = slab[k * post + q];
                }
            }
            self.fwd.process(&mut buf);
            for (q, line) in buf.chunks_exact(n).enumerate() {
                self.pack(line, slab, post, q);
            }
        } else {
            for (q, line) in buf.chunks_exact_mut(n).enumerate() {
                self.unpack(slab, post, q, line);
            }
            self.inv.process(&mut buf);
            for (q, line) in buf.chunks_exact(n).enumerate() {
                for (k, z) in line.iter().enumerate() {
                    slab[k * post + q] = z.re;
                }
            }
        }
    }
}

/// Full-length real Fourier map on one vector.
#[derive(Clone, Debug)]
pub struct FourierPreconditioner<T: Real> {
    inner: Fourier<T>,
}

impl<T: Real> FourierPreconditioner<T> {
    pub fn new(size: usize) -> Result<Self> {
        Ok(Self { inner: Fourier::new(size)? })
    }

    pub fn size(&self) -> usize {
        self.inner.size
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        self.run(x, false)
    }

    pub fn apply_transpose(&self, x: &[T]) -> Result<Vec<T>> {
        self.run(x, true)
    }

    fn run(&self, x: &[T], transpose: bool) -> Result<Vec<T>> {
        if x.len() != self.inner.size {
            return invalid(format!(
                "Fourier map of size {} got input of length {}",
                self.inner.size,
                x.len()
            ));
        }
        let mut y = x.to_vec();
        self.inner.mix(&mut y, 1, transpose);
        Ok(y)
    }
}

/// Convenience wrapper: apply the Fourier map to a vector of any even length.
pub fn fourier_preconditioner_apply<T: Real>(x: &[T]) -> Result<Vec<T>> {
    FourierPreconditioner::new(x.len())?.apply(x)
}
