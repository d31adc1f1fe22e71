//! Dense factors with orthonormal rows, including Haar-distributed samples.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{KronFactor, PAR_THRESHOLD};
use crate::error::{invalid, Result};
use crate::real::Real;
use crate::rng::Stream;

/// Row-major `rows × cols` matrix used as a Kronecker factor.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthFactor<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Real> OrthFactor<T> {
    pub fn new(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if entries.len() != rows * cols {
            return invalid(format!(
                "factor entries: expected {} values for {rows}x{cols}, got {}",
                rows * cols,
                entries.len()
            ));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.entries[r * self.cols + c]
    }

    /// The leading `rows` rows.
    pub fn restrict(&self, rows: usize) -> Result<Self> {
        if rows > self.rows {
            return invalid(format!("cannot keep {rows} of {} rows", self.rows));
        }
        Self::new(rows, self.cols, self.entries[..rows * self.cols].to_vec())
    }

    pub fn cast<U: Real>(&self) -> OrthFactor<U> {
        OrthFactor {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&v| U::of(v.to_f64())).collect(),
        }
    }

    /// Largest deviation of `Q Qᵀ` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.rows {
                let d: f64 = (0..self.cols)
                    .map(|k| self.get(i, k).to_f64() * self.get(j, k).to_f64())
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }
}

/// Haar-distributed orthogonal `cols × cols` matrix (QR of a Gaussian matrix with the
/// signs of `diag(R)` absorbed into `Q`), truncated to its first `rows` rows.
pub fn sample_haar_factor(rows: usize, cols: usize, rng: &mut Stream) -> Result<OrthFactor<f64>> {
    if rows > cols {
        return invalid(format!("Haar factor needs rows <= cols, got {rows} > {cols}"));
    }
    if cols == 0 {
        return invalid("Haar factor needs at least one column");
    }
    let g: Vec<f64> = (0..cols * cols).map(|_| StandardNormal.sample(rng)).collect();
    let qr = DMatrix::from_row_slice(cols, cols, &g).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut entries = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        entries.extend(q.row(i).iter().copied());
    }
    OrthFactor::new(rows, cols, entries)
}

/// Splits `pre` contiguous rows across threads for the `post == 1` case.
fn rowwise<T: Real>(src: &[T], dst: &mut [T], k: usize, n: usize, f: impl Fn(&[T], &mut [T], usize) + Sync) {
    let pre = src.len() / k;
    if src.len() >= PAR_THRESHOLD && pre >= 128 {
        let block = 64;
        src.par_chunks(block * k)
            .zip(dst.par_chunks_mut(block * n))
            .for_each(|(s, d)| f(s, d, s.len() / k));
    } else {
        f(src, dst, pre);
    }
}

impl<T: Real> KronFactor<T> for OrthFactor<T> {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }

    fn apply_mode(&self, src: &[T], dst: &mut [T], pre: usize, post: usize) {
        let (r, c) = (self.rows, self.cols);
        if post == 1 {
            // dst (pre × r) = src (pre × c) · Qᵀ
            rowwise(src, dst, c, r, |s, d, m| unsafe {
                T::gemm(m, c, r, T::one(), s.as_ptr(), c as isize, 1, self.entries.as_ptr(), 1, c as isize,
                    T::zero(), d.as_mut_ptr(), r as isize, 1);
            });
            return;
        }
        let work = |(s, d): (&[T], &mut [T])| unsafe {
            T::gemm(r, c, post, T::one(), self.entries.as_ptr(), c as isize, 1, s.as_ptr(), post as isize, 1,
                T::zero(), d.as_mut_ptr(), post as isize, 1);
        };
        if pre > 1 && src.len() >= PAR_THRESHOLD {
            src.par_chunks(c * post).zip(dst.par_chunks_mut(r * post)).for_each(work);
        } else {
            src.chunks(c * post).zip(dst.chunks_mut(r * post)).for_each(work);
        }
    }

    fn apply_mode_transpose(&self, src: &[T], dst: &mut [T], pre: usize, post: usize) {
        let (r, c) = (self.rows, self.cols);
        if post == 1 {
            // dst (pre × c) = src (pre × r) · Q
            rowwise(src, dst, r, c, |s, d, m| unsafe {
                T::gemm(m, r, c, T::one(), s.as_ptr(), r as isize, 1, self.entries.as_ptr(), c as isize, 1,
                    T::zero(), d.as_mut_ptr(), c as isize, 1);
            });
            return;
        }
        let work = |(s, d): (&[T], &mut [T])| unsafe {
            T::gemm(c, r, post, T::one(), self.entries.as_ptr(), 1, c as isize, s.as_ptr(), post as isize, 1,
                T::zero(), d.as_mut_ptr(), post as isize, 1);
        };
        if pre > 1 && src.len() >= PAR_THRESHOLD {
            src.par_chunks(r * post).zip(dst.par_chunks_mut(c * post)).for_each(work);
        } else {
            src.chunks(r * post).zip(dst.chunks_mut(c * post)).for_each(work);
        }
    }
}
