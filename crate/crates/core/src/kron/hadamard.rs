//! Normalized Walsh–Hadamard factors, `H[i][j] = (-1)^popcount(i & j) / sqrt(n)`.

use super::{Permuted, PermuteMode, SquareMixer};
use crate::error::{invalid, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hadamard {
    size: usize,
}

impl Hadamard {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || !size.is_power_of_two() {
            return invalid(format!("Hadamard size must be a power of 2, got {size}"));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

pub type HadamardFactor = Permuted<Hadamard>;

impl HadamardFactor {
    pub fn hadamard(size: usize, permutation: Vec<usize>, mode: PermuteMode) -> Result<Self> {
        Permuted::new::<f64>(Hadamard::new(size)?, permutation, mode)
    }
}

/// Unnormalized in-place transform over the columns of a `c × post` slab.
pub fn fwht_slab<T: Real>(slab: &mut [T], c: usize, post: usize) {
    debug_assert_eq!(slab.len(), c * post);
    if post == 1 {
        fwht_line(slab);
        return;
    }
    let mut h = 1;
    while h < c {
        for i in (0..c).step_by(2 * h) {
            let (lo, hi) = slab[i * post..(i + 2 * h) * post].split_at_mut(h * post);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
}

fn fwht_line<T: Real>(v: &mut [T]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for chunk in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
}

impl<T: Real> SquareMixer<T> for Hadamard {
    fn size(&self) -> usize {
        self.size
    }

    fn mix(&self, slab: &mut [T], post: usize, _transpose: bool) {
        fwht_slab(slab, self.size, post);
        let s = T::of(1.0 / (self.size as f64).sqrt());
        for x in slab.iter_mut() {
            *x = *x * s;
        }
    }
}
