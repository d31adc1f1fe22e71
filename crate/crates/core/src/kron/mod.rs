//! Kronecker-structured operators.
//!
//! A vector of length `c_1 * ... * c_K` is viewed as a row-major tensor and each factor
//! is contracted against its own mode in turn.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::real::Real;

pub mod fourier;
pub mod hadamard;
pub mod orth;

pub use fourier::{fourier_preconditioner_apply, Fourier, FourierFactor, FourierPreconditioner};
pub use hadamard::{Hadamard, HadamardFactor};
pub use orth::{sample_haar_factor, OrthFactor};

pub const DEFAULT_MAX_BLOCK: usize = 1024;

/// Slab-parallel work kicks in above this many scalars.
pub(crate) const PAR_THRESHOLD: usize = 1 << 15;

/// Greedy block decomposition of `dimension`: emit `min(n, max_block)`, divide `n` by
/// `max_block`, repeat while `n > 1`, then reverse.
pub fn compute_kron_shapes(dimension: usize, max_block: usize) -> Result<Vec<usize>> {
    if dimension == 0 {
        return invalid("dimension must be at least 1");
    }
    if max_block < 2 || !max_block.is_power_of_two() {
        return invalid(format!("max_block must be a power of 2 >= 2, got {max_block}"));
    }
    let mut n = dimension;
    let mut shape = Vec::new();
    while n > 1 {
        shape.push(n.min(max_block));
        n /= max_block;
    }
    shape.reverse();
    Ok(shape)
}

/// Smallest realizable Kronecker dimension covering `n`.
pub fn padded_dim(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Factorization of an input dimension (and a target dimension) into Kronecker blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KronShape {
    factors: Vec<(usize, usize)>,
    padded_input_dim: usize,
    output_dim: usize,
    max_block: usize,
}

impl KronShape {
    /// Square blocks covering `padded_dim(n)`.
    pub fn square(n: usize, max_block: usize) -> Result<Self> {
        let padded = padded_dim(n);
        let cols = compute_kron_shapes(padded, max_block)?;
        Ok(Self {
            factors: cols.iter().map(|&c| (c, c)).collect(),
            padded_input_dim: padded,
            output_dim: padded,
            max_block,
        })
    }

    /// Blocks of `square(n)` with per-mode row counts chosen so their product is `d`.
    ///
    /// `d` must be a power of 2. Bits of `d` are spread over the modes in proportion
    /// to `log2` of each block: floors first, leftovers to the largest remainders.
    pub fn restricted(n: usize, d: usize, max_block: usize) -> Result<Self> {
        let base = Self::square(n, max_block)?;
        if d == 0 || !d.is_power_of_two() {
            return invalid(format!("target dimension {d} must be a power of 2"));
        }
        if d > base.padded_input_dim {
            return invalid(format!(
                "target dimension {d} exceeds padded input dimension {}",
                base.padded_input_dim
            ));
        }
        let logs: Vec<u32> = base.factors.iter().map(|&(_, c)| c.trailing_zeros()).collect();
        let total: u32 = logs.iter().sum();
        let want = d.trailing_zeros();
        let mut bits: Vec<u32> = Vec::with_capacity(logs.len());
        let mut rema: Vec<(u64, usize)> = Vec::with_capacity(logs.len());
        for (i, &l) in logs.iter().enumerate() {
            let num = u64::from(want) * u64::from(l);
            bits.push((num / u64::from(total.max(1))) as u32);
            rema.push((num % u64::from(total.max(1)), i));
        }
        let mut left = want - bits.iter().sum::<u32>();
        rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        while left > 0 {
            let mut placed = false;
            for &(_, i) in &rema {
                if left > 0 && bits[i] < logs[i] {
                    bits[i] += 1;
                    left -= 1;
                    placed = true;
                }
            }
            if !placed {
                return invalid(format!("cannot distribute target dimension {d} over blocks"));
            }
        }
        let factors = base
            .factors
            .iter()
            .zip(&bits)
            .map(|(&(_, c), &b)| (1usize << b, c))
            .collect();
        Ok(Self { factors, output_dim: d, ..base })
    }

    pub fn factors(&self) -> &[(usize, usize)] {
        &self.factors
    }
    pub fn padded_input_dim(&self) -> usize {
        self.padded_input_dim
    }
    pub fn output_dim(&self) -> usize {
        self.output_dim
    }
    pub fn max_block(&self) -> usize {
        self.max_block
    }
    pub fn rows(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.0).collect()
    }
    pub fn cols(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.1).collect()
    }
}

/// One Kronecker factor, applied along a single tensor mode.
///
/// `src` is a `pre × cols × post` row-major tensor and `dst` is `pre × rows × post`.
pub trait KronFactor<T: Real>: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply_mode(&self, src: &[T], dst: &mut [T], pre: usize, post: usize);
    fn apply_mode_transpose(&self, src: &[T], dst: &mut [T], pre: usize, post: usize);
}

macro_rules! forward_factor {
    ($($ty:ty),*) => {$(
        impl<T: Real, F: KronFactor<T> + ?Sized> KronFactor<T> for $ty {
            fn rows(&self) -> usize {
                (**self).rows()
            }
            fn cols(&self) -> usize {
                (**self).cols()
            }
            fn apply_mode(&self, src: &[T], dst: &mut [T], pre: usize, post: usize) {
                (**self).apply_mode(src, dst, pre, post)
            }
            fn apply_mode_transpose(&self, src: &[T], dst: &mut [T], pre: usize, post: usize) {
                (**self).apply_mode_transpose(src, dst, pre, post)
            }
        }
    )*};
}

forward_factor!(Box<F>, &F);

/// `(F_1 ⊗ ... ⊗ F_K) x`.
pub fn kron_apply<T: Real, F: KronFactor<T>>(x: &[T], factors: &[F]) -> Result<Vec<T>> {
    let cols: usize = factors.iter().map(|f| f.cols()).product();
    if x.len() != cols {
        return invalid(format!(
            "kron_apply: input length {} does not match product of factor columns {cols}",
            x.len()
        ));
    }
    let mut cur = x.to_vec();
    let mut pre = 1usize;
    let mut post = cols;
    for f in factors {
        post /= f.cols();
        let mut next = vec![T::zero(); pre * f.rows() * post];
        f.apply_mode(&cur, &mut next, pre, post);
        pre *= f.rows();
        cur = next;
    }
    Ok(cur)
}

/// `(F_1 ⊗ ... ⊗ F_K)ᵀ v`.
pub fn kron_apply_transpose<T: Real, F: KronFactor<T>>(v: &[T], factors: &[F]) -> Result<Vec<T>> {
    let rows: usize = factors.iter().map(|f| f.rows()).product();
    if v.len() != rows {
        return invalid(format!(
            "kron_apply_transpose: input length {} does not match product of factor rows {rows}",
            v.len()
        ));
    }
    let mut cur = v.to_vec();
    let mut pre = 1usize;
    let mut post = rows;
    for f in factors {
        post /= f.rows();
        let mut next = vec![T::zero(); pre * f.cols() * post];
        f.apply_mode_transpose(&cur, &mut next, pre, post);
        pre *= f.cols();
        cur = next;
    }
    Ok(cur)
}

/// Keep the leading `keep[i]` indices of every mode of a tensor with shape `dims`.
pub fn restrict_modes<T: Copy>(x: &[T], dims: &[usize], keep: &[usize]) -> Vec<T> {
    let out_len: usize = keep.iter().product();
    let mut out = Vec::with_capacity(out_len);
    walk_modes(dims, keep, |src| out.push(x[src]));
    out
}

/// Adjoint of [`restrict_modes`]: zero-filled embedding.
pub fn embed_modes<T: Copy + Default>(v: &[T], dims: &[usize], keep: &[usize]) -> Vec<T> {
    let mut out = vec![T::default(); dims.iter().product()];
    let mut k = 0;
    walk_modes(dims, keep, |dst| {
        out[dst] = v[k];
        k += 1;
    });
    out
}

/// Visits flat indices of the sub-box `keep` inside `dims` in row-major order. The
/// innermost mode is visited as a contiguous run.
fn walk_modes(dims: &[usize], keep: &[usize], mut f: impl FnMut(usize)) {
    if dims.is_empty() {
        f(0);
        return;
    }
    let k = dims.len();
    let mut strides = vec![1usize; k];
    for i in (0..k - 1).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let outer: usize = keep[..k - 1].iter().product();
    let mut idx = vec![0usize; k - 1];
    for _ in 0..outer {
        let base: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        for j in 0..keep[k - 1] {
            f(base + j);
        }
        for m in (0..k - 1).rev() {
            idx[m] += 1;
            if idx[m] < keep[m] {
                break;
            }
            idx[m] = 0;
        }
    }
}

/// Which side of a square mixing matrix `F` carries the permutation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PermuteMode {
    None,
    /// `F[π, :]`
    Rows,
    /// `F[:, π]`
    Cols,
}

/// A square orthogonal transform applied column-wise to a `size × post` slab.
pub trait SquareMixer<T: Real>: Send + Sync {
    fn size(&self) -> usize;
    fn mix(&self, slab: &mut [T], post: usize, transpose: bool);
}

/// Square mixer with a row or column permutation.
#[derive(Clone, Debug)]
pub struct Permuted<M> {
    mixer: M,
    permutation: Vec<usize>,
    mode: PermuteMode,
}

impl<M> Permuted<M> {
    pub fn new<T: Real>(mixer: M, permutation: Vec<usize>, mode: PermuteMode) -> Result<Self>
    where
        M: SquareMixer<T>,
    {
        let n = mixer.size();
        if mode != PermuteMode::None {
            let mut seen = vec![false; n];
            if permutation.len() != n
                || permutation.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
            {
                return invalid(format!("permutation is not a bijection on 0..{n}"));
            }
        }
        Ok(Self { mixer, permutation, mode })
    }

    pub fn unpermuted(mixer: M) -> Self {
        Self { mixer, permutation: Vec::new(), mode: PermuteMode::None }
    }

    pub fn mixer(&self) -> &M {
        &self.mixer
    }
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }
    pub fn mode(&self) -> PermuteMode {
        self.mode
    }
}

fn gather_rows<T: Copy>(slab: &mut [T], tmp: &mut Vec<T>, perm: &[usize], post: usize) {
    tmp.clear();
    tmp.extend_from_slice(slab);
    if post == 1 {
        for (o, &p) in slab.iter_mut().zip(perm) {
            *o = tmp[p];
        }
    } else {
        for (r, &p) in perm.iter().enumerate() {
            slab[r * post..(r + 1) * post].copy_from_slice(&tmp[p * post..(p + 1) * post]);
        }
    }
}

fn scatter_rows<T: Copy>(src: &[T], dst: &mut [T], perm: &[usize], post: usize) {
    if post == 1 {
        for (&x, &p) in src.iter().zip(perm) {
            dst[p] = x;
        }
    } else {
        for (c, &p) in perm.iter().enumerate() {
            dst[p * post..(p + 1) * post].copy_from_slice(&src[c * post..(c + 1) * post]);
        }
    }
}

impl<M> Permuted<M> {
    fn run<T: Real>(&self, src: &[T], dst: &mut [T], post: usize, transpose: bool)
    where
        M: SquareMixer<T>,
    {
        let slab = self.mixer.size() * post;
        // Rows mode is gather-after-mix; its transpose is scatter-before-mix, and
        // the other way round for cols mode.
        let gather_after = match self.mode {
            PermuteMode::None => None,
            PermuteMode::Rows => Some(!transpose),
            PermuteMode::Cols => Some(transpose),
        };
        let body = |tmp: &mut Vec<T>, (s, d): (&[T], &mut [T])| match gather_after {
            None => {
                d.copy_from_slice(s);
                self.mixer.mix(d, post, transpose);
            }
            Some(true) => {
                d.copy_from_slice(s);
                self.mixer.mix(d, post, transpose);
                gather_rows(d, tmp, &self.permutation, post);
            }
            Some(false) => {
                scatter_rows(s, d, &self.permutation, post);
                self.mixer.mix(d, post, transpose);
            }
        };
        if src.len() >= PAR_THRESHOLD && src.len() > slab {
            let group = (PAR_THRESHOLD / slab).max(1) * slab;
            src.par_chunks(group).zip(dst.par_chunks_mut(group)).for_each_init(
                Vec::new,
                |tmp, (sg, dg)| {
                    for pair in sg.chunks(slab).zip(dg.chunks_mut(slab)) {
                        body(tmp, pair);
                    }
                },
            );
        } else {
            let mut tmp = Vec::new();
            for pair in src.chunks(slab).zip(dst.chunks_mut(slab)) {
                body(&mut tmp, pair);
            }
        }
    }
}

impl<T: Real, M: SquareMixer<T>> KronFactor<T> for Permuted<M> {
    fn rows(&self) -> usize {
        self.mixer.size()
    }
    fn cols(&self) -> usize {
        self.mixer.size()
    }
    fn apply_mode(&self, src: &[T], dst: &mut [T], _pre: usize, post: usize) {
        self.run(src, dst, post, false)
    }
    fn apply_mode_transpose(&self, src: &[T], dst: &mut [T], _pre: usize, post: usize) {
        self.run(src, dst, post, true)
    }
}
