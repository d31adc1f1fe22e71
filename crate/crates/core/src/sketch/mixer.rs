use crate::error::Result;
use crate::kron::{
    kron_apply, kron_apply_transpose, sample_haar_factor, FourierFactor, HadamardFactor,
    KronFactor, KronShape, OrthFactor, PermuteMode,
};
use crate::real::Real;
use crate::rng::{derive_stream, permutation};

use super::Preconditioner;

/// Square orthogonal `N × N` transform with Kronecker structure.
#[derive(Clone, Debug)]
pub enum Mixer<T: Real> {
    Hadamard(Vec<HadamardFactor>),
    Fourier(Vec<FourierFactor<T>>),
    Orthogonal(Vec<OrthFactor<T>>),
}

impl<T: Real> Mixer<T> {
    /// Samples one factor per block of `KronShape::square(n, max_block)`; factor `i`
    /// draws from stream `(seed, tag, i)`. Orthogonal factors ignore `mode`.
    pub fn sample(
        kind: Preconditioner,
        n: usize,
        max_block: usize,
        seed: u64,
        tag: &str,
        mode: PermuteMode,
    ) -> Result<Self> {
        let shape = KronShape::square(n, max_block)?;
        let perm = |i: usize, c: usize| match mode {
            PermuteMode::None => Vec::new(),
            _ => permutation(&mut derive_stream(seed, tag, i as u64), c),
        };
        let cols = shape.cols();
        Ok(match kind {
            Preconditioner::Hadamard => Mixer::Hadamard(
                cols.iter()
                    .enumerate()
                    .map(|(i, &c)| HadamardFactor::hadamard(c, perm(i, c), mode))
                    .collect::<Result<_>>()?,
            ),
            Preconditioner::Fft => Mixer::Fourier(
                cols.iter()
                    .enumerate()
                    .map(|(i, &c)| FourierFactor::fourier(c, perm(i, c), mode))
                    .collect::<Result<_>>()?,
            ),
            Preconditioner::KronOrthogonal => Mixer::Orthogonal(
                cols.iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        sample_haar_factor(c, c, &mut derive_stream(seed, tag, i as u64))
                            .map(|q| q.cast())
                    })
                    .collect::<Result<_>>()?,
            ),
        })
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        match self {
            Mixer::Hadamard(f) => kron_apply(x, f),
            Mixer::Fourier(f) => kron_apply(x, f),
            Mixer::Orthogonal(f) => kron_apply(x, f),
        }
    }

    pub fn apply_transpose(&self, x: &[T]) -> Result<Vec<T>> {
        match self {
            Mixer::Hadamard(f) => kron_apply_transpose(x, f),
            Mixer::Fourier(f) => kron_apply_transpose(x, f),
            Mixer::Orthogonal(f) => kron_apply_transpose(x, f),
        }
    }

    pub fn dim(&self) -> usize {
        fn prod<T: Real, F: KronFactor<T>>(f: &[F]) -> usize {
            f.iter().map(|f| f.cols()).product()
        }
        match self {
            Mixer::Hadamard(f) => prod::<T, _>(f),
            Mixer::Fourier(f) => prod(f),
            Mixer::Orthogonal(f) => prod(f),
        }
    }
}
