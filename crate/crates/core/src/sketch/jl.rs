//! Johnson–Lindenstrauss distortion helpers.

use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};

use super::{Algorithm, Sketcher};
use crate::error::{invalid, Result};
use crate::real::{norm, Real};
use crate::rng::Stream;

/// `|‖Φx‖₂ − 1|` for a unit vector `x`.
pub fn jl_distortion_trial<T: Real>(s: &Sketcher<T>, x: &[T]) -> Result<f64> {
    let nx = norm(x).to_f64();
    if (nx - 1.0).abs() > 1e-6 {
        return invalid(format!("jl_distortion_trial needs a unit vector, got norm {nx}"));
    }
    let y = s.forward(x)?;
    Ok((norm(&y).to_f64() - 1.0).abs())
}

/// First block equal to the first column of `H_D`, zero elsewhere. Fastfood maps
/// this input to `g₁ · (unit vector)`, so its squared norm is χ²₁.
pub fn ffd_adversarial_input(n: usize, d: usize) -> Result<Vec<f64>> {
    if d == 0 || !d.is_power_of_two() || n % d != 0 {
        return invalid(format!("ffd_adversarial_input needs a power-of-2 d dividing n, got n={n}, d={d}"));
    }
    let mut x = vec![0.0; n];
    let v = 1.0 / (d as f64).sqrt();
    x[..d].iter_mut().for_each(|t| *t = v);
    Ok(x)
}

/// Distribution of random unit test vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitVectorFamily {
    /// Normalized standard Gaussian.
    Gaussian,
    /// Normalized Gaussian on `nnz` uniformly chosen coordinates.
    Sparse { nnz: usize },
}

pub fn sample_unit_vector(family: UnitVectorFamily, n: usize, rng: &mut Stream) -> Vec<f64> {
    let mut x = vec![0.0; n];
    match family {
        UnitVectorFamily::Gaussian => x.iter_mut().for_each(|t| *t = StandardNormal.sample(rng)),
        UnitVectorFamily::Sparse { nnz } => {
            for i in sample(rng, n, nnz.clamp(1, n)) {
                x[i] = StandardNormal.sample(rng);
            }
        }
    }
    let s = 1.0 / norm(&x);
    x.iter_mut().for_each(|t| *t *= s);
    x
}

/// Fraction of `count` unit vectors with distortion at least `eps`.
pub fn failure_rate<T: Real>(
    s: &Sketcher<T>,
    family: UnitVectorFamily,
    count: usize,
    eps: f64,
    rng: &mut Stream,
) -> Result<f64> {
    let mut fails = 0usize;
    for _ in 0..count {
        let x: Vec<T> = sample_unit_vector(family, s.input_dim(), rng)
            .into_iter()
            .map(T::of)
            .collect();
        if jl_distortion_trial(s, &x)? >= eps {
            fails += 1;
        }
    }
    Ok(fails as f64 / count as f64)
}

/// Convenience for the common f64 case.
pub fn sketch_norm_sq(alg: Algorithm, n: usize, d: usize, seed: u64, x: &[f64]) -> Result<f64> {
    let s: Sketcher<f64> = super::SketchSpec::new(alg, n, d, seed).build()?;
    Ok(s.forward(x)?.iter().map(|v| v * v).sum())
}
