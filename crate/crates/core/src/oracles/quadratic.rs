use super::{check_dim, Batch, ModelOracle};
use crate::error::{invalid, Result};
use crate::kron::{kron_apply, kron_apply_transpose, sample_haar_factor, KronShape, OrthFactor};
use crate::real::dot;
use crate::rng::derive_stream;

/// Eigenbasis of a quadratic model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Basis {
    Identity,
    /// Kronecker product of Haar factors over the blocks of `KronShape::square(n, max_block)`.
    KronHaar { seed: u64, max_block: usize },
}

/// `L(θ) = ½ θᵀAθ + bᵀθ` with `A = U diag(λ) Uᵀ`.
#[derive(Clone, Debug)]
pub struct QuadraticOracle {
    spectrum: Vec<f64>,
    b: Vec<f64>,
    basis: Option<Vec<OrthFactor<f64>>>,
}

impl QuadraticOracle {
    pub fn new(spectrum: Vec<f64>, b: Vec<f64>, basis: Basis) -> Result<Self> {
        let n = spectrum.len();
        if n == 0 {
            return invalid("quadratic oracle needs a non-empty spectrum");
        }
        check_dim("b", &b, n)?;
        check_dim("spectrum", &spectrum, n)?;
        let basis = match basis {
            Basis::Identity => None,
            Basis::KronHaar { seed, max_block } => {
                if !n.is_power_of_two() {
                    return invalid(format!("Kronecker Haar basis needs a power-of-2 dimension, got {n}"));
                }
                let shape = KronShape::square(n, max_block)?;
                Some(
                    shape
                        .cols()
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| sample_haar_factor(c, c, &mut derive_stream(seed, "basis", i as u64)))
                        .collect::<Result<_>>()?,
                )
            }
        };
        Ok(Self { spectrum, b, basis })
    }

    pub fn diagonal(spectrum: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(spectrum, b, Basis::Identity)
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Eigenvalues sorted descending.
    pub fn sorted_eigenvalues(&self) -> Vec<f64> {
        let mut s = self.spectrum.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// `f(A) u` for a function of the eigenvalues.
    fn apply_fn(&self, u: &[f64], f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        match &self.basis {
            None => Ok(u.iter().zip(&self.spectrum).map(|(x, &l)| x * f(l)).collect()),
            Some(q) => {
                // Columns of U = Qᵀ, so Uᵀu = Q u.
                let mut w = kron_apply(u, q)?;
                w.iter_mut().zip(&self.spectrum).for_each(|(x, &l)| *x *= f(l));
                kron_apply_transpose(&w, q)
            }
        }
    }

    pub fn apply_a(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.apply_fn(u, |l| l)
    }

    /// `θ* = −A⁻¹b`.
    pub fn stationary_point(&self) -> Result<Vec<f64>> {
        if self.spectrum.iter().any(|&l| l == 0.0) {
            return invalid("singular quadratic has no unique stationary point");
        }
        Ok(self.apply_fn(&self.b, |l| -1.0 / l)?)
    }

    /// The `i`-th eigenvector (`U e_i`).
    pub fn eigenvector(&self, i: usize) -> Result<Vec<f64>> {
        let n = self.spectrum.len();
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        match &self.basis {
            None => Ok(e),
            Some(q) => kron_apply_transpose(&e, q),
        }
    }
}

impl ModelOracle for QuadraticOracle {
    fn dim(&self) -> usize {
        self.spectrum.len()
    }

    fn loss(&self, theta: &[f64], _batch: Batch) -> Result<f64> {
        check_dim("theta", theta, self.dim())?;
        let at = self.apply_a(theta)?;
        Ok(0.5 * dot(theta, &at) + dot(&self.b, theta))
    }

    fn gradient(&self, theta: &[f64], _batch: Batch) -> Result<Vec<f64>> {
        check_dim("theta", theta, self.dim())?;
        let mut g = self.apply_a(theta)?;
        g.iter_mut().zip(&self.b).for_each(|(x, b)| *x += b);
        Ok(g)
    }

    fn hvp(&self, theta: &[f64], u: &[f64], _batch: Batch) -> Result<Vec<f64>> {
        check_dim("theta", theta, self.dim())?;
        check_dim("u", u, self.dim())?;
        self.apply_a(u)
    }
}

/// `n` eigenvalues: the `outliers`, then `c / i^alpha` for `i = 1..`.
pub fn power_law_with_outliers(n: usize, c: f64, alpha: f64, outliers: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = outliers.iter().copied().take(n).collect();
    let mut i = 1.0f64;
    while s.len() < n {
        s.push(c / i.powf(alpha));
        i += 1.0;
    }
    s
}
