//! Seeded random linear maps `Φ: ℝᴺ → ℝᴰ` with exact transposes.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kron::{
    embed_modes, padded_dim, restrict_modes, sample_haar_factor, KronShape, OrthFactor,
    PermuteMode, DEFAULT_MAX_BLOCK,
};
use crate::real::Real;
use crate::rng::{derive_stream, gaussian_vec, permutation, sign_vec};

pub mod jl;
mod mixer;

pub use mixer::Mixer;

pub const DEFAULT_FJL_M: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dense,
    Fjl,
    Ffd,
    Affd,
    Afjl,
    Qk,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Dense,
        Algorithm::Fjl,
        Algorithm::Ffd,
        Algorithm::Affd,
        Algorithm::Afjl,
        Algorithm::Qk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dense => "dense",
            Algorithm::Fjl => "fjl",
            Algorithm::Ffd => "ffd",
            Algorithm::Affd => "affd",
            Algorithm::Afjl => "afjl",
            Algorithm::Qk => "qk",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    #[default]
    Hadamard,
    Fft,
    KronOrthogonal,
}

impl Preconditioner {
    pub fn name(self) -> &'static str {
        match self {
            Preconditioner::Hadamard => "hadamard",
            Preconditioner::Fft => "fft",
            Preconditioner::KronOrthogonal => "kron_orthogonal",
        }
    }
}

impl fmt::Display for Preconditioner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preconditioner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [Preconditioner::Hadamard, Preconditioner::Fft, Preconditioner::KronOrthogonal]
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preconditioner '{s}'")))
    }
}

fn default_m() -> usize {
    DEFAULT_FJL_M
}

fn default_max_block() -> usize {
    DEFAULT_MAX_BLOCK
}

fn is_default_max_block(b: &usize) -> bool {
    *b == DEFAULT_MAX_BLOCK
}

/// Everything needed to rebuild a sketcher bit for bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SketchSpec {
    pub algorithm: Algorithm,
    pub n: usize,
    pub d: usize,
    #[serde(default)]
    pub preconditioner: Preconditioner,
    pub seed: u64,
    /// FJL sparsity parameter.
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_max_block", skip_serializing_if = "is_default_max_block")]
    pub max_block: usize,
}

impl SketchSpec {
    pub fn new(algorithm: Algorithm, n: usize, d: usize, seed: u64) -> Self {
        Self {
            algorithm,
            n,
            d,
            preconditioner: Preconditioner::Hadamard,
            seed,
            m: DEFAULT_FJL_M,
            max_block: DEFAULT_MAX_BLOCK,
        }
    }

    pub fn with_preconditioner(mut self, p: Preconditioner) -> Self {
        self.preconditioner = p;
        self
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_max_block(mut self, b: usize) -> Self {
        self.max_block = b;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn padded_n(&self) -> usize {
        match self.algorithm {
            Algorithm::Dense => self.n,
            _ => padded_dim(self.n),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return invalid("n and d must be positive");
        }
        let np = self.padded_n();
        if self.d > np {
            return invalid(format!("d = {} exceeds (padded) n = {np}", self.d));
        }
        if self.algorithm != Algorithm::Dense && (self.max_block < 2 || !self.max_block.is_power_of_two()) {
            return invalid(format!("max_block must be a power of 2, got {}", self.max_block));
        }
        match self.algorithm {
            Algorithm::Ffd => {
                if !self.d.is_power_of_two() || np % self.d != 0 {
                    return invalid(format!("ffd needs d a power of 2 dividing {np}, got {}", self.d));
                }
                if self.preconditioner == Preconditioner::KronOrthogonal {
                    return invalid("ffd supports the hadamard and fft preconditioners only");
                }
                if self.preconditioner == Preconditioner::Fft && self.d < 2 {
                    return invalid("ffd with fft needs d >= 2");
                }
            }
            Algorithm::Qk => {
                KronShape::restricted(self.n, self.d, self.max_block)?;
            }
            Algorithm::Fjl => {
                if self.m < 2 {
                    return invalid("fjl needs m >= 2");
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn build<T: Real>(&self) -> Result<Sketcher<T>> {
        Sketcher::new(*self)
    }
}

/// Row-compressed sparse `D × N` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows<T> {
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T> SparseRows<T> {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// One Fastfood block `H·G·Π·H·B` acting on ℝᴰ.
#[derive(Clone, Debug)]
pub struct FfdBlock<T> {
    pub signs: Vec<T>,
    pub gauss: Vec<T>,
    /// `(Πy)[i] = y[perm[i]]`
    pub perm: Vec<usize>,
}

/// The sampled random components of a sketcher.
#[derive(Clone, Debug)]
pub enum Components<T: Real> {
    /// Row-major `D × N`, entries `N(0, 1/D)`.
    Dense { matrix: Vec<T> },
    /// `σ · G_s · P · B`
    Fjl { signs: Option<Vec<T>>, mixer: Mixer<T>, sparse: SparseRows<T> },
    /// Forward is `Σ_b (H G_b Π_b H B_b)ᵀ x_b`.
    Ffd { mixer: Mixer<T>, blocks: Vec<FfdBlock<T>> },
    /// `R_D(σ · M₂ · G · M₁ · B)`
    Affd { signs: Option<Vec<T>>, m1: Mixer<T>, gauss: Vec<T>, m2: Mixer<T> },
    /// `R_D(σ · G · M₁ · B)`
    Afjl { signs: Option<Vec<T>>, m1: Mixer<T>, gauss: Vec<T> },
    /// `σ · ⊗ Q_i[:D_i]`, stored as full square factors.
    Qk { factors: Vec<OrthFactor<T>>, shape: KronShape },
}

/// An immutable sketch `Φ` built from a [`SketchSpec`].
#[derive(Clone, Debug)]
pub struct Sketcher<T: Real = f64> {
    spec: SketchSpec,
    n_pad: usize,
    sigma: T,
    components: Components<T>,
}

fn cast<T: Real>(v: Vec<f64>) -> Vec<T> {
    v.into_iter().map(T::of).collect()
}

fn mul_in_place<T: Real>(x: &mut [T], d: &[T]) {
    for (a, &b) in x.iter_mut().zip(d) {
        *a = *a * b;
    }
}

fn scale<T: Real>(x: &mut [T], s: T) {
    for a in x.iter_mut() {
        *a = *a * s;
    }
}

impl<T: Real> Sketcher<T> {
    pub fn new(spec: SketchSpec) -> Result<Self> {
        spec.validate()?;
        let seed = spec.seed;
        let np = spec.padded_n();
        let d = spec.d;
        let sigma = T::of((np as f64 / d as f64).sqrt());
        let pc = spec.preconditioner;
        let signs = |tag: &str| -> Option<Vec<T>> {
            (pc != Preconditioner::KronOrthogonal)
                .then(|| cast(sign_vec(&mut derive_stream(seed, tag, 0), np)))
        };
        let components = match spec.algorithm {
            Algorithm::Dense => {
                let s = 1.0 / (d as f64).sqrt();
                let mut rng = derive_stream(seed, "dense", 0);
                let matrix = (0..d * spec.n)
                    .map(|_| {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        T::of(g * s)
                    })
                    .collect();
                Components::Dense { matrix }
            }
            Algorithm::Fjl => Components::Fjl {
                signs: signs("B"),
                mixer: Mixer::sample(pc, np, spec.max_block, seed, "P", PermuteMode::None)?,
                sparse: sample_fjl_sparse(seed, d, np, spec.m),
            },
            Algorithm::Affd => Components::Affd {
                signs: signs("B"),
                m1: Mixer::sample(pc, np, spec.max_block, seed, "H1", PermuteMode::Rows)?,
                gauss: cast(gaussian_vec(&mut derive_stream(seed, "G", 0), np)),
                m2: Mixer::sample(pc, np, spec.max_block, seed, "H2", PermuteMode::Cols)?,
            },
            Algorithm::Afjl => Components::Afjl {
                signs: signs("B"),
                m1: Mixer::sample(pc, np, spec.max_block, seed, "H1", PermuteMode::Rows)?,
                gauss: cast(gaussian_vec(&mut derive_stream(seed, "G", 0), np)),
            },
            Algorithm::Ffd => {
                let blocks = (0..np / d)
                    .map(|b| FfdBlock {
                        signs: cast(sign_vec(&mut derive_stream(seed, "ffd.B", b as u64), d)),
                        gauss: cast(gaussian_vec(&mut derive_stream(seed, "ffd.G", b as u64), d)),
                        perm: permutation(&mut derive_stream(seed, "ffd.P", b as u64), d),
                    })
                    .collect();
                Components::Ffd {
                    mixer: Mixer::sample(pc, d, spec.max_block, seed, "ffd.H", PermuteMode::None)?,
                    blocks,
                }
            }
            Algorithm::Qk => {
                let shape = KronShape::restricted(spec.n, d, spec.max_block)?;
                let factors = shape
                    .cols()
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        sample_haar_factor(c, c, &mut derive_stream(seed, "Q", i as u64))
                            .map(|q| q.cast())
                    })
                    .collect::<Result<_>>()?;
                Components::Qk { factors, shape }
            }
        };
        Ok(Self { spec, n_pad: np, sigma, components })
    }

    pub fn spec(&self) -> &SketchSpec {
        &self.spec
    }
    pub fn input_dim(&self) -> usize {
        self.spec.n
    }
    pub fn output_dim(&self) -> usize {
        self.spec.d
    }
    pub fn padded_dim(&self) -> usize {
        self.n_pad
    }
    pub fn sigma(&self) -> T {
        self.sigma
    }
    pub fn components(&self) -> &Components<T> {
        &self.components
    }

    fn check_input(&self, x: &[T], expected: usize, what: &str) -> Result<()> {
        if x.len() != expected {
            return invalid(format!("{what}: expected length {expected}, got {}", x.len()));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return invalid(format!("{what}: non-finite value at index {i}"));
        }
        Ok(())
    }

    /// `Φ x`
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x, self.spec.n, "forward")?;
        let d = self.spec.d;
        let sigma = self.sigma;
        let padded = || {
            let mut v = x.to_vec();
            v.resize(self.n_pad, T::zero());
            v
        };
        let out = match &self.components {
            Components::Dense { matrix } => {
                let n = self.spec.n;
                let mut y = vec![T::zero(); d];
                // SAFETY: matrix is d × n, x is n × 1, y is d × 1, all contiguous.
                unsafe {
                    T::gemm(d, n, 1, T::one(), matrix.as_ptr(), n as isize, 1, x.as_ptr(), 1, 1,
                        T::zero(), y.as_mut_ptr(), 1, 1);
                }
                y
            }
            Components::Fjl { signs, mixer, sparse } => {
                let mut v = padded();
                if let Some(b) = signs {
                    mul_in_place(&mut v, b);
                }
                let v = mixer.apply(&v)?;
                (0..d)
                    .map(|i| {
                        let (lo, hi) = (sparse.row_ptr[i], sparse.row_ptr[i + 1]);
                        let acc: T = sparse.col_idx[lo..hi]
                            .iter()
                            .zip(&sparse.values[lo..hi])
                            .map(|(&j, &g)| g * v[j])
                            .sum();
                        acc * sigma
                    })
                    .collect()
            }
            Components::Affd { signs, m1, gauss, m2 } => {
                let mut v = padded();
                if let Some(b) = signs {
                    mul_in_place(&mut v, b);
                }
                let mut v = m1.apply(&v)?;
                mul_in_place(&mut v, gauss);
                let mut v = m2.apply(&v)?;
                v.truncate(d);
                scale(&mut v, sigma);
                v
            }
            Components::Afjl { signs, m1, gauss } => {
                let mut v = padded();
                if let Some(b) = signs {
                    mul_in_place(&mut v, b);
                }
                let mut v = m1.apply(&v)?;
                v.truncate(d);
                mul_in_place(&mut v, &gauss[..d]);
                scale(&mut v, sigma);
                v
            }
            Components::Ffd { mixer, blocks } => {
                let v = padded();
                let mut out = vec![T::zero(); d];
                let mut u = vec![T::zero(); d];
                for (b, blk) in blocks.iter().enumerate() {
                    let xb = &v[b * d..(b + 1) * d];
                    if xb.iter().all(|t| t.is_zero()) {
                        continue;
                    }
                    let mut t = mixer.apply_transpose(xb)?;
                    mul_in_place(&mut t, &blk.gauss);
                    for (i, &p) in blk.perm.iter().enumerate() {
                        u[p] = t[i];
                    }
                    let w = mixer.apply_transpose(&u)?;
                    for ((o, &wi), &s) in out.iter_mut().zip(&w).zip(&blk.signs) {
                        *o = *o + wi * s;
                    }
                }
                out
            }
            Components::Qk { factors, shape } => {
                let y = crate::kron::kron_apply(&padded(), factors)?;
                let mut v = restrict_modes(&y, &shape.cols(), &shape.rows());
                scale(&mut v, sigma);
                v
            }
        };
        Ok(out)
    }

    /// `Φᵀ v`
    pub fn transpose(&self, v: &[T]) -> Result<Vec<T>> {
        self.check_input(v, self.spec.d, "transpose")?;
        let d = self.spec.d;
        let np = self.n_pad;
        let sigma = self.sigma;
        let mut out = match &self.components {
            Components::Dense { matrix } => {
                let n = self.spec.n;
                let mut y = vec![T::zero(); n];
                // SAFETY: matrixᵀ is n × d with strides (1, n); v is d × 1.
                unsafe {
                    T::gemm(n, d, 1, T::one(), matrix.as_ptr(), 1, n as isize, v.as_ptr(), 1, 1,
                        T::zero(), y.as_mut_ptr(), 1, 1);
                }
                y
            }
            Components::Fjl { signs, mixer, sparse } => {
                let mut y = vec![T::zero(); np];
                for i in 0..d {
                    let vi = v[i] * sigma;
                    for k in sparse.row_ptr[i]..sparse.row_ptr[i + 1] {
                        let j = sparse.col_idx[k];
                        y[j] = y[j] + sparse.values[k] * vi;
                    }
                }
                let mut y = mixer.apply_transpose(&y)?;
                if let Some(b) = signs {
                    mul_in_place(&mut y, b);
                }
                y
            }
            Components::Affd { signs, m1, gauss, m2 } => {
                let mut y = v.to_vec();
                scale(&mut y, sigma);
                y.resize(np, T::zero());
                let mut y = m2.apply_transpose(&y)?;
                mul_in_place(&mut y, gauss);
                let mut y = m1.apply_transpose(&y)?;
                if let Some(b) = signs {
                    mul_in_place(&mut y, b);
                }
                y
            }
            Components::Afjl { signs, m1, gauss } => {
                let mut y = v.to_vec();
                mul_in_place(&mut y, &gauss[..d]);
                scale(&mut y, sigma);
                y.resize(np, T::zero());
                let mut y = m1.apply_transpose(&y)?;
                if let Some(b) = signs {
                    mul_in_place(&mut y, b);
                }
                y
            }
            Components::Ffd { mixer, blocks } => {
                let mut y = Vec::with_capacity(np);
                let mut t2 = vec![T::zero(); d];
                for blk in blocks {
                    let mut t = v.to_vec();
                    mul_in_place(&mut t, &blk.signs);
                    let t = mixer.apply(&t)?;
                    for (i, &p) in blk.perm.iter().enumerate() {
                        t2[i] = t[p] * blk.gauss[i];
                    }
                    y.extend(mixer.apply(&t2)?);
                }
                y
            }
            Components::Qk { factors, shape } => {
                let mut e = embed_modes(v, &shape.cols(), &shape.rows());
                scale(&mut e, sigma);
                crate::kron::kron_apply_transpose(&e, factors)?
            }
        };
        out.truncate(self.spec.n);
        Ok(out)
    }
}

/// Bernoulli(q) sparsity with `q = min(1, ln²m / N)`, non-zeros `N(0, 1/(qN))`.
fn sample_fjl_sparse<T: Real>(seed: u64, d: usize, n: usize, m: usize) -> SparseRows<T> {
    let q = ((m as f64).ln().powi(2) / n as f64).min(1.0);
    let s = 1.0 / (q * n as f64).sqrt();
    let mut row_ptr = Vec::with_capacity(d + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    let log1mq = (1.0 - q).ln();
    for i in 0..d {
        let mut rng = derive_stream(seed, "fjl.G", i as u64);
        let mut j = 0usize;
        loop {
            if q < 1.0 {
                let u: f64 = 1.0 - rng.random::<f64>();
                let skip = (u.ln() / log1mq).floor();
                if !skip.is_finite() || skip >= (n - j) as f64 {
                    break;
                }
                j += skip as usize;
            }
            if j >= n {
                break;
            }
            let g: f64 = StandardNormal.sample(&mut rng);
            col_idx.push(j);
            values.push(T::of(g * s));
            j += 1;
        }
        row_ptr.push(col_idx.len());
    }
    SparseRows { row_ptr, col_idx, values }
}

/// Object-safe view of a 64-bit sketch, used by the applications.
pub trait LinearSketch: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn transpose(&self, v: &[f64]) -> Result<Vec<f64>>;
    fn describe(&self) -> String;
}

impl LinearSketch for Sketcher<f64> {
    fn input_dim(&self) -> usize {
        self.spec.n
    }
    fn output_dim(&self) -> usize {
        self.spec.d
    }
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Sketcher::forward(self, x)
    }
    fn transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        Sketcher::transpose(self, v)
    }
    fn describe(&self) -> String {
        self.spec.algorithm.to_string()
    }
}

/// `Φ = I_N`.
#[derive(Clone, Copy, Debug)]
pub struct IdentitySketch {
    pub n: usize,
}

impl LinearSketch for IdentitySketch {
    fn input_dim(&self) -> usize {
        self.n
    }
    fn output_dim(&self) -> usize {
        self.n
    }
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        crate::error::ensure_len("forward", x, self.n)?;
        Ok(x.to_vec())
    }
    fn transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        crate::error::ensure_len("transpose", v, self.n)?;
        Ok(v.to_vec())
    }
    fn describe(&self) -> String {
        "identity".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_is_canonical() {
        let s = SketchSpec::new(Algorithm::Affd, 4096, 256, 7);
        assert_eq!(
            s.to_json(),
            r#"{"algorithm":"affd","n":4096,"d":256,"preconditioner":"hadamard","seed":7,"m":1024}"#
        );
        assert_eq!(SketchSpec::from_json(&s.to_json()).unwrap(), s);
        let k = s.with_preconditioner(Preconditioner::KronOrthogonal).with_max_block(32);
        assert!(k.to_json().contains(r#""preconditioner":"kron_orthogonal""#));
        assert_eq!(SketchSpec::from_json(&k.to_json()).unwrap(), k);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(SketchSpec::new(Algorithm::Ffd, 64, 12, 0).build::<f64>().is_err());
        assert!(SketchSpec::new(Algorithm::Qk, 64, 24, 0).build::<f64>().is_err());
        assert!(SketchSpec::new(Algorithm::Affd, 64, 128, 0).build::<f64>().is_err());
        assert!(SketchSpec::new(Algorithm::Dense, 0, 1, 0).build::<f64>().is_err());
        let s = SketchSpec::new(Algorithm::Ffd, 64, 8, 0)
            .with_preconditioner(Preconditioner::KronOrthogonal);
        assert!(s.build::<f64>().is_err());
    }

    #[test]
    fn forward_rejects_bad_input() {
        let s = SketchSpec::new(Algorithm::Affd, 64, 8, 1).build::<f64>().unwrap();
        assert!(s.forward(&[0.0; 63]).is_err());
        let mut x = vec![0.0; 64];
        x[3] = f64::NAN;
        assert!(s.forward(&x).is_err());
        assert!(s.transpose(&[0.0; 9]).is_err());
    }

    #[test]
    fn fjl_density_tracks_q() {
        let sp: SparseRows<f64> = sample_fjl_sparse(3, 64, 4096, 1024);
        let q = (1024f64).ln().powi(2) / 4096.0;
        let expect = q * 64.0 * 4096.0;
        let got = sp.nnz() as f64;
        assert!((got - expect).abs() < 4.0 * expect.sqrt(), "{got} vs {expect}");
    }
}
