use rand::Rng;
use rayon::prelude::*;

use super::{check_batch, check_dim, Batch, ModelOracle};
use crate::error::{invalid, Result};
use crate::real::dot;
use crate::rng::{derive_stream, gaussian_vec};

/// Binary logistic regression with an optional ridge term.
///
/// `Batch::Example(i)` is the loss on row `i`; `Batch::Full` averages over rows. The
/// ridge `τ/2 ‖θ‖²` is added to both.
#[derive(Clone, Debug)]
pub struct LogisticOracle {
    n: usize,
    m: usize,
    /// Row-major `m × n`.
    x: Vec<f64>,
    y: Vec<f64>,
    ridge: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticOracle {
    pub fn new(n: usize, x: Vec<f64>, y: Vec<f64>, ridge: f64) -> Result<Self> {
        if n == 0 || x.len() % n != 0 {
            return invalid(format!("design matrix length {} is not a multiple of n = {n}", x.len()));
        }
        let m = x.len() / n;
        if y.len() != m {
            return invalid(format!("expected {m} labels, got {}", y.len()));
        }
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return invalid("labels must be 0 or 1");
        }
        if !(ridge >= 0.0) {
            return invalid("ridge must be non-negative");
        }
        Ok(Self { n, m, x, y, ridge })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n..(i + 1) * self.n]
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    fn rows(&self, batch: Batch) -> Result<(std::ops::Range<usize>, f64)> {
        check_batch(batch, self.m)?;
        Ok(match batch {
            Batch::Full => (0..self.m, 1.0 / self.m as f64),
            Batch::Example(i) => (i..i + 1, 1.0),
        })
    }

    /// `Σ_i c_i x_i` over the batch rows.
    fn combine(&self, rows: std::ops::Range<usize>, coef: impl Fn(usize) -> f64 + Sync) -> Vec<f64> {
        let n = self.n;
        let acc = |mut out: Vec<f64>, i: usize| {
            let c = coef(i);
            if c != 0.0 {
                out.iter_mut().zip(self.row(i)).for_each(|(o, x)| *o += c * x);
            }
            out
        };
        if rows.len() > 16 {
            // Fixed chunking keeps the summation order independent of the thread count.
            let chunks: Vec<Vec<f64>> = rows
                .collect::<Vec<_>>()
                .par_chunks(16)
                .map(|c| c.iter().copied().fold(vec![0.0; n], acc))
                .collect();
            chunks.into_iter().fold(vec![0.0; n], |mut a, c| {
                a.iter_mut().zip(&c).for_each(|(p, q)| *p += q);
                a
            })
        } else {
            rows.fold(vec![0.0; n], acc)
        }
    }

    /// Synthetic data with layer-wise structure; see [`LayeredConfig`].
    pub fn layered(cfg: &LayeredConfig) -> Result<Self> {
        cfg.build()
    }
}

impl ModelOracle for LogisticOracle {
    fn dim(&self) -> usize {
        self.n
    }

    fn num_examples(&self) -> usize {
        self.m
    }

    fn loss(&self, theta: &[f64], batch: Batch) -> Result<f64> {
        check_dim("theta", theta, self.n)?;
        let (rows, w) = self.rows(batch)?;
        let data: f64 = rows
            .map(|i| {
                let z = dot(self.row(i), theta);
                softplus(z) - self.y[i] * z
            })
            .sum();
        Ok(w * data + 0.5 * self.ridge * dot(theta, theta))
    }

    fn gradient(&self, theta: &[f64], batch: Batch) -> Result<Vec<f64>> {
        check_dim("theta", theta, self.n)?;
        let (rows, w) = self.rows(batch)?;
        let mut g = self.combine(rows, |i| w * (sigmoid(dot(self.row(i), theta)) - self.y[i]));
        g.iter_mut().zip(theta).for_each(|(a, t)| *a += self.ridge * t);
        Ok(g)
    }

    fn hvp(&self, theta: &[f64], u: &[f64], batch: Batch) -> Result<Vec<f64>> {
        check_dim("theta", theta, self.n)?;
        check_dim("u", u, self.n)?;
        let (rows, w) = self.rows(batch)?;
        let mut h = self.combine(rows, |i| {
            let x = self.row(i);
            let s = sigmoid(dot(x, theta));
            w * s * (1.0 - s) * dot(x, u)
        });
        h.iter_mut().zip(u).for_each(|(a, t)| *a += self.ridge * t);
        Ok(h)
    }
}

/// Generator for a logistic model whose coordinates are split into contiguous layers.
///
/// Layer `l` has scale `layer_decay^l`. Inside a layer each example is a noisy copy of
/// one of `clusters` centroids, with cluster memberships drawn independently per layer.
/// Labels come from a random teacher.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredConfig {
    pub n: usize,
    pub examples: usize,
    pub layers: usize,
    pub clusters: usize,
    pub layer_decay: f64,
    pub noise: f64,
    pub ridge: f64,
    pub seed: u64,
}

impl Default for LayeredConfig {
    fn default() -> Self {
        Self {
            n: 1 << 14,
            examples: 256,
            layers: 16,
            clusters: 4,
            layer_decay: 0.7,
            noise: 1.0,
            ridge: 0.0,
            seed: 0,
        }
    }
}

impl LayeredConfig {
    pub fn layer_size(&self) -> usize {
        self.n / self.layers
    }

    /// Contiguous coordinate blocks, one per layer.
    pub fn blocks(&self) -> Vec<std::ops::Range<usize>> {
        let s = self.layer_size();
        (0..self.layers).map(|l| l * s..(l + 1) * s).collect()
    }

    fn build(&self) -> Result<LogisticOracle> {
        if self.layers == 0 || self.n % self.layers != 0 {
            return invalid(format!("{} layers do not divide n = {}", self.layers, self.n));
        }
        if self.clusters == 0 || self.examples == 0 {
            return invalid("need at least one cluster and one example");
        }
        let ls = self.layer_size();
        let inv = 1.0 / (ls as f64).sqrt();
        let mut x = vec![0.0; self.examples * self.n];
        for l in 0..self.layers {
            let scale = self.layer_decay.powi(l as i32) * inv;
            let mut crng = derive_stream(self.seed, "layered.centroid", l as u64);
            let centroids: Vec<Vec<f64>> = (0..self.clusters).map(|_| gaussian_vec(&mut crng, ls)).collect();
            let mut arng = derive_stream(self.seed, "layered.assign", l as u64);
            let mut nrng = derive_stream(self.seed, "layered.noise", l as u64);
            for i in 0..self.examples {
                let c = arng.random_range(0..self.clusters);
                let noise = gaussian_vec(&mut nrng, ls);
                let dst = &mut x[i * self.n + l * ls..i * self.n + (l + 1) * ls];
                for ((d, mu), e) in dst.iter_mut().zip(&centroids[c]).zip(&noise) {
                    *d = scale * (mu + self.noise * e);
                }
            }
        }
        let teacher = gaussian_vec(&mut derive_stream(self.seed, "layered.teacher", 0), self.n);
        let mut lrng = derive_stream(self.seed, "layered.label", 0);
        let y = (0..self.examples)
            .map(|i| {
                let p = sigmoid(dot(&x[i * self.n..(i + 1) * self.n], &teacher));
                if lrng.random::<f64>() < p { 1.0 } else { 0.0 }
            })
            .collect();
        LogisticOracle::new(self.n, x, y, self.ridge)
    }
}
