//! Differentiable synthetic models with analytic gradients and Hessian-vector products.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::real::{dot, norm};
use crate::rng::{derive_stream, gaussian_vec};

mod logistic;
mod planted;
mod quadratic;

pub use logistic::{LayeredConfig, LogisticOracle};
pub use planted::PlantedSubspaceOracle;
pub use quadratic::{power_law_with_outliers, Basis, QuadraticOracle};

/// Which data the loss is evaluated on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Batch {
    Full,
    Example(usize),
}

pub trait ModelOracle: Send + Sync {
    fn dim(&self) -> usize;
    /// Number of addressable single examples; `Batch::Example(i)` needs `i < num_examples`.
    fn num_examples(&self) -> usize {
        1
    }
    fn loss(&self, theta: &[f64], batch: Batch) -> Result<f64>;
    fn gradient(&self, theta: &[f64], batch: Batch) -> Result<Vec<f64>>;
    fn hvp(&self, theta: &[f64], u: &[f64], batch: Batch) -> Result<Vec<f64>>;
}

pub fn check_dim(what: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return invalid(format!("{what}: expected length {n}, got {}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return invalid(format!("{what}: non-finite entry"));
    }
    Ok(())
}

pub(crate) fn check_batch(batch: Batch, m: usize) -> Result<()> {
    match batch {
        Batch::Example(i) if i >= m => invalid(format!("example {i} out of range (have {m})")),
        _ => Ok(()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FdReport {
    pub directions: usize,
    pub gradient_rel_err: f64,
    pub hvp_rel_err: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares the analytic gradient and HVP with central differences of `loss` and
/// `gradient`. Probes every coordinate when `dim <= 256`, otherwise 32 random unit
/// directions.
pub fn finite_difference_check(
    oracle: &dyn ModelOracle,
    theta: &[f64],
    batch: Batch,
    step: f64,
    tolerance: f64,
) -> Result<FdReport> {
    let n = oracle.dim();
    check_dim("theta", theta, n)?;
    let dirs: Vec<Vec<f64>> = if n <= 256 {
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect()
    } else {
        let mut rng = derive_stream(0x5eed, "fd", 0);
        (0..32)
            .map(|_| {
                let g = gaussian_vec(&mut rng, n);
                let s = 1.0 / norm(&g);
                g.into_iter().map(|v| v * s).collect()
            })
            .collect()
    };
    let g = oracle.gradient(theta, batch)?;
    let shifted = |u: &[f64], t: f64| -> Vec<f64> { theta.iter().zip(u).map(|(a, b)| a + t * b).collect() };

    let mut fd = Vec::with_capacity(dirs.len());
    let mut an = Vec::with_capacity(dirs.len());
    let mut hvp_err = 0.0f64;
    for u in &dirs {
        let lp = oracle.loss(&shifted(u, step), batch)?;
        let lm = oracle.loss(&shifted(u, -step), batch)?;
        fd.push((lp - lm) / (2.0 * step));
        an.push(dot(&g, u));

        let gp = oracle.gradient(&shifted(u, step), batch)?;
        let gm = oracle.gradient(&shifted(u, -step), batch)?;
        let hv = oracle.hvp(theta, u, batch)?;
        let diff: f64 = gp
            .iter()
            .zip(&gm)
            .zip(&hv)
            .map(|((p, m), h)| ((p - m) / (2.0 * step) - h).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = norm(&hv).max(1e-12);
        hvp_err = hvp_err.max(diff / scale);
    }
    let diff: f64 = fd.iter().zip(&an).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let grad_err = diff / norm(&an).max(1e-12);
    Ok(FdReport {
        directions: dirs.len(),
        gradient_rel_err: grad_err,
        hvp_rel_err: hvp_err,
        tolerance,
        passed: grad_err <= tolerance && hvp_err <= tolerance,
    })
}
