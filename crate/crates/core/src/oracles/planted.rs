use nalgebra::DMatrix;

use super::{check_dim, Batch, ModelOracle};
use crate::error::{invalid, Result};
use crate::rng::{derive_stream, gaussian_vec};

/// `L(θ) = ‖Sᵀθ − t‖²` for an orthonormal `S ∈ ℝ^{N×d*}`.
#[derive(Clone, Debug)]
pub struct PlantedSubspaceOracle {
    n: usize,
    k: usize,
    /// Row-major `d* × N`, i.e. `Sᵀ`.
    st: Vec<f64>,
    target: Vec<f64>,
}

impl PlantedSubspaceOracle {
    /// Random planted subspace of dimension `k` with a unit-variance target.
    pub fn random(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > n {
            return invalid(format!("planted dimension must be in 1..={n}, got {k}"));
        }
        let g = gaussian_vec(&mut derive_stream(seed, "planted.S", 0), n * k);
        let q = DMatrix::from_column_slice(n, k, &g).qr().q();
        let mut st = Vec::with_capacity(n * k);
        for j in 0..k {
            st.extend(q.column(j).iter().copied());
        }
        let target = gaussian_vec(&mut derive_stream(seed, "planted.t", 0), k);
        Ok(Self { n, k, st, target })
    }

    pub fn planted_dim(&self) -> usize {
        self.k
    }

    fn project(&self, theta: &[f64]) -> Vec<f64> {
        self.st
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn lift(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, &c) in self.st.chunks_exact(self.n).zip(r) {
            out.iter_mut().zip(row).for_each(|(o, s)| *o += c * s);
        }
        out
    }

    /// Component of `v` orthogonal to the planted subspace.
    pub fn orthogonal_part(&self, v: &[f64]) -> Vec<f64> {
        let p = self.lift(&self.project(v));
        v.iter().zip(&p).map(|(a, b)| a - b).collect()
    }
}

impl ModelOracle for PlantedSubspaceOracle {
    fn dim(&self) -> usize {
        self.n
    }

    fn loss(&self, theta: &[f64], _batch: Batch) -> Result<f64> {
        check_dim("theta", theta, self.n)?;
        Ok(self.project(theta).iter().zip(&self.target).map(|(a, t)| (a - t).powi(2)).sum())
    }

    fn gradient(&self, theta: &[f64], _batch: Batch) -> Result<Vec<f64>> {
        check_dim("theta", theta, self.n)?;
        let r: Vec<f64> = self.project(theta).iter().zip(&self.target).map(|(a, t)| 2.0 * (a - t)).collect();
        Ok(self.lift(&r))
    }

    fn hvp(&self, theta: &[f64], u: &[f64], _batch: Batch) -> Result<Vec<f64>> {
        check_dim("theta", theta, self.n)?;
        check_dim("u", u, self.n)?;
        let r: Vec<f64> = self.project(u).iter().map(|a| 2.0 * a).collect();
        Ok(self.lift(&r))
    }
}
