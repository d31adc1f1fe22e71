//! Arnoldi iteration with full re-orthogonalization and spectral summaries.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::calculus::LinearOperator;
use crate::error::{invalid, Error, Result};
use crate::real::{dot, norm};
use crate::rng::{derive_stream, gaussian_vec};

#[derive(Clone, Debug)]
pub struct KrylovResult {
    /// `D × m`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// `(m + 1) × m` upper Hessenberg.
    pub hessenberg: DMatrix<f64>,
    /// Sorted descending.
    pub ritz_values: Vec<f64>,
    /// Iterations completed.
    pub m: usize,
    pub breakdown: bool,
}

impl KrylovResult {
    /// Largest deviation of `VᵀV` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.basis.transpose() * &self.basis;
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - t).abs());
            }
        }
        worst
    }

    /// Leading `m × m` block of the Hessenberg matrix.
    pub fn square_block(&self) -> DMatrix<f64> {
        self.hessenberg.rows(0, self.m).into_owned()
    }
}

const BREAKDOWN_TOL: f64 = 1e-12;

/// `m` steps of Arnoldi from a Gaussian start vector drawn from `seed`, with two-pass
/// modified Gram–Schmidt. Stops early on breakdown.
pub fn arnoldi(op: &dyn LinearOperator, m: usize, seed: u64) -> Result<KrylovResult> {
    let d = op.dim();
    if m == 0 || m > d {
        return invalid(format!("Arnoldi needs 1 <= m <= D = {d}, got m = {m}"));
    }
    let mut q0 = gaussian_vec(&mut derive_stream(seed, "arnoldi.start", 0), d);
    let s = 1.0 / norm(&q0);
    q0.iter_mut().for_each(|v| *v *= s);

    let mut basis: Vec<Vec<f64>> = vec![q0];
    let mut h = DMatrix::<f64>::zeros(m + 1, m);
    let mut done = 0;
    let mut breakdown = false;
    for j in 0..m {
        let mut w = op.apply(&basis[j])?;
        if w.len() != d {
            return invalid(format!("operator returned length {}, expected {d}", w.len()));
        }
        if let Some(k) = w.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                iteration: j,
                message: format!("operator output has a non-finite entry at index {k}"),
            });
        }
        let scale = norm(&w).max(1.0);
        for _pass in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = dot(q, &w);
                h[(i, j)] += c;
                w.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let beta = norm(&w);
        h[(j + 1, j)] = beta;
        done = j + 1;
        if beta < BREAKDOWN_TOL * scale {
            breakdown = true;
            break;
        }
        if j + 1 < m {
            w.iter_mut().for_each(|v| *v /= beta);
            basis.push(w);
        }
    }
    basis.truncate(done);
    let basis_m = DMatrix::from_fn(d, done, |r, c| basis[c][r]);
    let hessenberg = h.view((0, 0), (done + 1, done)).into_owned();
    let ritz_values = ritz_from_hessenberg(&hessenberg.rows(0, done).into_owned())?;
    Ok(KrylovResult { basis: basis_m, hessenberg, ritz_values, m: done, breakdown })
}

fn is_symmetric_tridiagonal(h: &DMatrix<f64>) -> bool {
    let scale = h.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let n = h.nrows();
    for i in 0..n {
        for j in 0..n {
            let v = h[(i, j)];
            let ok = if i.abs_diff(j) > 1 { v.abs() <= 1e-8 * scale } else { (v - h[(j, i)]).abs() <= 1e-8 * scale };
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Eigenvalues of a square Hessenberg block, descending. A symmetric solver is used
/// when the block is tridiagonal and symmetric, otherwise the real parts of the
/// general eigenvalues are returned.
pub fn ritz_from_hessenberg(h: &DMatrix<f64>) -> Result<Vec<f64>> {
    if h.nrows() != h.ncols() {
        return invalid(format!("Hessenberg block must be square, got {}x{}", h.nrows(), h.ncols()));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric { iteration: h.nrows(), message: "non-finite Hessenberg entry".into() });
    }
    if h.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut vals: Vec<f64> = if is_symmetric_tridiagonal(h) {
        let sym = (h + h.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
    } else {
        h.clone().complex_eigenvalues().iter().map(|z| z.re).collect()
    };
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

/// `mean_i |est_i − true_i| / |true_i|`
pub fn relative_mae(estimated: &[f64], truth: &[f64]) -> Result<f64> {
    if estimated.len() != truth.len() || truth.is_empty() {
        return invalid(format!(
            "relative_mae needs equal non-empty lengths, got {} and {}",
            estimated.len(),
            truth.len()
        ));
    }
    if truth.iter().any(|&t| t == 0.0) {
        return invalid("relative_mae: zero true eigenvalue");
    }
    Ok(estimated.iter().zip(truth).map(|(e, t)| (e - t).abs() / t.abs()).sum::<f64>() / truth.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub top_k: Vec<f64>,
    pub top_negative: Option<f64>,
    /// `|λ⁻_max| / λ⁺_max`; `None` when there is no positive value.
    pub rneg: Option<f64>,
    /// Count of `n >= 2` with `λ_n / λ_1 > threshold`.
    pub outliers: usize,
    pub threshold: f64,
}

pub fn spectrum_report(ritz: &[f64], k: usize, threshold: f64) -> Result<SpectrumReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return invalid(format!("outlier threshold must be in (0, 1), got {threshold}"));
    }
    let mut pos: Vec<f64> = ritz.iter().copied().filter(|&v| v > 0.0).collect();
    pos.sort_by(|a, b| b.total_cmp(a));
    let top_negative = ritz.iter().copied().filter(|&v| v < 0.0).min_by(|a, b| a.total_cmp(b));
    let (rneg, outliers) = match pos.first() {
        Some(&l1) => (
            Some(top_negative.map_or(0.0, |n| n.abs() / l1)),
            pos.iter().skip(1).filter(|&&v| v / l1 > threshold).count(),
        ),
        None => (None, 0),
    };
    Ok(SpectrumReport { top_k: pos.into_iter().take(k).collect(), top_negative, rneg, outliers, threshold })
}

/// Ritz vectors in ℝᴰ for the `count` largest Ritz values of a symmetric run.
pub fn ritz_vectors(result: &KrylovResult, count: usize) -> Vec<Vec<f64>> {
    let t = result.square_block();
    let sym = (&t + t.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order
        .into_iter()
        .take(count)
        .map(|i| {
            let y: DVector<f64> = eig.eigenvectors.column(i).into_owned();
            (&result.basis * y).iter().copied().collect()
        })
        .collect()
}

/// Fraction of `‖g‖²` lying in the span of orthonormal `vectors`.
pub fn subspace_alignment(g: &[f64], vectors: &[Vec<f64>]) -> f64 {
    let total = dot(g, g);
    if total == 0.0 {
        return 0.0;
    }
    vectors.iter().map(|v| dot(g, v).powi(2)).sum::<f64>() / total
}

/// Serialized form of a spectral run.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumJson {
    pub ritz: Vec<f64>,
    pub rneg: Option<f64>,
    pub outliers: usize,
    pub m: usize,
    pub d: usize,
    pub algorithm: String,
    pub seed: u64,
}
