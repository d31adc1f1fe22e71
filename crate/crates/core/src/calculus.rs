//! Explicit and implicit sketches of gradients and Hessian-vector products.
//!
//! The explicit path sketches a computed `N`-vector. The implicit path differentiates
//! the reparameterized loss `ω ↦ L(θ₀ + Φᵀω)` at `ω = 0`, which with callback oracles
//! means running transpose, oracle and forward in that order.

use crate::error::{invalid, Result};
use crate::oracles::{check_dim, Batch, ModelOracle};
use crate::sketch::LinearSketch;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Explicit,
    Implicit,
}

fn check_dims(sketch: &dyn LinearSketch, oracle: &dyn ModelOracle, theta0: &[f64]) -> Result<()> {
    if sketch.input_dim() != oracle.dim() {
        return invalid(format!(
            "sketch input dimension {} does not match oracle dimension {}",
            sketch.input_dim(),
            oracle.dim()
        ));
    }
    check_dim("theta0", theta0, oracle.dim())
}

/// The model seen through the reparameterization `θ = θ₀ + Φᵀω`.
pub struct SubspaceOracle<'a> {
    oracle: &'a dyn ModelOracle,
    sketch: &'a dyn LinearSketch,
    theta0: &'a [f64],
}

impl<'a> SubspaceOracle<'a> {
    pub fn new(oracle: &'a dyn ModelOracle, sketch: &'a dyn LinearSketch, theta0: &'a [f64]) -> Result<Self> {
        check_dims(sketch, oracle, theta0)?;
        Ok(Self { oracle, sketch, theta0 })
    }

    /// `θ₀ + Φᵀω`
    pub fn lift(&self, omega: &[f64]) -> Result<Vec<f64>> {
        let mut t = self.sketch.transpose(omega)?;
        t.iter_mut().zip(self.theta0).for_each(|(a, b)| *a += b);
        Ok(t)
    }
}

impl ModelOracle for SubspaceOracle<'_> {
    fn dim(&self) -> usize {
        self.sketch.output_dim()
    }

    fn num_examples(&self) -> usize {
        self.oracle.num_examples()
    }

    fn loss(&self, omega: &[f64], batch: Batch) -> Result<f64> {
        self.oracle.loss(&self.lift(omega)?, batch)
    }

    /// Chain rule: `Φ ∇L(θ₀ + Φᵀω)`.
    fn gradient(&self, omega: &[f64], batch: Batch) -> Result<Vec<f64>> {
        let g = self.oracle.gradient(&self.lift(omega)?, batch)?;
        self.sketch.forward(&g)
    }

    /// `Φ ∇²L(θ₀ + Φᵀω) Φᵀ v`
    fn hvp(&self, omega: &[f64], v: &[f64], batch: Batch) -> Result<Vec<f64>> {
        let theta = self.lift(omega)?;
        let u = self.sketch.transpose(v)?;
        self.sketch.forward(&self.oracle.hvp(&theta, &u, batch)?)
    }
}

/// `Φ ∇L(θ₀)`
pub fn explicit_grad_sketch(
    sketch: &dyn LinearSketch,
    oracle: &dyn ModelOracle,
    theta0: &[f64],
    batch: Batch,
) -> Result<Vec<f64>> {
    check_dims(sketch, oracle, theta0)?;
    sketch.forward(&oracle.gradient(theta0, batch)?)
}

/// `∇_ω L(θ₀ + Φᵀω)` at `ω = 0`.
pub fn implicit_grad_sketch(
    sketch: &dyn LinearSketch,
    oracle: &dyn ModelOracle,
    theta0: &[f64],
    batch: Batch,
) -> Result<Vec<f64>> {
    let sub = SubspaceOracle::new(oracle, sketch, theta0)?;
    sub.gradient(&vec![0.0; sketch.output_dim()], batch)
}

/// `Φ ∇²L(θ₀) Φᵀ v`, sketching the computed HVP.
pub fn explicit_hvp_sketch(
    sketch: &dyn LinearSketch,
    oracle: &dyn ModelOracle,
    theta0: &[f64],
    v: &[f64],
    batch: Batch,
) -> Result<Vec<f64>> {
    check_dims(sketch, oracle, theta0)?;
    check_dim("v", v, sketch.output_dim())?;
    let u = sketch.transpose(v)?;
    sketch.forward(&oracle.hvp(theta0, &u, batch)?)
}

/// Hessian of `ω ↦ L(θ₀ + Φᵀω)` at `ω = 0`, applied to `v`.
pub fn implicit_hvp_sketch(
    sketch: &dyn LinearSketch,
    oracle: &dyn ModelOracle,
    theta0: &[f64],
    v: &[f64],
    batch: Batch,
) -> Result<Vec<f64>> {
    check_dim("v", v, sketch.output_dim())?;
    let sub = SubspaceOracle::new(oracle, sketch, theta0)?;
    sub.hvp(&vec![0.0; sketch.output_dim()], v, batch)
}

/// `Φ · hvp(Φᵀ v)` for an HVP supplied as a callback (e.g. from another runtime).
pub fn hvp_sketch<F>(sketch: &dyn LinearSketch, hvp: F, v: &[f64]) -> Result<Vec<f64>>
where
    F: FnOnce(&[f64]) -> Result<Vec<f64>>,
{
    check_dim("v", v, sketch.output_dim())?;
    let u = sketch.transpose(v)?;
    let h = hvp(&u)?;
    if h.len() != sketch.input_dim() {
        return invalid(format!(
            "hvp callback returned length {}, expected {}",
            h.len(),
            sketch.input_dim()
        ));
    }
    sketch.forward(&h)
}

/// A square linear map on ℝᴰ.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>>;
}

/// The `D × D` map `v ↦ Φ ∇²L(θ₀) Φᵀ v`.
pub struct SketchedOperator<'a> {
    pub sketch: &'a dyn LinearSketch,
    pub oracle: &'a dyn ModelOracle,
    pub theta0: Vec<f64>,
    pub batch: Batch,
    pub mode: Mode,
}

impl<'a> SketchedOperator<'a> {
    pub fn new(
        sketch: &'a dyn LinearSketch,
        oracle: &'a dyn ModelOracle,
        theta0: Vec<f64>,
        batch: Batch,
        mode: Mode,
    ) -> Result<Self> {
        check_dims(sketch, oracle, &theta0)?;
        Ok(Self { sketch, oracle, theta0, batch, mode })
    }
}

impl LinearOperator for SketchedOperator<'_> {
    fn dim(&self) -> usize {
        self.sketch.output_dim()
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        apply_sketched_operator(self, v)
    }
}

pub fn apply_sketched_operator(op: &SketchedOperator<'_>, v: &[f64]) -> Result<Vec<f64>> {
    match op.mode {
        Mode::Explicit => explicit_hvp_sketch(op.sketch, op.oracle, &op.theta0, v, op.batch),
        Mode::Implicit => implicit_hvp_sketch(op.sketch, op.oracle, &op.theta0, v, op.batch),
    }
}

/// Dense row-major operator, mainly for tests and small experiments.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub n: usize,
    pub a: Vec<f64>,
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim("v", v, self.n)?;
        Ok(self.a.chunks_exact(self.n).map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }
}
