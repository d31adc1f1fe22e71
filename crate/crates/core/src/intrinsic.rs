//! Training in a random subspace and the single-run doubling search for the
//! intrinsic dimension.
//!
//! One sketch `Φ` is built at `d_max`. Smaller dimensions are obtained by masking:
//! only the first `active_d` coordinates of `ω` are ever updated.

use serde::{Deserialize, Serialize};

use crate::calculus::SubspaceOracle;
use crate::error::{invalid, Error, Result};
use crate::oracles::{check_dim, Batch, ModelOracle};
use crate::sketch::{Algorithm, LinearSketch, Preconditioner, SketchSpec, Sketcher};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub d_min: usize,
    pub d_max: usize,
    /// Steps per window.
    pub c: usize,
    /// Minimum improvement per window.
    pub delta: f64,
    pub target: f64,
    pub lr: f64,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub preconditioner: Preconditioner,
    /// Windows trained at fixed dimension by [`verify_half`].
    pub verify_windows: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            d_min: 16,
            d_max: 1024,
            c: 500,
            delta: 1e-3,
            target: 0.9,
            lr: 0.5,
            seed: 0,
            algorithm: Algorithm::Affd,
            preconditioner: Preconditioner::Hadamard,
            verify_windows: 8,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.d_min.is_power_of_two() || !self.d_max.is_power_of_two() {
            return invalid(format!("d_min = {} and d_max = {} must be powers of 2", self.d_min, self.d_max));
        }
        if self.d_min > self.d_max {
            return invalid(format!("d_min = {} exceeds d_max = {}", self.d_min, self.d_max));
        }
        if self.c == 0 {
            return invalid("c must be at least 1");
        }
        if !(self.delta > 0.0) {
            return invalid(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return invalid(format!("lr must be positive and finite, got {}", self.lr));
        }
        if self.target.is_nan() {
            return invalid("target is NaN");
        }
        Ok(())
    }

    /// Sketch parameters of the single `d_max` sketch for an `n`-parameter model.
    pub fn sketch_spec(&self, n: usize) -> SketchSpec {
        SketchSpec::new(self.algorithm, n, self.d_max, self.seed).with_preconditioner(self.preconditioner)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub active_d: usize,
    pub metric: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub records: Vec<TraceRecord>,
    /// `None` when the search was exhausted.
    pub d_star: Option<usize>,
}

impl SearchTrace {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.records {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Dimension active at each window boundary, in order.
    pub fn schedule(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.active_d).collect()
    }
}

/// Scalar quality of parameters `θ`; larger is better.
pub trait Evaluator {
    fn evaluate(&self, theta: &[f64]) -> Result<f64>;
}

impl<F: Fn(&[f64]) -> Result<f64>> Evaluator for F {
    fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        self(theta)
    }
}

/// `(L₀ − L(θ)) / (L₀ − L*)`: 0 at the starting loss, 1 at the best achievable loss.
pub struct NormalizedLoss<'a> {
    oracle: &'a dyn ModelOracle,
    initial: f64,
    best: f64,
}

impl<'a> NormalizedLoss<'a> {
    pub fn new(oracle: &'a dyn ModelOracle, theta0: &[f64], best: f64) -> Result<Self> {
        let initial = oracle.loss(theta0, Batch::Full)?;
        if !(initial > best) {
            return invalid(format!("initial loss {initial} must exceed the best loss {best}"));
        }
        Ok(Self { oracle, initial, best })
    }

    pub fn initial_loss(&self) -> f64 {
        self.initial
    }
}

impl Evaluator for NormalizedLoss<'_> {
    fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        let l = self.oracle.loss(theta, Batch::Full)?;
        Ok((self.initial - l) / (self.initial - self.best))
    }
}

/// One SGD step on `ω ↦ L(θ₀ + Φᵀω)` restricted to the first `active_d` coordinates.
pub fn subspace_sgd_step(
    oracle: &dyn ModelOracle,
    sketch: &dyn LinearSketch,
    theta0: &[f64],
    omega: &mut [f64],
    active_d: usize,
    lr: f64,
    batch: Batch,
) -> Result<()> {
    let d_max = sketch.output_dim();
    if active_d > d_max {
        return invalid(format!("active_d = {active_d} exceeds d_max = {d_max}"));
    }
    check_dim("omega", omega, d_max)?;
    if active_d == 0 {
        return Ok(());
    }
    let sub = SubspaceOracle::new(oracle, sketch, theta0)?;
    let theta = sub.lift(omega)?;
    let g = oracle.gradient(&theta, batch)?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric { iteration: 0, message: "non-finite gradient".into() });
    }
    let g = sketch.forward(&g)?;
    for (w, gi) in omega[..active_d].iter_mut().zip(&g) {
        *w -= lr * gi;
    }
    if omega.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric { iteration: 0, message: "non-finite subspace coordinates".into() });
    }
    Ok(())
}

struct Trainer<'a> {
    oracle: &'a dyn ModelOracle,
    sketch: &'a dyn LinearSketch,
    theta0: &'a [f64],
    omega: Vec<f64>,
    step: usize,
}

impl<'a> Trainer<'a> {
    fn new(oracle: &'a dyn ModelOracle, sketch: &'a dyn LinearSketch, theta0: &'a [f64]) -> Result<Self> {
        SubspaceOracle::new(oracle, sketch, theta0)?;
        Ok(Self { oracle, sketch, theta0, omega: vec![0.0; sketch.output_dim()], step: 0 })
    }

    fn finetune(&mut self, steps: usize, active_d: usize, lr: f64) -> Result<()> {
        for _ in 0..steps {
            subspace_sgd_step(self.oracle, self.sketch, self.theta0, &mut self.omega, active_d, lr, Batch::Full)
                .map_err(|e| match e {
                    Error::Numeric { message, .. } => Error::Numeric { iteration: self.step, message },
                    e => e,
                })?;
            self.step += 1;
        }
        Ok(())
    }

    fn evaluate(&self, evaluator: &dyn Evaluator) -> Result<f64> {
        let theta = SubspaceOracle::new(self.oracle, self.sketch, self.theta0)?.lift(&self.omega)?;
        let m = evaluator.evaluate(&theta)?;
        if !m.is_finite() {
            return Err(Error::Numeric { iteration: self.step, message: format!("metric is {m}") });
        }
        Ok(m)
    }
}

/// Doubling search with a caller-supplied `d_max` sketch and starting point.
pub fn search_with_sketch(
    oracle: &dyn ModelOracle,
    sketch: &dyn LinearSketch,
    theta0: &[f64],
    evaluator: &dyn Evaluator,
    config: &SearchConfig,
) -> Result<(usize, SearchTrace)> {
    config.validate()?;
    if sketch.output_dim() != config.d_max {
        return invalid(format!("sketch output {} does not match d_max = {}", sketch.output_dim(), config.d_max));
    }
    let mut t = Trainer::new(oracle, sketch, theta0)?;
    let mut trace = SearchTrace::default();
    let mut d = config.d_min;
    let mut tau_old = t.evaluate(evaluator)?;
    trace.records.push(TraceRecord { step: 0, active_d: d, metric: tau_old });
    if tau_old >= config.target {
        trace.d_star = Some(d);
        return Ok((d, trace));
    }
    loop {
        t.finetune(config.c, d, config.lr)?;
        let tau_new = t.evaluate(evaluator)?;
        trace.records.push(TraceRecord { step: t.step, active_d: d, metric: tau_new });
        if tau_new >= config.target {
            trace.d_star = Some(d);
            return Ok((d, trace));
        }
        if tau_new - tau_old < config.delta {
            d *= 2;
            if d > config.d_max {
                return Err(Error::SearchExhausted { d_max: config.d_max, trace: Box::new(trace) });
            }
        }
        tau_old = tau_new;
    }
}

/// Doubling search from `θ₀ = 0` with a sketch built from `config`.
pub fn search_intrinsic_dimension(
    oracle: &dyn ModelOracle,
    evaluator: &dyn Evaluator,
    config: &SearchConfig,
) -> Result<(usize, SearchTrace)> {
    config.validate()?;
    let sketch: Sketcher<f64> = config.sketch_spec(oracle.dim()).build()?;
    let theta0 = vec![0.0; oracle.dim()];
    search_with_sketch(oracle, &sketch, &theta0, evaluator, config)
}

/// Outcome of a fixed-dimension run at `d*/2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyOutcome {
    pub d: usize,
    pub final_metric: f64,
    /// `true` when the target stayed out of reach, confirming `d*` to a factor of 2.
    pub confirmed: bool,
}

/// Trains at `d_star / 2` for `verify_windows · c` steps from `θ₀ = 0`.
pub fn verify_half(
    oracle: &dyn ModelOracle,
    evaluator: &dyn Evaluator,
    d_star: usize,
    config: &SearchConfig,
) -> Result<VerifyOutcome> {
    config.validate()?;
    let sketch: Sketcher<f64> = config.sketch_spec(oracle.dim()).build()?;
    let theta0 = vec![0.0; oracle.dim()];
    verify_half_with_sketch(oracle, &sketch, &theta0, evaluator, d_star, config)
}

pub fn verify_half_with_sketch(
    oracle: &dyn ModelOracle,
    sketch: &dyn LinearSketch,
    theta0: &[f64],
    evaluator: &dyn Evaluator,
    d_star: usize,
    config: &SearchConfig,
) -> Result<VerifyOutcome> {
    config.validate()?;
    if d_star < 2 * config.d_min || d_star > config.d_max {
        return invalid(format!("d_star = {d_star} must lie in [2 d_min, d_max] = [{}, {}]", 2 * config.d_min, config.d_max));
    }
    let d = d_star / 2;
    let mut t = Trainer::new(oracle, sketch, theta0)?;
    let mut best = t.evaluate(evaluator)?;
    for _ in 0..config.verify_windows {
        if best >= config.target {
            break;
        }
        t.finetune(config.c, d, config.lr)?;
        best = best.max(t.evaluate(evaluator)?);
    }
    Ok(VerifyOutcome { d, final_metric: best, confirmed: best < config.target })
}
