//! Training-data attribution scores from sketched per-example gradients.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_len, invalid, Error, Result};
use crate::oracles::{check_dim, Batch, ModelOracle};
use crate::real::dot;
use crate::rng::derive_stream;
use crate::sketch::LinearSketch;

/// `⟨g₁, g₂⟩`
pub fn tda_score(g1: &[f64], g2: &[f64]) -> Result<f64> {
    ensure_len("tda_score", g2, g1.len())?;
    Ok(dot(g1, g2))
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    ensure_len("pearson", y, x.len())?;
    if x.len() < 2 {
        return invalid(format!("pearson needs at least 2 samples, got {}", x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance in a score list".into()));
    }
    if !(sxx.is_finite() && syy.is_finite() && sxy.is_finite()) {
        return Err(Error::UndefinedCorrelation("non-finite scores".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// `count` distinct unordered pairs `(x, z)` with `x < z`, uniform without replacement.
pub fn sample_pairs(examples: usize, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let total = examples * examples.saturating_sub(1) / 2;
    if count < 2 {
        return invalid(format!("need at least 2 pairs, got {count}"));
    }
    if count > total {
        return invalid(format!("{count} pairs requested but only {total} exist for {examples} examples"));
    }
    let mut rng = derive_stream(seed, "tda.pairs", 0);
    if 2 * count > total {
        let mut all: Vec<(usize, usize)> =
            (0..examples).flat_map(|i| (i + 1..examples).map(move |j| (i, j))).collect();
        all.shuffle(&mut rng);
        all.truncate(count);
        return Ok(all);
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.random_range(0..examples);
        let b = rng.random_range(0..examples);
        if a == b {
            continue;
        }
        let p = (a.min(b), a.max(b));
        if seen.insert(p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// One gradient per example at `θ`, computed in parallel.
pub fn per_example_gradients(oracle: &dyn ModelOracle, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_dim("theta", theta, oracle.dim())?;
    (0..oracle.num_examples())
        .into_par_iter()
        .map(|i| oracle.gradient(theta, Batch::Example(i)))
        .collect()
}

/// `Φ g` for each gradient, computed once.
pub fn sketch_gradients(sketch: &dyn LinearSketch, grads: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    grads.par_iter().map(|g| sketch.forward(g)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScorePair {
    pub x: usize,
    pub z: usize,
    pub true_score: f64,
    pub sketched_score: f64,
    pub block_scores: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub pairs: Vec<ScorePair>,
}

impl CorrelationResult {
    /// Score dump with columns `x_id, z_id, true, sketched, block_0, …`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let blocks = self.pairs.first().map_or(0, |p| p.block_scores.len());
        let mut header = vec!["x_id".to_string(), "z_id".into(), "true".into(), "sketched".into()];
        header.extend((0..blocks).map(|b| format!("block_{b}")));
        wr.write_record(&header)?;
        for p in &self.pairs {
            let mut row = vec![p.x.to_string(), p.z.to_string(), p.true_score.to_string(), p.sketched_score.to_string()];
            row.extend(p.block_scores.iter().map(|s| s.to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Pearson `r` between true and sketched scores on given pairs of cached gradients.
pub fn correlation_from_gradients(
    grads: &[Vec<f64>],
    sketched: &[Vec<f64>],
    pairs: &[(usize, usize)],
) -> Result<CorrelationResult> {
    if grads.len() != sketched.len() {
        return invalid(format!("{} gradients but {} sketched gradients", grads.len(), sketched.len()));
    }
    let mut out = Vec::with_capacity(pairs.len());
    for &(x, z) in pairs {
        if x >= grads.len() || z >= grads.len() {
            return invalid(format!("pair ({x}, {z}) out of range for {} examples", grads.len()));
        }
        out.push(ScorePair {
            x,
            z,
            true_score: tda_score(&grads[x], &grads[z])?,
            sketched_score: tda_score(&sketched[x], &sketched[z])?,
            block_scores: Vec::new(),
        });
    }
    let t: Vec<f64> = out.iter().map(|p| p.true_score).collect();
    let s: Vec<f64> = out.iter().map(|p| p.sketched_score).collect();
    Ok(CorrelationResult { r: pearson(&t, &s)?, pairs: out })
}

/// Samples `pair_count` example pairs and correlates true with sketched scores at `θ`.
pub fn correlation_harness(
    oracle: &dyn ModelOracle,
    theta: &[f64],
    sketch: &dyn LinearSketch,
    pair_count: usize,
    seed: u64,
) -> Result<CorrelationResult> {
    if sketch.input_dim() != oracle.dim() {
        return invalid(format!("sketch input {} does not match oracle dimension {}", sketch.input_dim(), oracle.dim()));
    }
    let pairs = sample_pairs(oracle.num_examples(), pair_count, seed)?;
    let grads = per_example_gradients(oracle, theta)?;
    let sketched = sketch_gradients(sketch, &grads)?;
    correlation_from_gradients(&grads, &sketched, &pairs)
}

fn check_partition(blocks: &[Vec<usize>], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for (b, block) in blocks.iter().enumerate() {
        if block.is_empty() {
            return invalid(format!("block {b} is empty"));
        }
        for &i in block {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return invalid(format!("block {b}: index {i} is out of range or repeated"));
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return invalid(format!("index {i} is not covered by any block"));
    }
    Ok(())
}

/// Contiguous equal blocks of `0..n`.
pub fn contiguous_blocks(n: usize, count: usize) -> Result<Vec<Vec<usize>>> {
    if count == 0 || n % count != 0 {
        return invalid(format!("cannot split {n} coordinates into {count} equal blocks"));
    }
    let s = n / count;
    Ok((0..count).map(|b| (b * s..(b + 1) * s).collect()).collect())
}

/// Per block, Pearson `r` between block-restricted and full gradient dot products.
pub fn layer_masked_correlation_from_gradients(
    grads: &[Vec<f64>],
    blocks: &[Vec<usize>],
    pairs: &[(usize, usize)],
) -> Result<Vec<f64>> {
    let n = grads.first().map_or(0, Vec::len);
    check_partition(blocks, n)?;
    let truth: Vec<f64> = pairs.iter().map(|&(x, z)| dot(&grads[x], &grads[z])).collect();
    blocks
        .iter()
        .map(|block| {
            let masked: Vec<f64> = pairs
                .iter()
                .map(|&(x, z)| block.iter().map(|&i| grads[x][i] * grads[z][i]).sum())
                .collect();
            pearson(&truth, &masked)
        })
        .collect()
}

pub fn layer_masked_correlation(
    oracle: &dyn ModelOracle,
    theta: &[f64],
    blocks: &[Vec<usize>],
    pair_count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_partition(blocks, oracle.dim())?;
    let pairs = sample_pairs(oracle.num_examples(), pair_count, seed)?;
    let grads = per_example_gradients(oracle, theta)?;
    layer_masked_correlation_from_gradients(&grads, blocks, &pairs)
}
