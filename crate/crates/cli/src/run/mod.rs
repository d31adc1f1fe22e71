use kronsketch::oracles::{
    power_law_with_outliers, Basis, LayeredConfig, LogisticOracle, ModelOracle, PlantedSubspaceOracle,
    QuadraticOracle,
};
use kronsketch::rng::{derive_stream, gaussian_vec};
use kronsketch::tda::per_example_gradients;
use serde_json::Value;

use crate::config::{BasisKind, OracleConfig, RunConfig, Task};
use crate::error::{usage, CliResult};
use crate::input::load_vectors;

mod eigen;
mod intdim;
mod perf;
mod quality;
mod tda;

pub fn run(config: &RunConfig) -> CliResult<()> {
    match config.task {
        Task::Quality { .. } => quality::run(config),
        Task::Perf { .. } => perf::run(config),
        Task::Eigen { .. } => eigen::run(config),
        Task::Intdim { .. } => intdim::run(config),
        Task::Tda { .. } => tda::run(config),
    }
}

pub(crate) fn build_oracle(config: &RunConfig) -> CliResult<Box<dyn ModelOracle>> {
    Ok(match &config.oracle {
        Some(OracleConfig::Layered { .. }) => Box::new(layered(config)?),
        Some(OracleConfig::Quadratic { .. }) => Box::new(quadratic(config)?),
        Some(OracleConfig::Planted { k }) => Box::new(PlantedSubspaceOracle::random(config.n, *k, config.seed)?),
        None => return usage(format!("{} needs an oracle", config.task.name())),
    })
}

fn layered(config: &RunConfig) -> CliResult<LogisticOracle> {
    let Some(OracleConfig::Layered { examples, layers, clusters, layer_decay, noise, ridge }) = config.oracle.clone() else {
        return usage("expected the layered oracle");
    };
    let cfg = LayeredConfig { n: config.n, examples, layers, clusters, layer_decay, noise, ridge, seed: config.seed };
    Ok(LogisticOracle::layered(&cfg)?)
}

pub(crate) fn quadratic(config: &RunConfig) -> CliResult<QuadraticOracle> {
    let Some(OracleConfig::Quadratic { scale, alpha, outliers, basis }) = &config.oracle else {
        return usage("expected the quadratic oracle");
    };
    let n = config.n;
    let basis = match basis {
        BasisKind::Identity => Basis::Identity,
        BasisKind::KronHaar => Basis::KronHaar { seed: config.seed, max_block: 1024 },
    };
    let b = gaussian_vec(&mut derive_stream(config.seed, "cli.quadratic.b", 0), n);
    Ok(QuadraticOracle::new(power_law_with_outliers(n, *scale, *alpha, outliers), b, basis)?)
}

/// Per-example gradients at `θ = 0`, or the vectors of `--vectors`.
pub(crate) fn example_gradients(config: &RunConfig) -> CliResult<Vec<Vec<f64>>> {
    match &config.vectors {
        Some(p) => load_vectors(p),
        None => {
            let o = build_oracle(config)?;
            Ok(per_example_gradients(o.as_ref(), &vec![0.0; config.n])?)
        }
    }
}

/// `(mean, min)` of a non-empty slice.
pub(crate) fn mean_min(v: &[f64]) -> (f64, f64) {
    (v.iter().sum::<f64>() / v.len() as f64, v.iter().copied().fold(f64::INFINITY, f64::min))
}

pub(crate) fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}
