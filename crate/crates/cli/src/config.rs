//! Resolved, validated run configuration. Embedded verbatim in every report.

use std::path::PathBuf;

use clap::ValueEnum;
use kronsketch::intrinsic::SearchConfig;
use kronsketch::sketch::{Algorithm, Preconditioner, SketchSpec};
use serde::{Deserialize, Serialize};

use crate::args::{Cli, Command, Common, Knobs};
use crate::error::{usage, CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Layered,
    Quadratic,
    Planted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Identity,
    KronHaar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OracleConfig {
    /// Layered logistic regression.
    Layered { examples: usize, layers: usize, clusters: usize, layer_decay: f64, noise: f64, ridge: f64 },
    /// Quadratic with spectrum `outliers ++ scale / i^alpha`.
    Quadratic { scale: f64, alpha: f64, outliers: Vec<f64>, basis: BasisKind },
    Planted { k: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Task {
    Quality { pairs: usize, jl_vectors: usize, eps: f64, jl_nnz: Option<usize> },
    Perf { runs: usize, warmup: usize, baseline: bool },
    Eigen { m: usize, top_k: usize, threshold: f64 },
    Intdim { d_min: usize, d_max: usize, steps: usize, delta: f64, target: f64, lr: f64, verify_windows: usize },
    Tda { pairs: usize, blocks: usize },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Quality { .. } => "quality",
            Task::Perf { .. } => "perf",
            Task::Eigen { .. } => "eigen",
            Task::Intdim { .. } => "intdim",
            Task::Tda { .. } => "tda",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub task: Task,
    pub algorithms: Vec<Algorithm>,
    pub n: usize,
    pub d: Vec<usize>,
    pub seed: u64,
    pub seeds: usize,
    pub preconditioner: Preconditioner,
    pub oracle: Option<OracleConfig>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub precision: Precision,
    pub threads: Option<usize>,
    pub vectors: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> CliResult<RunConfig> {
        let Cli { command, common, knobs } = cli;
        let kind = match command {
            Command::Quality => "quality",
            Command::Perf => "perf",
            Command::Eigen => "eigen",
            Command::Intdim => "intdim",
            Command::Tda => "tda",
            Command::Replay { .. } => return usage("replay takes only a report path and --out"),
        };
        check_allowed(kind, common, knobs)?;
        let config = resolve(kind, common, knobs)?;
        config.validate()?;
        Ok(config)
    }

    /// Sketch parameters for one cell.
    pub fn spec(&self, algorithm: Algorithm, d: usize, seed: u64) -> SketchSpec {
        SketchSpec::new(algorithm, self.n, d, seed).with_preconditioner(self.preconditioner)
    }

    pub fn sketch_seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.seeds as u64).map(|i| self.seed.wrapping_add(i))
    }

    pub fn search_config(&self, algorithm: Algorithm) -> Option<SearchConfig> {
        match self.task {
            Task::Intdim { d_min, d_max, steps, delta, target, lr, verify_windows } => Some(SearchConfig {
                d_min,
                d_max,
                c: steps,
                delta,
                target,
                lr,
                seed: self.seed,
                algorithm,
                preconditioner: self.preconditioner,
                verify_windows,
            }),
            _ => None,
        }
    }

    /// Checks every field; nothing is computed before this passes.
    pub fn validate(&self) -> CliResult<()> {
        if self.n == 0 {
            return usage("--n must be positive");
        }
        if self.algorithms.is_empty() {
            return usage("at least one --algo is required");
        }
        if self.seeds == 0 {
            return usage("--seeds must be positive");
        }
        if self.threads == Some(0) {
            return usage("--threads must be positive");
        }
        let needs_d = !matches!(self.task, Task::Intdim { .. });
        if needs_d && self.d.is_empty() {
            return usage("at least one --d is required");
        }
        for &a in &self.algorithms {
            for &d in &self.d {
                self.spec(a, d, self.seed).validate().map_err(to_usage)?;
            }
        }
        match (&self.oracle, &self.vectors) {
            (Some(_), Some(_)) => return usage("--vectors replaces the oracle; do not combine them"),
            (None, None) if !matches!(self.task, Task::Perf { .. }) => {
                return usage(format!("{} needs an oracle or --vectors", self.task.name()))
            }
            _ => {}
        }
        if let Some(o) = &self.oracle {
            validate_oracle(o, self.n)?;
        }
        let examples = match &self.oracle {
            Some(OracleConfig::Layered { examples, .. }) => Some(*examples),
            _ => None,
        };
        match &self.task {
            Task::Quality { pairs, jl_vectors, eps, jl_nnz } => {
                check_pairs(*pairs, examples)?;
                if !(eps.is_finite() && *eps > 0.0) {
                    return usage(format!("--eps must be positive, got {eps}"));
                }
                if *jl_vectors == 0 {
                    return usage("--jl-vectors must be positive");
                }
                if let Some(k) = jl_nnz {
                    if *k == 0 || *k > self.n {
                        return usage(format!("--jl-nnz must be in 1..={}, got {k}", self.n));
                    }
                }
            }
            Task::Perf { runs, .. } => {
                if *runs == 0 {
                    return usage("--runs must be positive");
                }
            }
            Task::Eigen { m, top_k, threshold } => {
                let min_d = self.d.iter().copied().min().unwrap_or(0);
                if *top_k == 0 || top_k > m || *m > min_d {
                    return usage(format!("need 1 <= --top-k <= --m <= min D, got {top_k}, {m}, {min_d}"));
                }
                if !(*threshold > 0.0 && *threshold < 1.0) {
                    return usage(format!("--threshold must be in (0, 1), got {threshold}"));
                }
                if !matches!(self.oracle, Some(OracleConfig::Quadratic { .. })) {
                    return usage("eigen needs the quadratic oracle");
                }
            }
            Task::Intdim { d_max, .. } => {
                for &a in &self.algorithms {
                    let sc = self.search_config(a).expect("intdim task");
                    sc.validate().map_err(to_usage)?;
                    self.spec(a, *d_max, self.seed).validate().map_err(to_usage)?;
                }
                if !matches!(self.oracle, Some(OracleConfig::Planted { .. } | OracleConfig::Quadratic { .. })) {
                    return usage("intdim needs the planted or quadratic oracle");
                }
            }
            Task::Tda { pairs, blocks } => {
                check_pairs(*pairs, examples)?;
                if *blocks == 0 || self.n % blocks != 0 {
                    return usage(format!("{blocks} blocks do not divide n = {}", self.n));
                }
            }
        }
        Ok(())
    }
}

fn to_usage(e: kronsketch::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn check_pairs(pairs: usize, examples: Option<usize>) -> CliResult<()> {
    if pairs < 2 {
        return usage("--pairs must be at least 2");
    }
    if let Some(m) = examples {
        if pairs > m * (m - 1) / 2 {
            return usage(format!("--pairs {pairs} exceeds the {} distinct pairs of {m} examples", m * (m - 1) / 2));
        }
    }
    Ok(())
}

fn validate_oracle(o: &OracleConfig, n: usize) -> CliResult<()> {
    match o {
        OracleConfig::Layered { examples, layers, clusters, layer_decay, noise, ridge } => {
            if *examples < 2 || *clusters == 0 {
                return usage("layered oracle needs at least 2 examples and 1 cluster");
            }
            if *layers == 0 || n % layers != 0 {
                return usage(format!("{layers} layers do not divide n = {n}"));
            }
            if ![layer_decay, noise, ridge].iter().all(|v| v.is_finite() && **v >= 0.0) {
                return usage("--layer-decay, --noise and --ridge must be finite and non-negative");
            }
        }
        OracleConfig::Quadratic { scale, alpha, outliers, basis } => {
            if !(scale.is_finite() && alpha.is_finite()) || outliers.iter().any(|v| !v.is_finite()) {
                return usage("quadratic spectrum parameters must be finite");
            }
            if *basis == BasisKind::KronHaar && !n.is_power_of_two() {
                return usage(format!("the kron_haar basis needs a power-of-2 n, got {n}"));
            }
        }
        OracleConfig::Planted { k } => {
            if *k == 0 || *k > n {
                return usage(format!("--planted must be in 1..={n}, got {k}"));
            }
        }
    }
    Ok(())
}

/// Rejects flags that the subcommand would silently ignore.
fn check_allowed(kind: &str, c: &Common, k: &Knobs) -> CliResult<()> {
    let set: [(&str, bool); 31] = [
        ("--d", !c.d.is_empty()),
        ("--oracle", c.oracle.is_some()),
        ("--vectors", c.vectors.is_some()),
        ("--seeds", k.seeds.is_some()),
        ("--pairs", k.pairs.is_some()),
        ("--jl-vectors", k.jl_vectors.is_some()),
        ("--eps", k.eps.is_some()),
        ("--jl-nnz", k.jl_nnz.is_some()),
        ("--runs", k.runs.is_some()),
        ("--warmup", k.warmup.is_some()),
        ("--no-baseline", k.no_baseline),
        ("--m", k.m.is_some()),
        ("--top-k", k.top_k.is_some()),
        ("--threshold", k.threshold.is_some()),
        ("--d-min", k.d_min.is_some()),
        ("--d-max", k.d_max.is_some()),
        ("--steps", k.steps.is_some()),
        ("--delta", k.delta.is_some()),
        ("--target", k.target.is_some()),
        ("--lr", k.lr.is_some()),
        ("--verify-windows", k.verify_windows.is_some()),
        ("--examples", k.examples.is_some()),
        ("--clusters", k.clusters.is_some()),
        ("--layer-decay", k.layer_decay.is_some()),
        ("--noise", k.noise.is_some()),
        ("--ridge", k.ridge.is_some()),
        ("--scale", k.scale.is_some()),
        ("--alpha", k.alpha.is_some()),
        ("--outliers", k.outliers.is_some()),
        ("--basis", k.basis.is_some()),
        ("--planted", k.planted.is_some()),
    ];
    const LAYERED: &[&str] = &["--examples", "--clusters", "--layer-decay", "--noise", "--ridge"];
    const QUADRATIC: &[&str] = &["--scale", "--alpha", "--outliers", "--basis"];
    let allowed: Vec<&str> = match kind {
        "quality" => [&["--d", "--oracle", "--vectors", "--seeds", "--pairs", "--jl-vectors", "--eps", "--jl-nnz"][..], LAYERED].concat(),
        "perf" => vec!["--d", "--vectors", "--runs", "--warmup", "--no-baseline"],
        "eigen" => [&["--d", "--oracle", "--seeds", "--m", "--top-k", "--threshold"][..], QUADRATIC].concat(),
        "intdim" => [
            &["--oracle", "--d-min", "--d-max", "--steps", "--delta", "--target", "--lr", "--verify-windows", "--planted"][..],
            QUADRATIC,
        ]
        .concat(),
        _ => [&["--d", "--oracle", "--vectors", "--seeds", "--pairs"][..], LAYERED].concat(),
    };
    if let Some((flag, _)) = set.iter().find(|(f, on)| *on && !allowed.contains(f)) {
        return usage(format!("{flag} does not apply to {kind}"));
    }
    let layered_only = k.layers.is_some() && kind != "tda" && kind != "quality";
    if layered_only {
        return usage(format!("--layers does not apply to {kind}"));
    }
    Ok(())
}

fn resolve(kind: &str, c: &Common, k: &Knobs) -> CliResult<RunConfig> {
    let pow = |e: u32| 1usize << e;
    let (default_algos, default_n, default_d): (&[Algorithm], usize, Vec<usize>) = match kind {
        "quality" => (&[Algorithm::Affd, Algorithm::Afjl, Algorithm::Qk], pow(14), vec![pow(8), pow(10), pow(12)]),
        "perf" => (&[Algorithm::Affd, Algorithm::Qk], pow(16), vec![pow(8), pow(10), pow(12)]),
        "eigen" => (&[Algorithm::Affd], pow(12), vec![pow(10)]),
        "intdim" => (&[Algorithm::Affd], pow(12), vec![]),
        _ => (&[Algorithm::Affd], pow(14), vec![pow(10)]),
    };
    let vectors_n = match &c.vectors {
        Some(p) => Some(crate::input::vector_len(p)?),
        None => None,
    };
    let n = match (c.n, vectors_n) {
        (Some(n), Some(v)) if n != v => return usage(format!("--n {n} does not match vector length {v}")),
        (Some(n), _) => n,
        (None, Some(v)) => v,
        (None, None) => default_n,
    };
    let layered = || OracleConfig::Layered {
        examples: k.examples.unwrap_or(256),
        layers: k.layers.unwrap_or(16),
        clusters: k.clusters.unwrap_or(4),
        layer_decay: k.layer_decay.unwrap_or(0.7),
        noise: k.noise.unwrap_or(1.0),
        ridge: k.ridge.unwrap_or(0.0),
    };
    let quadratic = || OracleConfig::Quadratic {
        scale: k.scale.unwrap_or(1.0),
        alpha: k.alpha.unwrap_or(1.5),
        outliers: k.outliers.clone().unwrap_or_else(|| vec![10.0, 6.0, 4.0]),
        basis: k.basis.unwrap_or(BasisKind::Identity),
    };
    let planted = || OracleConfig::Planted { k: k.planted.unwrap_or(128) };
    let default_oracle = match kind {
        "perf" => None,
        _ if c.vectors.is_some() => None,
        "eigen" => Some(OracleKind::Quadratic),
        "intdim" => Some(OracleKind::Planted),
        _ => Some(OracleKind::Layered),
    };
    let oracle = c.oracle.or(default_oracle).map(|o| match o {
        OracleKind::Layered => layered(),
        OracleKind::Quadratic => quadratic(),
        OracleKind::Planted => planted(),
    });
    let pairs = k.pairs.unwrap_or(4096);
    let task = match kind {
        "quality" => Task::Quality {
            pairs,
            jl_vectors: k.jl_vectors.unwrap_or(1000),
            eps: k.eps.unwrap_or(0.2),
            jl_nnz: k.jl_nnz,
        },
        "perf" => Task::Perf { runs: k.runs.unwrap_or(9), warmup: k.warmup.unwrap_or(2), baseline: !k.no_baseline },
        "eigen" => Task::Eigen { m: k.m.unwrap_or(64), top_k: k.top_k.unwrap_or(10), threshold: k.threshold.unwrap_or(0.1) },
        "intdim" => {
            let s = SearchConfig::default();
            Task::Intdim {
                d_min: k.d_min.unwrap_or(s.d_min),
                d_max: k.d_max.unwrap_or(s.d_max),
                steps: k.steps.unwrap_or(s.c),
                delta: k.delta.unwrap_or(s.delta),
                target: k.target.unwrap_or(s.target),
                lr: k.lr.unwrap_or(s.lr),
                verify_windows: k.verify_windows.unwrap_or(s.verify_windows),
            }
        }
        _ => {
            let blocks = match &oracle {
                Some(OracleConfig::Layered { layers, .. }) => *layers,
                _ => k.layers.unwrap_or(16),
            };
            Task::Tda { pairs, blocks }
        }
    };
    Ok(RunConfig {
        task,
        algorithms: if c.algo.is_empty() { default_algos.to_vec() } else { c.algo.clone() },
        n,
        d: if c.d.is_empty() { default_d } else { c.d.clone() },
        seed: c.seed.unwrap_or(0),
        seeds: k.seeds.unwrap_or(1),
        preconditioner: k.preconditioner.unwrap_or_default(),
        oracle,
        output: c.out.clone(),
        format: c.format.unwrap_or(Format::Csv),
        precision: c.precision.unwrap_or(Precision::F64),
        threads: c.threads,
        vectors: c.vectors.clone(),
    })
}
