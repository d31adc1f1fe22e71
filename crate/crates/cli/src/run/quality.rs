use kronsketch::rng::derive_stream;
use kronsketch::sketch::jl::{sample_unit_vector, UnitVectorFamily};
use kronsketch::sketch::{IdentitySketch, LinearSketch};
use kronsketch::tda::{correlation_from_gradients, sample_pairs, sketch_gradients};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{example_gradients, mean_min, num};
use crate::config::{RunConfig, Task};
use crate::error::{usage, CliResult};
use crate::report::Report;
use crate::sketcher::AnySketch;

struct Cell {
    r: f64,
    failure_rate: f64,
    mean_distortion: f64,
}

fn unit_vectors(config: &RunConfig) -> CliResult<Option<Vec<Vec<f64>>>> {
    let Some(p) = &config.vectors else { return Ok(None) };
    let mut out = crate::input::load_vectors(p)?;
    for (i, v) in out.iter_mut().enumerate() {
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv == 0.0 {
            return usage(format!("vector {i} is zero and cannot be normalized"));
        }
        v.iter_mut().for_each(|x| *x /= nv);
    }
    Ok(Some(out))
}

fn evaluate(
    config: &RunConfig,
    sketch: &dyn LinearSketch,
    grads: &[Vec<f64>],
    pairs: &[(usize, usize)],
    provided: Option<&[Vec<f64>]>,
) -> CliResult<Cell> {
    let Task::Quality { jl_vectors, eps, jl_nnz, .. } = config.task else { unreachable!() };
    let sketched = sketch_gradients(sketch, grads)?;
    let r = correlation_from_gradients(grads, &sketched, pairs)?.r;
    let distortion = |x: &[f64]| -> CliResult<f64> {
        let y = sketch.forward(x)?;
        Ok((y.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs())
    };
    let mut all = Vec::new();
    match provided {
        Some(vs) => {
            for v in vs {
                all.push(distortion(v)?);
            }
        }
        None => {
            let family = jl_nnz.map_or(UnitVectorFamily::Gaussian, |nnz| UnitVectorFamily::Sparse { nnz });
            let mut rng = derive_stream(config.seed, "cli.jl", 0);
            for _ in 0..jl_vectors {
                all.push(distortion(&sample_unit_vector(family, config.n, &mut rng))?);
            }
        }
    }
    let fails = all.iter().filter(|&&e| e >= eps).count();
    Ok(Cell {
        r,
        failure_rate: fails as f64 / all.len() as f64,
        mean_distortion: all.iter().sum::<f64>() / all.len() as f64,
    })
}

pub fn run(config: &RunConfig) -> CliResult<()> {
    let Task::Quality { pairs, .. } = config.task else { unreachable!() };
    let grads = example_gradients(config)?;
    let pairs = sample_pairs(grads.len(), pairs, config.seed)?;
    let provided = unit_vectors(config)?;
    let provided = provided.as_deref();

    let mut report = Report::new(
        config,
        vec!["algorithm", "d", "seeds", "r", "r_min", "jl_failure_rate", "jl_mean_distortion"],
    );
    report.summary.insert("examples".into(), json!(grads.len()));
    report.summary.insert("pairs".into(), json!(pairs.len()));

    let id = evaluate(config, &IdentitySketch { n: config.n }, &grads, &pairs, provided)?;
    report.push(vec![
        json!("identity"),
        json!(config.n),
        json!(1),
        num(id.r),
        num(id.r),
        num(id.failure_rate),
        num(id.mean_distortion),
    ]);

    let cells: Vec<_> = config
        .algorithms
        .iter()
        .flat_map(|&a| config.d.iter().flat_map(move |&d| config.sketch_seeds().map(move |s| (a, d, s))))
        .collect();
    let results: Vec<Cell> = cells
        .par_iter()
        .map(|&(a, d, s)| {
            let sketch = AnySketch::build(&config.spec(a, d, s), config.precision)?;
            evaluate(config, &sketch, &grads, &pairs, provided)
        })
        .collect::<CliResult<_>>()?;

    for (i, chunk) in results.chunks(config.seeds).enumerate() {
        let (a, d, _) = cells[i * config.seeds];
        let r: Vec<f64> = chunk.iter().map(|c| c.r).collect();
        let (r_mean, r_min) = mean_min(&r);
        let fr = chunk.iter().map(|c| c.failure_rate).sum::<f64>() / chunk.len() as f64;
        let md = chunk.iter().map(|c| c.mean_distortion).sum::<f64>() / chunk.len() as f64;
        report.push(vec![
            Value::String(a.to_string()),
            json!(d),
            json!(config.seeds),
            num(r_mean),
            num(r_min),
            num(fr),
            num(md),
        ]);
    }
    report.emit()
}
