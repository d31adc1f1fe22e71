use std::hint::black_box;

use kronsketch::rng::{derive_stream, gaussian_vec};
use kronsketch::sketch::Sketcher;
use kronsketch::timing::{host_fingerprint, median_time, ChunkedDense};
use kronsketch::Real;
use serde_json::json;

use super::num;
use crate::config::{Precision, RunConfig, Task};
use crate::error::CliResult;
use crate::input::load_vectors;
use crate::report::Report;

fn time_forward<T: Real>(config: &RunConfig, spec: &kronsketch::sketch::SketchSpec, x: &[f64]) -> CliResult<f64> {
    let Task::Perf { runs, warmup, .. } = config.task else { unreachable!() };
    let s: Sketcher<T> = spec.build()?;
    let x: Vec<T> = x.iter().map(|&v| T::of(v)).collect();
    let t = median_time(warmup, runs, || {
        black_box(s.forward(black_box(&x))?);
        Ok(())
    })?;
    Ok(t.as_secs_f64())
}

/// Timing cells run one at a time.
pub fn run(config: &RunConfig) -> CliResult<()> {
    let Task::Perf { runs, warmup, baseline } = config.task else { unreachable!() };
    let x = match &config.vectors {
        Some(p) => load_vectors(p)?.swap_remove(0),
        None => gaussian_vec(&mut derive_stream(config.seed, "cli.perf.x", 0), config.n),
    };
    let mut report = Report::new(
        config,
        vec!["algorithm", "d", "precision", "median_seconds", "ratio_to_first", "runs", "warmup"],
    );
    report.host = Some(host_fingerprint());
    let precision = match config.precision {
        Precision::F32 => "f32",
        Precision::F64 => "f64",
    };

    let push = |report: &mut Report, name: String, prec: &str, times: Vec<(usize, f64)>| {
        let first = times[0].1;
        for (d, t) in times {
            report.push(vec![json!(name), json!(d), json!(prec), num(t), num(t / first), json!(runs), json!(warmup)]);
        }
    };

    for &a in &config.algorithms {
        let mut times = Vec::new();
        for &d in &config.d {
            let spec = config.spec(a, d, config.seed);
            let t = match config.precision {
                Precision::F32 => time_forward::<f32>(config, &spec, &x)?,
                Precision::F64 => time_forward::<f64>(config, &spec, &x)?,
            };
            times.push((d, t));
        }
        push(&mut report, a.to_string(), precision, times);
    }
    if baseline {
        let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let mut times = Vec::new();
        for &d in &config.d {
            let cd = ChunkedDense::new(config.n, d, config.seed)?;
            let t = median_time(warmup, runs, || {
                black_box(cd.forward(black_box(&xf))?);
                Ok(())
            })?;
            times.push((d, t.as_secs_f64()));
        }
        push(&mut report, "chunked_dense".into(), "f32", times);
    }
    report.emit()
}
