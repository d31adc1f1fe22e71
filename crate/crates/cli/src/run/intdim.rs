use kronsketch::intrinsic::{search_with_sketch, verify_half_with_sketch, NormalizedLoss};
use kronsketch::oracles::{Batch, ModelOracle};
use kronsketch::Error;
use serde_json::{json, Value};

use super::{build_oracle, num, quadratic};
use crate::config::{OracleConfig, RunConfig, Task};
use crate::error::{CliError, CliResult};
use crate::report::Report;
use crate::sketcher::AnySketch;

fn best_loss(config: &RunConfig) -> CliResult<f64> {
    Ok(match config.oracle {
        Some(OracleConfig::Quadratic { .. }) => {
            let q = quadratic(config)?;
            q.loss(&q.stationary_point()?, Batch::Full)?
        }
        _ => 0.0,
    })
}

/// Writes the report even when a search is exhausted, then reports the first exhaustion.
pub fn run(config: &RunConfig) -> CliResult<()> {
    let Task::Intdim { d_min, .. } = config.task else { unreachable!() };
    let oracle = build_oracle(config)?;
    let theta0 = vec![0.0; config.n];
    let evaluator = NormalizedLoss::new(oracle.as_ref(), &theta0, best_loss(config)?)?;

    let mut report = Report::new(config, vec!["algorithm", "step", "active_d", "metric"]);
    let mut results = Vec::new();
    let mut exhausted = None;
    for &a in &config.algorithms {
        let sc = config.search_config(a).expect("intdim task");
        let sketch = AnySketch::build(&sc.sketch_spec(config.n), config.precision)?;
        let (d_star, trace) = match search_with_sketch(oracle.as_ref(), &sketch, &theta0, &evaluator, &sc) {
            Ok((d, t)) => (Some(d), t),
            Err(Error::SearchExhausted { d_max, trace }) => {
                let t = (*trace).clone();
                exhausted.get_or_insert(Error::SearchExhausted { d_max, trace });
                (None, t)
            }
            Err(e) => return Err(e.into()),
        };
        for r in &trace.records {
            report.push(vec![json!(a.to_string()), json!(r.step), json!(r.active_d), num(r.metric)]);
        }
        let verify = match d_star {
            Some(d) if d >= 2 * d_min => {
                let v = verify_half_with_sketch(oracle.as_ref(), &sketch, &theta0, &evaluator, d, &sc)?;
                json!({ "d": v.d, "final_metric": num(v.final_metric), "confirmed": v.confirmed })
            }
            _ => Value::Null,
        };
        results.push(json!({ "algorithm": a.to_string(), "d_star": d_star, "verify_half": verify }));
    }
    report.summary.insert("results".into(), Value::Array(results));
    report.emit()?;
    match exhausted {
        Some(e) => Err(CliError::Lib(e)),
        None => Ok(()),
    }
}
