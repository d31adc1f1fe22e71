use kronsketch::calculus::{Mode, SketchedOperator};
use kronsketch::oracles::Batch;
use kronsketch::spectral::{arnoldi, relative_mae, spectrum_report};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::{mean_min, num, quadratic};
use crate::config::{RunConfig, Task};
use crate::error::CliResult;
use crate::report::Report;
use crate::sketcher::AnySketch;

pub fn run(config: &RunConfig) -> CliResult<()> {
    let Task::Eigen { m, top_k, threshold } = config.task else { unreachable!() };
    let q = quadratic(config)?;
    let truth = q.sorted_eigenvalues()[..top_k.min(config.n)].to_vec();

    let cells: Vec<_> = config
        .algorithms
        .iter()
        .flat_map(|&a| config.d.iter().flat_map(move |&d| config.sketch_seeds().map(move |s| (a, d, s))))
        .collect();
    let rows: Vec<(f64, Vec<Value>)> = cells
        .par_iter()
        .map(|&(a, d, s)| -> CliResult<(f64, Vec<Value>)> {
            let sketch = AnySketch::build(&config.spec(a, d, s), config.precision)?;
            let op = SketchedOperator::new(&sketch, &q, vec![0.0; config.n], Batch::Full, Mode::Implicit)?;
            let k = arnoldi(&op, m, s)?;
            let used = truth.len().min(k.ritz_values.len());
            let mae = relative_mae(&k.ritz_values[..used], &truth[..used])?;
            let rep = spectrum_report(&k.ritz_values, top_k, threshold)?;
            let row = vec![
                json!(a.to_string()),
                json!(d),
                json!(s),
                json!(k.m),
                json!(k.breakdown),
                num(mae),
                rep.rneg.map_or(Value::Null, num),
                json!(rep.outliers),
                Value::Array(k.ritz_values.iter().take(top_k).map(|&v| num(v)).collect()),
            ];
            Ok((mae, row))
        })
        .collect::<CliResult<_>>()?;

    let mut report = Report::new(
        config,
        vec!["algorithm", "d", "seed", "m", "breakdown", "mae", "rneg", "outliers", "ritz"],
    );
    report.summary.insert("true_top_k".into(), Value::Array(truth.iter().map(|&v| num(v)).collect()));
    let mut means = Map::new();
    for (i, chunk) in rows.chunks(config.seeds).enumerate() {
        let (a, d, _) = cells[i * config.seeds];
        let maes: Vec<f64> = chunk.iter().map(|r| r.0).collect();
        means.insert(format!("{a}/{d}"), num(mean_min(&maes).0));
    }
    report.summary.insert("mean_mae".into(), Value::Object(means));
    for (_, row) in rows {
        report.push(row);
    }
    report.emit()
}
