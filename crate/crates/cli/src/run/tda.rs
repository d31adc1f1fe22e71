use kronsketch::tda::{
    contiguous_blocks, correlation_from_gradients, layer_masked_correlation_from_gradients, sample_pairs,
    sketch_gradients,
};
use rayon::prelude::*;
use serde_json::json;

use super::{example_gradients, mean_min, num};
use crate::config::{RunConfig, Task};
use crate::error::CliResult;
use crate::report::Report;
use crate::sketcher::AnySketch;

pub fn run(config: &RunConfig) -> CliResult<()> {
    let Task::Tda { pairs, blocks } = config.task else { unreachable!() };
    let grads = example_gradients(config)?;
    let pairs = sample_pairs(grads.len(), pairs, config.seed)?;
    let parts = contiguous_blocks(config.n, blocks)?;

    let mut report = Report::new(config, vec!["kind", "name", "d", "seeds", "r", "r_min"]);
    report.summary.insert("examples".into(), json!(grads.len()));
    report.summary.insert("pairs".into(), json!(pairs.len()));

    let block_r = layer_masked_correlation_from_gradients(&grads, &parts, &pairs)?;
    for (i, (r, part)) in block_r.iter().zip(&parts).enumerate() {
        report.push(vec![json!("block"), json!(format!("block_{i}")), json!(part.len()), json!(1), num(*r), num(*r)]);
    }

    let cells: Vec<_> = config
        .algorithms
        .iter()
        .flat_map(|&a| config.d.iter().flat_map(move |&d| config.sketch_seeds().map(move |s| (a, d, s))))
        .collect();
    let rs: Vec<f64> = cells
        .par_iter()
        .map(|&(a, d, s)| -> CliResult<f64> {
            let sketch = AnySketch::build(&config.spec(a, d, s), config.precision)?;
            Ok(correlation_from_gradients(&grads, &sketch_gradients(&sketch, &grads)?, &pairs)?.r)
        })
        .collect::<CliResult<_>>()?;
    for (i, chunk) in rs.chunks(config.seeds).enumerate() {
        let (a, d, _) = cells[i * config.seeds];
        let (mean, min) = mean_min(chunk);
        report.push(vec![json!("sketch"), json!(a.to_string()), json!(d), json!(config.seeds), num(mean), num(min)]);
    }
    report.emit()
}
