use std::path::Path;

use kronsketch::skvb;

use crate::error::{usage, CliResult};

/// All records of an SKVB file as f64, checked to share one non-zero length.
pub fn load_vectors(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let records = skvb::read_file(path)?;
    let Some(first) = records.first() else {
        return usage(format!("{} holds no vectors", path.display()));
    };
    let n = first.len();
    if n == 0 {
        return usage(format!("{} holds an empty vector", path.display()));
    }
    if let Some(i) = records.iter().position(|r| r.len() != n) {
        return usage(format!("{}: record {i} has length {}, expected {n}", path.display(), records[i].len()));
    }
    let out: Vec<Vec<f64>> = records.iter().map(|r| r.to_f64()).collect();
    if out.iter().flatten().any(|v| !v.is_finite()) {
        return usage(format!("{} contains non-finite values", path.display()));
    }
    Ok(out)
}

pub fn vector_len(path: &Path) -> CliResult<usize> {
    Ok(load_vectors(path)?[0].len())
}
