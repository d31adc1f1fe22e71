//! Wall-clock helpers and the chunked dense baseline used by runtime comparisons.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_len, invalid, Result};
use crate::rng::splitmix64;

/// A dense `D × N` Rademacher sketch scaled by `1/√D` that never stores the matrix.
///
/// Sign bits are regenerated chunk by chunk from a counter hash, 64 per word, so the
/// cost of `forward` is `Θ(D·N)` like any explicit dense product.
#[derive(Clone, Debug)]
pub struct ChunkedDense {
    n: usize,
    d: usize,
    key: u64,
    chunk_rows: usize,
}

const CHUNK_ROWS: usize = 64;

impl ChunkedDense {
    pub fn new(n: usize, d: usize, seed: u64) -> Result<Self> {
        if n == 0 || d == 0 {
            return invalid(format!("chunked dense needs positive dimensions, got n = {n}, d = {d}"));
        }
        Ok(Self { n, d, key: splitmix64(seed ^ 0x6368_756e_6b65_64), chunk_rows: CHUNK_ROWS })
    }

    pub fn input_dim(&self) -> usize {
        self.n
    }

    pub fn output_dim(&self) -> usize {
        self.d
    }

    fn words(&self) -> usize {
        self.n.div_ceil(64)
    }

    #[inline]
    fn word(&self, row: usize, w: usize) -> u64 {
        splitmix64(self.key.wrapping_add((row * self.words() + w) as u64))
    }

    /// Entry `(row, col)` as ±1/√D.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let bit = (self.word(row, col / 64) >> (col % 64)) & 1;
        (if bit == 1 { -1.0 } else { 1.0 }) / (self.d as f64).sqrt()
    }

    pub fn forward(&self, x: &[f32]) -> Result<Vec<f32>> {
        ensure_len("chunked dense input", x, self.n)?;
        let words = self.words();
        let full = self.n / 64;
        let scale = 1.0 / (self.d as f32).sqrt();
        let mut out = vec![0.0f32; self.d];
        out.par_chunks_mut(self.chunk_rows).enumerate().for_each(|(c, rows)| {
            let r0 = c * self.chunk_rows;
            for w0 in (0..full).step_by(COL_BLOCK_WORDS) {
                let w1 = (w0 + COL_BLOCK_WORDS).min(full);
                let xs = &x[w0 * 64..w1 * 64];
                for (i, o) in rows.iter_mut().enumerate() {
                    *o += signed_block(xs, |w| self.word(r0 + i, w0 + w));
                }
            }
            if full < words {
                for (i, o) in rows.iter_mut().enumerate() {
                    let w = self.word(r0 + i, full);
                    for (j, v) in x[full * 64..].iter().enumerate() {
                        let s = ((w >> j) as u32 & 1) << 31;
                        *o += f32::from_bits(v.to_bits() ^ s);
                    }
                }
            }
            rows.iter_mut().for_each(|o| *o *= scale);
        });
        Ok(out)
    }
}

const COL_BLOCK_WORDS: usize = 64;

/// Sign masks for the 8 bits of a byte, least significant first.
static BYTE_MASKS: [[u32; 8]; 256] = {
    let mut t = [[0u32; 8]; 256];
    let mut b = 0;
    while b < 256 {
        let mut j = 0;
        while j < 8 {
            t[b][j] = (((b >> j) & 1) as u32) << 31;
            j += 1;
        }
        b += 1;
    }
    t
};

#[inline]
fn signed_block(xs: &[f32], word: impl Fn(usize) -> u64) -> f32 {
    let mut acc = [[0.0f32; 8]; 8];
    for (w, chunk) in xs.chunks_exact(64).enumerate() {
        let bits = word(w);
        for (k, (a, x8)) in acc.iter_mut().zip(chunk.chunks_exact(8)).enumerate() {
            let m = &BYTE_MASKS[((bits >> (8 * k)) & 0xff) as usize];
            for l in 0..8 {
                a[l] += f32::from_bits(x8[l].to_bits() ^ m[l]);
            }
        }
    }
    acc.iter().flatten().sum()
}

/// Median of `runs` timed calls after `warmup` untimed ones.
pub fn median_time<F: FnMut() -> Result<()>>(warmup: usize, runs: usize, mut f: F) -> Result<Duration> {
    if runs == 0 {
        return invalid("median_time needs at least one run");
    }
    for _ in 0..warmup {
        f()?;
    }
    let mut t = Vec::with_capacity(runs);
    for _ in 0..runs {
        let start = Instant::now();
        f()?;
        t.push(start.elapsed());
    }
    t.sort();
    Ok(t[runs / 2])
}

#[derive(Clone, Debug, Serialize)]
pub struct HostFingerprint {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub cpu_model: Option<String>,
    pub rayon_threads: usize,
}

pub fn host_fingerprint() -> HostFingerprint {
    let cpu_model = std::fs::read_to_string("/proc/cpuinfo").ok().and_then(|s| {
        s.lines()
            .find(|l| l.starts_with("model name"))
            .and_then(|l| l.split(':').nth(1))
            .map(|m| m.trim().to_string())
    });
    HostFingerprint {
        os: std::env::consts::OS.into(),
        arch: std::env::consts::ARCH.into(),
        logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
        cpu_model,
        rayon_threads: rayon::current_num_threads(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_matches_entries() {
        for (n, d) in [(64, 3), (200, 70), (1, 1)] {
            let s = ChunkedDense::new(n, d, 5).unwrap();
            let x: Vec<f32> = (0..n).map(|i| (i as f32 * 0.37).sin()).collect();
            let y = s.forward(&x).unwrap();
            for r in 0..d {
                let want: f64 = (0..n).map(|c| s.entry(r, c) * x[c] as f64).sum();
                assert!((y[r] as f64 - want).abs() < 1e-4, "n={n} d={d} r={r}");
            }
        }
    }

    #[test]
    fn signs_are_balanced() {
        let s = ChunkedDense::new(4096, 16, 1).unwrap();
        let pos = (0..16).flat_map(|r| (0..4096).map(move |c| (r, c))).filter(|&(r, c)| s.entry(r, c) > 0.0).count();
        let frac = pos as f64 / 65536.0;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }
}
