mod common;

use kronsketch::oracles::{LayeredConfig, LogisticOracle};
use kronsketch::rng::{derive_stream, gaussian_vec};
use kronsketch::sketch::{Algorithm, SketchSpec, Sketcher};
use kronsketch::tda::*;
use kronsketch::Error;

fn layered_grads(cfg: &LayeredConfig) -> Vec<Vec<f64>> {
    let o = LogisticOracle::layered(cfg).unwrap();
    per_example_gradients(&o, &vec![0.0; cfg.n]).unwrap()
}

fn mean_r(grads: &[Vec<f64>], alg: Algorithm, d: usize, pairs: &[(usize, usize)], seeds: u64) -> f64 {
    let n = grads[0].len();
    (0..seeds)
        .map(|seed| {
            let s: Sketcher = SketchSpec::new(alg, n, d, seed).build().unwrap();
            correlation_from_gradients(grads, &sketch_gradients(&s, grads).unwrap(), pairs).unwrap().r
        })
        .sum::<f64>()
        / seeds as f64
}

#[test]
fn orthogonal_square_sketch_gives_perfect_correlation() {
    let cfg = LayeredConfig { n: 1024, examples: 64, layers: 4, ..Default::default() };
    let o = LogisticOracle::layered(&cfg).unwrap();
    let s: Sketcher = SketchSpec::new(Algorithm::Qk, 1024, 1024, 3).build().unwrap();
    let res = correlation_harness(&o, &vec![0.0; 1024], &s, 500, 0).unwrap();
    assert!((res.r - 1.0).abs() < 1e-10, "{}", res.r);
    for p in &res.pairs {
        assert!((p.true_score - p.sketched_score).abs() < 1e-9 * p.true_score.abs().max(1.0));
    }
}

#[test]
fn correlation_grows_with_d_for_affd() {
    let cfg = LayeredConfig::default();
    let grads = layered_grads(&cfg);
    let pairs = sample_pairs(cfg.examples, 4096, 1).unwrap();
    let rs: Vec<f64> = [64, 256, 1024, 4096].iter().map(|&d| mean_r(&grads, Algorithm::Affd, d, &pairs, 5)).collect();
    for w in rs.windows(2) {
        assert!(w[1] >= w[0], "{rs:?}");
    }
    assert!(rs[2] >= 0.95, "{rs:?}");
}

#[test]
fn layer_selection_is_unreliable_where_sketching_is_not() {
    let cfg = LayeredConfig::default();
    let grads = layered_grads(&cfg);
    let pairs = sample_pairs(cfg.examples, 4096, 2).unwrap();
    let blocks: Vec<Vec<usize>> = cfg.blocks().into_iter().map(|b| b.collect()).collect();
    let per_block = layer_masked_correlation_from_gradients(&grads, &blocks, &pairs).unwrap();
    assert!(per_block.iter().any(|&r| r < 0.95), "{per_block:?}");
    let r = mean_r(&grads, Algorithm::Affd, 1 << 13, &pairs, 1);
    assert!(r >= 0.98, "{r}");

    let whole = vec![(0..cfg.n).collect::<Vec<_>>()];
    let r = layer_masked_correlation_from_gradients(&grads, &whole, &pairs).unwrap();
    assert!((r[0] - 1.0).abs() < 1e-12);
}

#[test]
fn symmetric_blocks_correlate_equally() {
    let cfg = LayeredConfig { n: 4096, examples: 200, layers: 2, layer_decay: 1.0, ..Default::default() };
    let o = LogisticOracle::layered(&cfg).unwrap();
    let blocks = contiguous_blocks(cfg.n, 2).unwrap();
    let r = layer_masked_correlation(&o, &vec![0.0; cfg.n], &blocks, 4000, 0).unwrap();
    assert!((r[0] - r[1]).abs() < 0.1, "{r:?}");
    assert!(layer_masked_correlation(&o, &vec![0.0; cfg.n], &[vec![0, 1]], 10, 0).is_err());
}

#[test]
fn sketched_scores_are_unbiased() {
    let n = 256;
    let mut rng = derive_stream(0, "tda.unbiased", 0);
    let g: Vec<Vec<f64>> = (0..4).map(|_| gaussian_vec(&mut rng, n)).collect();
    let g2: Vec<f64> = g[2].iter().zip(&g[0]).map(|(a, b)| a + 0.5 * b).collect();
    let pairs = [(&g[0], &g[1]), (&g[0], &g2), (&g[3], &g[3])];
    for alg in [Algorithm::Dense, Algorithm::Affd, Algorithm::Afjl, Algorithm::Qk] {
        for (a, b) in pairs {
            let truth = tda_score(a, b).unwrap();
            let vals: Vec<f64> = (0..1000u64)
                .map(|seed| {
                    let s: Sketcher = SketchSpec::new(alg, n, 32, seed).build().unwrap();
                    tda_score(&s.forward(a).unwrap(), &s.forward(b).unwrap()).unwrap()
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / 1000.0;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 999.0).sqrt();
            assert!((mean - truth).abs() <= 3.0 * sd / 1000f64.sqrt(), "{alg}: mean {mean} truth {truth} sd {sd}");
        }
    }
}

#[test]
fn harness_is_deterministic_across_thread_counts() {
    let cfg = LayeredConfig { n: 2048, examples: 64, layers: 4, ..Default::default() };
    let o = LogisticOracle::layered(&cfg).unwrap();
    let s: Sketcher = SketchSpec::new(Algorithm::Affd, cfg.n, 128, 5).build().unwrap();
    let theta = vec![0.0; cfg.n];
    let a = correlation_harness(&o, &theta, &s, 300, 4).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| correlation_harness(&o, &theta, &s, 300, 4).unwrap());
    assert_eq!(a.r.to_bits(), b.r.to_bits());
    assert_eq!(a.pairs, b.pairs);

    let grads = per_example_gradients(&o, &theta).unwrap();
    assert_eq!(sketch_gradients(&s, &grads).unwrap(), sketch_gradients(&s, &grads).unwrap());

    let mut buf = Vec::new();
    a.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("x_id,z_id,true,sketched\n"));
    assert_eq!(text.lines().count(), 301);
}

#[test]
fn zero_variance_is_undefined() {
    let o = LogisticOracle::new(8, vec![0.0; 8 * 10], vec![1.0; 10], 0.0).unwrap();
    let s: Sketcher = SketchSpec::new(Algorithm::Affd, 8, 4, 0).build().unwrap();
    assert!(matches!(correlation_harness(&o, &[0.0; 8], &s, 20, 0), Err(Error::UndefinedCorrelation(_))));
    assert!(correlation_harness(&o, &[0.0; 8], &s, 1, 0).is_err());
}
