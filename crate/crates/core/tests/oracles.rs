mod common;

use common::{dot, norm, rel_err};
use kronsketch::oracles::*;
use kronsketch::rng::{derive_stream, gaussian_vec};
use proptest::prelude::*;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn small_logistic(n: usize, m: usize, ridge: f64, seed: u64) -> (LogisticOracle, Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = gaussian_vec(&mut derive_stream(seed, "t.x", 0), n * m).iter().map(|v| v / (n as f64).sqrt()).collect();
    let y: Vec<f64> = gaussian_vec(&mut derive_stream(seed, "t.y", 0), m).iter().map(|v| if *v > 0.0 { 1.0 } else { 0.0 }).collect();
    (LogisticOracle::new(n, x.clone(), y.clone(), ridge).unwrap(), x, y)
}

fn quadratic(n: usize, basis: Basis) -> QuadraticOracle {
    let spec = power_law_with_outliers(n, 1.0, 1.2, &[5.0, 3.0]);
    let b = gaussian_vec(&mut derive_stream(3, "t.b", 0), n);
    QuadraticOracle::new(spec, b, basis).unwrap()
}

#[test]
fn quadratic_eigenpairs_match_spectrum() {
    for basis in [Basis::Identity, Basis::KronHaar { seed: 4, max_block: 8 }] {
        let o = quadratic(64, basis);
        let vs: Vec<Vec<f64>> = (0..64).map(|i| o.eigenvector(i).unwrap()).collect();
        for i in 0..64 {
            let av = o.apply_a(&vs[i]).unwrap();
            let lv: Vec<f64> = vs[i].iter().map(|v| v * o.spectrum()[i]).collect();
            assert!(rel_err(&av, &lv) < 1e-12);
            for j in 0..64 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&vs[i], &vs[j]) - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn quadratic_gradient_is_affine() {
    let o = quadratic(256, Basis::KronHaar { seed: 1, max_block: 16 });
    let theta = gaussian_vec(&mut derive_stream(9, "t.theta", 0), 256);
    let b = o.gradient(&vec![0.0; 256], Batch::Full).unwrap();
    let at = o.apply_a(&theta).unwrap();
    let want: Vec<f64> = at.iter().zip(&b).map(|(a, c)| a + c).collect();
    assert!(rel_err(&o.gradient(&theta, Batch::Full).unwrap(), &want) < 1e-12);
    assert_eq!(o.hvp(&theta, &theta, Batch::Full).unwrap(), at);
    let r = finite_difference_check(&o, &theta, Batch::Full, 1e-4, 1e-6).unwrap();
    assert!(r.passed, "{r:?}");
    let star = o.stationary_point().unwrap();
    assert!(norm(&o.gradient(&star, Batch::Full).unwrap()) < 1e-9);
}

#[test]
fn logistic_matches_direct_formula() {
    let (n, m, ridge) = (16, 40, 0.3);
    let (o, x, y) = small_logistic(n, m, ridge, 2);
    let theta = gaussian_vec(&mut derive_stream(5, "t.theta", 0), n);
    let mut g = vec![0.0; n];
    let mut loss = 0.0;
    for i in 0..m {
        let row = &x[i * n..(i + 1) * n];
        let z = dot(row, &theta);
        loss += ((1.0 + z.exp()).ln() - y[i] * z) / m as f64;
        for j in 0..n {
            g[j] += (sigmoid(z) - y[i]) * row[j] / m as f64;
        }
    }
    loss += 0.5 * ridge * dot(&theta, &theta);
    g.iter_mut().zip(&theta).for_each(|(a, t)| *a += ridge * t);
    assert!((o.loss(&theta, Batch::Full).unwrap() - loss).abs() < 1e-12);
    assert!(rel_err(&o.gradient(&theta, Batch::Full).unwrap(), &g) < 1e-12);

    let row = &x[3 * n..4 * n];
    let z = dot(row, &theta);
    let g3: Vec<f64> = row.iter().zip(&theta).map(|(r, t)| (sigmoid(z) - y[3]) * r + ridge * t).collect();
    assert!(rel_err(&o.gradient(&theta, Batch::Example(3)).unwrap(), &g3) < 1e-12);
    assert!(o.gradient(&theta, Batch::Example(m)).is_err());
}

#[test]
fn logistic_finite_differences() {
    let (o, _, _) = small_logistic(64, 256, 0.0, 7);
    let theta = gaussian_vec(&mut derive_stream(1, "t.theta", 0), 64);
    let r = finite_difference_check(&o, &theta, Batch::Full, 1e-4, 1e-5).unwrap();
    assert!(r.passed, "{r:?}");
    assert_eq!(r.directions, 64);
}

#[test]
fn finite_differences_flag_a_wrong_gradient() {
    struct Wrong;
    impl ModelOracle for Wrong {
        fn dim(&self) -> usize {
            3
        }
        fn loss(&self, t: &[f64], _: Batch) -> kronsketch::Result<f64> {
            Ok(t.iter().map(|v| v * v).sum())
        }
        fn gradient(&self, t: &[f64], _: Batch) -> kronsketch::Result<Vec<f64>> {
            Ok(t.to_vec())
        }
        fn hvp(&self, _: &[f64], u: &[f64], _: Batch) -> kronsketch::Result<Vec<f64>> {
            Ok(u.iter().map(|v| 2.0 * v).collect())
        }
    }
    let r = finite_difference_check(&Wrong, &[1.0, 2.0, 3.0], Batch::Full, 1e-4, 1e-5).unwrap();
    assert!(!r.passed);
    assert!(r.gradient_rel_err > 0.4);
}

#[test]
fn planted_gradient_lies_in_subspace() {
    let o = PlantedSubspaceOracle::random(512, 16, 3).unwrap();
    let theta = gaussian_vec(&mut derive_stream(2, "t.theta", 0), 512);
    let g = o.gradient(&theta, Batch::Full).unwrap();
    assert!(norm(&o.orthogonal_part(&g)) < 1e-12 * norm(&g).max(1.0));

    let perp = o.orthogonal_part(&gaussian_vec(&mut derive_stream(8, "t.u", 0), 512));
    let moved: Vec<f64> = theta.iter().zip(&perp).map(|(a, b)| a + 3.0 * b).collect();
    let (l0, l1) = (o.loss(&theta, Batch::Full).unwrap(), o.loss(&moved, Batch::Full).unwrap());
    assert!((l0 - l1).abs() < 1e-10 * l0.max(1.0));

    // hvp = 2P with P the orthogonal projector onto span(S).
    let u = gaussian_vec(&mut derive_stream(6, "t.u", 1), 512);
    let hu = o.hvp(&theta, &u, Batch::Full).unwrap();
    let hhu = o.hvp(&theta, &hu, Batch::Full).unwrap();
    let twice: Vec<f64> = hu.iter().map(|v| 2.0 * v).collect();
    assert!(rel_err(&hhu, &twice) < 1e-12);
    let trace: f64 = (0..512)
        .map(|i| {
            let mut e = vec![0.0; 512];
            e[i] = 1.0;
            o.hvp(&theta, &e, Batch::Full).unwrap()[i]
        })
        .sum();
    assert!((trace - 32.0).abs() < 1e-9);
    let r = finite_difference_check(&o, &theta, Batch::Full, 1e-4, 1e-6).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn layered_oracle_has_decaying_layers() {
    let cfg = LayeredConfig { n: 1024, examples: 64, layers: 4, ..Default::default() };
    let o = LogisticOracle::layered(&cfg).unwrap();
    assert_eq!(o.num_examples(), 64);
    let energy: Vec<f64> = cfg
        .blocks()
        .into_iter()
        .map(|b| (0..64).map(|i| o.row(i)[b.clone()].iter().map(|v| v * v).sum::<f64>()).sum())
        .collect();
    for w in energy.windows(2) {
        let ratio = w[1] / w[0];
        assert!((ratio - 0.49).abs() < 0.1, "{ratio}");
    }
    assert!(LogisticOracle::layered(&LayeredConfig { layers: 3, ..cfg }).is_err());
}

#[test]
fn bad_inputs_are_rejected() {
    let o = quadratic(16, Basis::Identity);
    assert!(o.gradient(&[0.0; 15], Batch::Full).is_err());
    assert!(o.loss(&[f64::NAN; 16], Batch::Full).is_err());
    assert!(PlantedSubspaceOracle::random(8, 9, 0).is_err());
    assert!(LogisticOracle::new(4, vec![0.0; 8], vec![0.0, 2.0], 0.0).is_err());
    assert!(LogisticOracle::new(4, vec![0.0; 8], vec![0.0, 1.0], -1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hvp_is_symmetric(seed in 0u64..10_000) {
        let (lo, _, _) = small_logistic(32, 20, 0.1, seed % 7);
        let qo = quadratic(64, Basis::KronHaar { seed, max_block: 8 });
        let oracles: [(&dyn ModelOracle, usize); 2] = [(&lo, 32), (&qo, 64)];
        for (o, n) in oracles {
            let mut rng = derive_stream(seed, "t.sym", n as u64);
            let theta = gaussian_vec(&mut rng, n);
            let u = gaussian_vec(&mut rng, n);
            let w = gaussian_vec(&mut rng, n);
            let a = dot(&o.hvp(&theta, &u, Batch::Full).unwrap(), &w);
            let b = dot(&u, &o.hvp(&theta, &w, Batch::Full).unwrap());
            prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1e-12));
        }
    }

    #[test]
    fn logistic_hessian_is_psd(seed in 0u64..10_000) {
        let (o, _, _) = small_logistic(24, 30, 0.0, seed % 5);
        let mut rng = derive_stream(seed, "t.psd", 0);
        let theta = gaussian_vec(&mut rng, 24);
        let u = gaussian_vec(&mut rng, 24);
        prop_assert!(dot(&u, &o.hvp(&theta, &u, Batch::Full).unwrap()) >= -1e-14);
    }
}
