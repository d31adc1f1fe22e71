mod common;

use common::{rel_err, sketch_matrix};
use kronsketch::calculus::*;
use kronsketch::oracles::*;
use kronsketch::rng::{derive_stream, gaussian_vec};
use kronsketch::sketch::{Algorithm, IdentitySketch, Preconditioner, SketchSpec, Sketcher};
use proptest::prelude::*;

fn logistic(n: usize, m: usize, seed: u64) -> LogisticOracle {
    let x = gaussian_vec(&mut derive_stream(seed, "c.x", 0), n * m);
    let y = (0..m).map(|i| (i % 2) as f64).collect();
    LogisticOracle::new(n, x, y, 0.05).unwrap()
}

fn sketchers(n: usize, d: usize, seed: u64) -> Vec<Sketcher<f64>> {
    let mut out = Vec::new();
    for a in Algorithm::ALL {
        for p in [Preconditioner::Hadamard, Preconditioner::Fft, Preconditioner::KronOrthogonal] {
            let spec = SketchSpec::new(a, n, d, seed).with_preconditioner(p).with_max_block(16);
            if spec.validate().is_ok() {
                out.push(spec.build().unwrap());
            }
        }
    }
    out
}

#[test]
fn explicit_and_implicit_modes_agree() {
    let n = 200;
    let o = logistic(n, 30, 1);
    let q = QuadraticOracle::new(power_law_with_outliers(n, 1.0, 1.0, &[4.0]), vec![0.5; n], Basis::Identity).unwrap();
    let theta = gaussian_vec(&mut derive_stream(2, "c.theta", 0), n);
    for s in sketchers(n, 16, 3) {
        let v = gaussian_vec(&mut derive_stream(4, "c.v", 0), 16);
        let oracles: [&dyn ModelOracle; 2] = [&o, &q];
        for or in oracles {
            for batch in [Batch::Full, Batch::Example(0)] {
                let ge = explicit_grad_sketch(&s, or, &theta, batch).unwrap();
                let gi = implicit_grad_sketch(&s, or, &theta, batch).unwrap();
                assert!(rel_err(&gi, &ge) <= 1e-8, "{}", s.spec().to_json());
                let he = explicit_hvp_sketch(&s, or, &theta, &v, batch).unwrap();
                let hi = implicit_hvp_sketch(&s, or, &theta, &v, batch).unwrap();
                assert!(rel_err(&hi, &he) <= 1e-8, "{}", s.spec().to_json());
            }
        }
    }
}

#[test]
fn sketches_match_dense_chain_rule() {
    let n = 128;
    let q = QuadraticOracle::new(power_law_with_outliers(n, 1.0, 1.5, &[3.0]), vec![1.0; n], Basis::KronHaar { seed: 5, max_block: 16 }).unwrap();
    let theta = gaussian_vec(&mut derive_stream(8, "c.theta", 0), n);
    let a: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            q.apply_a(&e).unwrap()
        })
        .collect();
    for s in sketchers(n, 8, 9) {
        let phi = sketch_matrix(&s);
        let g = q.gradient(&theta, Batch::Full).unwrap();
        assert!(rel_err(&implicit_grad_sketch(&s, &q, &theta, Batch::Full).unwrap(), &phi.matvec(&g)) < 1e-10);
        let v = gaussian_vec(&mut derive_stream(1, "c.v", 0), 8);
        let u = phi.t().matvec(&v);
        let au: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[j][i] * u[j]).sum()).collect();
        let want = phi.matvec(&au);
        assert!(rel_err(&implicit_hvp_sketch(&s, &q, &theta, &v, Batch::Full).unwrap(), &want) < 1e-10);
    }
}

#[test]
fn callback_hvp_matches_oracle_path() {
    let n = 256;
    let diag: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / 10.0).collect();
    let q = QuadraticOracle::diagonal(diag.clone(), vec![0.0; n]).unwrap();
    let theta = vec![0.0; n];
    let s: Sketcher = SketchSpec::new(Algorithm::Affd, n, 32, 11).build().unwrap();
    let v = gaussian_vec(&mut derive_stream(0, "c.v", 0), 32);
    let via_cb = hvp_sketch(&s, |u| Ok(u.iter().zip(&diag).map(|(a, b)| a * b).collect()), &v).unwrap();
    let native = implicit_hvp_sketch(&s, &q, &theta, &v, Batch::Full).unwrap();
    assert_eq!(via_cb, native);
    assert!(hvp_sketch(&s, |_| Ok(vec![0.0; 3]), &v).is_err());
    assert_eq!(hvp_sketch(&s, |u| Ok(u.to_vec()), &[0.0; 32]).unwrap(), vec![0.0; 32]);
}

#[test]
fn subspace_oracle_passes_finite_differences() {
    let n = 96;
    let o = logistic(n, 20, 4);
    let theta0 = gaussian_vec(&mut derive_stream(3, "c.theta", 0), n);
    let s: Sketcher = SketchSpec::new(Algorithm::Afjl, n, 24, 2).build().unwrap();
    let sub = SubspaceOracle::new(&o, &s, &theta0).unwrap();
    let omega = gaussian_vec(&mut derive_stream(5, "c.omega", 0), 24);
    let r = finite_difference_check(&sub, &omega, Batch::Full, 1e-4, 1e-5).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn sketched_operator_on_identity_sketch_is_the_hessian() {
    let n = 32;
    let q = QuadraticOracle::new(power_law_with_outliers(n, 1.0, 1.0, &[]), vec![0.0; n], Basis::KronHaar { seed: 1, max_block: 8 }).unwrap();
    let id = IdentitySketch { n };
    let op = SketchedOperator::new(&id, &q, vec![0.0; n], Batch::Full, Mode::Explicit).unwrap();
    let v = gaussian_vec(&mut derive_stream(6, "c.v", 0), n);
    assert_eq!(op.apply(&v).unwrap(), q.apply_a(&v).unwrap());
    assert_eq!(op.dim(), n);
    let dense = DenseOperator { n: 2, a: vec![1.0, 2.0, 3.0, 4.0] };
    assert_eq!(dense.apply(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
}

#[test]
fn mismatched_dimensions_are_rejected() {
    let q = QuadraticOracle::diagonal(vec![1.0; 64], vec![0.0; 64]).unwrap();
    let s: Sketcher = SketchSpec::new(Algorithm::Dense, 32, 4, 0).build().unwrap();
    assert!(explicit_grad_sketch(&s, &q, &[0.0; 64], Batch::Full).is_err());
    let s: Sketcher = SketchSpec::new(Algorithm::Dense, 64, 4, 0).build().unwrap();
    assert!(implicit_hvp_sketch(&s, &q, &[0.0; 64], &[0.0; 5], Batch::Full).is_err());
    assert!(implicit_grad_sketch(&s, &q, &[0.0; 63], Batch::Full).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn implicit_gradient_is_linear_in_the_gradient(seed in 0u64..1000, alg in 0usize..6) {
        let n = 64;
        let a = Algorithm::ALL[alg];
        let s: Sketcher = SketchSpec::new(a, n, 8, seed).build().unwrap();
        let mut rng = derive_stream(seed, "c.lin", 0);
        let b1 = gaussian_vec(&mut rng, n);
        let b2 = gaussian_vec(&mut rng, n);
        let sum: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| x + y).collect();
        let g = |b: Vec<f64>| {
            let q = QuadraticOracle::diagonal(vec![1.0; n], b).unwrap();
            implicit_grad_sketch(&s, &q, &vec![0.0; n], Batch::Full).unwrap()
        };
        let (g1, g2, g12) = (g(b1), g(b2), g(sum));
        let added: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| x + y).collect();
        prop_assert!(rel_err(&g12, &added) < 1e-10);
        prop_assert_eq!(s.output_dim(), 8);
    }
}
