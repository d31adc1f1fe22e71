mod common;

use common::*;
use kronsketch::kron::*;
use kronsketch::rng::{derive_stream, gaussian_vec, permutation};
use proptest::prelude::*;

fn hadamard_factors(sizes: &[usize], mode: PermuteMode, seed: u64) -> Vec<HadamardFactor> {
    sizes
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let p = if mode == PermuteMode::None {
                Vec::new()
            } else {
                permutation(&mut derive_stream(seed, "t", i as u64), c)
            };
            HadamardFactor::hadamard(c, p, mode).unwrap()
        })
        .collect()
}

#[test]
fn identity_factors_leave_input_unchanged() {
    let x: Vec<f64> = (0..24).map(|i| i as f64 - 3.5).collect();
    let eye = |n: usize| {
        let mut e = vec![0.0; n * n];
        (0..n).for_each(|i| e[i * n + i] = 1.0);
        OrthFactor::new(n, n, e).unwrap()
    };
    let fs = vec![eye(2), eye(3), eye(4)];
    assert_eq!(kron_apply(&x, &fs).unwrap(), x);
    assert_eq!(kron_apply_transpose(&x, &fs).unwrap(), x);
}

#[test]
fn e0_through_two_h2_factors() {
    let fs = hadamard_factors(&[2, 2], PermuteMode::None, 0);
    let y = kron_apply(&[1.0, 0.0, 0.0, 0.0], &fs).unwrap();
    let want = kron_all(&[hadamard(2), hadamard(2)]).matvec(&[1.0, 0.0, 0.0, 0.0]);
    for (a, b) in y.iter().zip(&want) {
        assert!((a - b).abs() < 1e-15);
        assert!((a - 0.5).abs() < 1e-15);
    }
}

#[test]
fn row_permuted_h4_cube_matches_dense() {
    let fs = hadamard_factors(&[4, 4, 4], PermuteMode::Rows, 11);
    let dense = kron_all(&fs.iter().map(hadamard_factor).collect::<Vec<_>>());
    let x = gaussian_vec(&mut derive_stream(1, "x", 0), 64);
    assert!(rel_err(&kron_apply(&x, &fs).unwrap(), &dense.matvec(&x)) < 1e-12);
    assert!(rel_err(&kron_apply_transpose(&x, &fs).unwrap(), &dense.t().matvec(&x)) < 1e-12);
}

#[test]
fn every_factor_type_matches_dense_up_to_1024() {
    let mut rng = derive_stream(5, "x", 0);
    for (sizes, mode) in [
        (vec![32, 32], PermuteMode::Cols),
        (vec![2, 512], PermuteMode::Rows),
        (vec![4, 8, 32], PermuteMode::Cols),
        (vec![1024], PermuteMode::Rows),
    ] {
        let n: usize = sizes.iter().product();
        let x = gaussian_vec(&mut rng, n);
        let h = hadamard_factors(&sizes, mode, 2);
        let hd = kron_all(&h.iter().map(hadamard_factor).collect::<Vec<_>>());
        assert!(rel_err(&kron_apply(&x, &h).unwrap(), &hd.matvec(&x)) < 1e-10);
        assert!(rel_err(&kron_apply_transpose(&x, &h).unwrap(), &hd.t().matvec(&x)) < 1e-10);

        let f: Vec<FourierFactor<f64>> = sizes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                FourierFactor::fourier(c, permutation(&mut derive_stream(9, "f", i as u64), c), mode)
                    .unwrap()
            })
            .collect();
        let fd = kron_all(&f.iter().map(fourier_factor).collect::<Vec<_>>());
        assert!(rel_err(&kron_apply(&x, &f).unwrap(), &fd.matvec(&x)) < 1e-10);
        assert!(rel_err(&kron_apply_transpose(&x, &f).unwrap(), &fd.t().matvec(&x)) < 1e-10);

        let q: Vec<OrthFactor<f64>> = sizes
            .iter()
            .enumerate()
            .map(|(i, &c)| sample_haar_factor(c, c, &mut derive_stream(4, "q", i as u64)).unwrap())
            .collect();
        let qd = kron_all(&q.iter().map(orth_factor).collect::<Vec<_>>());
        assert!(rel_err(&kron_apply(&x, &q).unwrap(), &qd.matvec(&x)) < 1e-10);
        assert!(rel_err(&kron_apply_transpose(&x, &q).unwrap(), &qd.t().matvec(&x)) < 1e-10);
    }
}

#[test]
fn rectangular_factors_project() {
    let mut rng = derive_stream(8, "q", 0);
    let q = vec![
        sample_haar_factor(2, 4, &mut rng).unwrap(),
        sample_haar_factor(3, 8, &mut rng).unwrap(),
    ];
    let qd = kron_all(&q.iter().map(orth_factor).collect::<Vec<_>>());
    let x = gaussian_vec(&mut rng, 32);
    let proj = kron_apply_transpose(&kron_apply(&x, &q).unwrap(), &q).unwrap();
    assert!(rel_err(&proj, &qd.t().mul(&qd).matvec(&x)) < 1e-10);
    assert!(rel_err(&kron_apply(&proj, &q).unwrap(), &kron_apply(&x, &q).unwrap()) < 1e-10);
    assert!(kron_apply(&x[..31], &q).is_err());
    assert!(kron_apply_transpose(&x[..5], &q).is_err());
}

#[test]
fn haar_first_entry_is_centered() {
    let mut rng = derive_stream(77, "haar", 0);
    let samples: Vec<f64> = (0..10_000)
        .map(|_| sample_haar_factor(4, 4, &mut rng).unwrap().get(0, 0))
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
    let se = (var / samples.len() as f64).sqrt();
    assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
    // Haar rows are uniform on the sphere, so E[Q00²] = 1/n.
    assert!((var - 0.25).abs() < 0.02, "var {var}");
}

#[test]
fn fourier_e0_is_first_dense_column() {
    let y = fourier_preconditioner_apply(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    let f = fourier(4);
    for (k, v) in y.iter().enumerate() {
        assert!((v - f.at(k, 0)).abs() < 1e-15);
    }
    assert!((y[0] - 0.5).abs() < 1e-15);
}

#[test]
fn fourier_matrix_is_orthogonal() {
    for n in [2, 4, 6, 10, 16] {
        let f = fourier(n);
        let g = f.mul(&f.t());
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g.at(i, j) - want).abs() < 1e-12);
            }
        }
        let p = FourierPreconditioner::<f64>::new(n).unwrap();
        let x = gaussian_vec(&mut derive_stream(n as u64, "x", 0), n);
        assert!(rel_err(&p.apply(&x).unwrap(), &f.matvec(&x)) < 1e-12);
    }
}

fn pow2_shape() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1u32..=5, 1..=3).prop_map(|v| v.into_iter().map(|b| 1usize << b).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hadamard_kron_is_an_isometry(sizes in pow2_shape(), seed in any::<u64>(), rows in any::<bool>()) {
        let mode = if rows { PermuteMode::Rows } else { PermuteMode::Cols };
        let fs = hadamard_factors(&sizes, mode, seed);
        let n: usize = sizes.iter().product();
        let x = gaussian_vec(&mut derive_stream(seed, "x", 0), n);
        let y = kron_apply(&x, &fs).unwrap();
        prop_assert!((norm(&y) - norm(&x)).abs() <= 1e-10 * norm(&x));
        let back = kron_apply_transpose(&y, &fs).unwrap();
        prop_assert!(rel_err(&back, &x) < 1e-10);
    }

    #[test]
    fn adjointness_holds_for_every_factor_type(sizes in pow2_shape(), seed in any::<u64>()) {
        let n: usize = sizes.iter().product();
        let x = gaussian_vec(&mut derive_stream(seed, "x", 0), n);
        let v = gaussian_vec(&mut derive_stream(seed, "v", 0), n);
        let check = |fx: Vec<f64>, ftv: Vec<f64>| {
            let (a, b) = (dot(&fx, &v), dot(&x, &ftv));
            (a - b).abs() <= 1e-10 * norm(&x) * norm(&v)
        };
        let h = hadamard_factors(&sizes, PermuteMode::Cols, seed);
        prop_assert!(check(kron_apply(&x, &h).unwrap(), kron_apply_transpose(&v, &h).unwrap()));
        let f: Vec<FourierFactor<f64>> = sizes.iter().map(|&c| {
            FourierFactor::fourier(c, permutation(&mut derive_stream(seed, "p", c as u64), c), PermuteMode::Rows).unwrap()
        }).collect();
        prop_assert!(check(kron_apply(&x, &f).unwrap(), kron_apply_transpose(&v, &f).unwrap()));
        let q: Vec<OrthFactor<f64>> = sizes.iter().map(|&c| {
            sample_haar_factor(c, c, &mut derive_stream(seed, "q", c as u64)).unwrap()
        }).collect();
        prop_assert!(check(kron_apply(&x, &q).unwrap(), kron_apply_transpose(&v, &q).unwrap()));
    }

    #[test]
    fn shapes_multiply_back_to_power_of_two(k in 0u32..24, b in 1u32..11) {
        let s = compute_kron_shapes(1usize << k, 1usize << b).unwrap();
        prop_assert_eq!(s.iter().product::<usize>(), 1usize << k);
        prop_assert!(s.iter().all(|&c| c <= 1usize << b && c.is_power_of_two()));
    }
}
