use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::real::{cholesky_solve, lu_solve, RMatrix};
use super::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn eig_2x2_closed_form() {
    // [[a, b], [b*, d]] has eigenvalues (a+d)/2 +- sqrt(((a-d)/2)^2 + |b|^2)
    let (a, d, b) = (0.3, -1.1, c(0.4, -0.7));
    let m = CMatrix::from_vec(2, 2, vec![c(a, 0.0), b, b.conj(), c(d, 0.0)]).unwrap();
    let e = hermitian_eig(&m, 1e-12).unwrap();
    let r = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
    assert!((e.values[0] - ((a + d) / 2.0 + r)).abs() < 1e-13);
    assert!((e.values[1] - ((a + d) / 2.0 - r)).abs() < 1e-13);
}

#[test]
fn eig_rejects_non_hermitian() {
    let m = CMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
    assert!(matches!(hermitian_eig(&m, 1e-9), Err(crate::Error::NotHermitian(_))));
}

#[test]
fn eigenvector_phase_is_canonical() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = random::random_hermitian(&mut rng, 5);
    let e = hermitian_eig(&h, 1e-9).unwrap();
    for k in 0..5 {
        let v = e.vector(k);
        let first = v.iter().find(|z| z.norm() > 1e-8).unwrap();
        assert!(first.im.abs() < 1e-12 && first.re > 0.0);
    }
}

#[test]
fn svd_of_wide_and_tall() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &(m, n) in &[(3usize, 5usize), (5, 3), (4, 4), (1, 3)] {
        let a = CMatrix::from_fn(m, n, |_, _| random::gaussian_vector(&mut rng, 1)[0]);
        let s = svd(&a).unwrap();
        let mut sig = CMatrix::zeros(m, n);
        for (i, &x) in s.s.iter().enumerate() {
            sig[(i, i)] = c(x, 0.0);
        }
        let rebuilt = s.u.matmul(&sig).matmul(&s.v.adjoint());
        assert!(rebuilt.max_abs_diff(&a) < 1e-10, "{m}x{n}");
        assert!(is_unitary(&s.u, 1e-10) && is_unitary(&s.v, 1e-10));
        assert!(s.s.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn svd_rank_deficient() {
    let v = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)];
    let a = CMatrix::outer(&v, &v);
    let s = svd(&a).unwrap();
    assert!((s.s[0] - 6.0).abs() < 1e-12);
    assert!(s.s[1].abs() < 1e-12 && s.s[2].abs() < 1e-12);
    assert!(is_unitary(&s.u, 1e-10));
}

#[test]
fn partial_trace_of_product_operator() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random::random_density(&mut rng, 2);
    let b = random::random_density(&mut rng, 3);
    let ab = kron(&a, &b);
    assert!(partial_trace(&ab, (2, 3), Side::Second).unwrap().max_abs_diff(&a) < 1e-13);
    assert!(partial_trace(&ab, (2, 3), Side::First).unwrap().max_abs_diff(&b) < 1e-13);
}

#[test]
fn reduced_from_vector_matches_partial_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let psi = random::random_state(&mut rng, 6);
    let rho = CMatrix::projector(&psi);
    for side in [Side::First, Side::Second] {
        let a = reduced_from_vector(&psi, (2, 3), side).unwrap();
        let b = partial_trace(&rho, (2, 3), side).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-13);
    }
}

#[test]
fn sqrt_psd_squares_back_and_rejects_negative() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let r = random::random_density(&mut rng, 4);
    let s = sqrt_psd(&r, 1e-12).unwrap();
    assert!(s.matmul(&s).max_abs_diff(&r) < 1e-12);
    let neg = CMatrix::diag_real(&[1.0, -0.5]);
    assert!(matches!(sqrt_psd(&neg, 1e-9), Err(crate::Error::NotPsd(_))));
}

#[test]
fn trace_distance_of_orthogonal_states_is_one() {
    let a = CMatrix::diag_real(&[1.0, 0.0]);
    let b = CMatrix::diag_real(&[0.0, 1.0]);
    assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn real_solvers_agree() {
    let a = RMatrix::from_fn(3, 3, |i, j| if i == j { 4.0 } else { 1.0 / (1 + i + j) as f64 });
    let b = [1.0, -2.0, 0.5];
    let x1 = cholesky_solve(&a, &b).unwrap();
    let x2 = lu_solve(&a, &b).unwrap();
    for i in 0..3 {
        let r: f64 = (0..3).map(|j| a[(i, j)] * x1[j]).sum();
        assert!((r - b[i]).abs() < 1e-13);
        assert!((x1[i] - x2[i]).abs() < 1e-13);
    }
    let inv = a.spd_inverse().unwrap();
    let p = a.matmul(&inv);
    assert!((0..3).all(|i| (0..3).all(|j| (p[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13)));
}

#[test]
fn real_symmetric_eig() {
    let a = RMatrix::from_fn(4, 4, |i, j| ((i + 1) * (j + 1)) as f64 + if i == j { 1.0 } else { 0.0 });
    let (vals, vecs) = a.symmetric_eig();
    // rank-one (30) plus identity
    assert!((vals[3] - 31.0).abs() < 1e-12);
    assert!(vals[..3].iter().all(|v| (v - 1.0).abs() < 1e-12));
    let av = a.matmul(&vecs);
    for k in 0..4 {
        for i in 0..4 {
            assert!((av[(i, k)] - vals[k] * vecs[(i, k)]).abs() < 1e-11);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eig_reconstructs(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random::random_hermitian(&mut rng, n);
        let e = hermitian_eig(&h, 1e-9).unwrap();
        prop_assert!(e.map_spectrum(|x| x).max_abs_diff(&h) < 1e-10);
        prop_assert!(is_unitary(&e.vectors, 1e-10));
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn random_unitaries_are_unitary(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert!(is_unitary(&random::random_unitary(&mut rng, n), 1e-10));
    }

    #[test]
    fn random_measurements_sum_to_identity(seed in any::<u64>(), n in 1usize..6, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ms = random::random_projective_measurement(&mut rng, n, k);
        let mut sum = CMatrix::zeros(n, n);
        for m in &ms {
            prop_assert!(m.matmul(m).max_abs_diff(m) < 1e-10);
            sum = &sum + m;
        }
        prop_assert!(sum.max_abs_diff(&CMatrix::identity(n)) < 1e-10);
    }
}
