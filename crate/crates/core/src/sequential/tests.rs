use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::numerics::{paulis, random};
use crate::values::{ClassicalStrategy, CommutingStrategy, QuantumStrategy};

fn witness() -> SequentialQuantumStrategy {
    SequentialQuantumStrategy::from_json_file(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data/degree2_witness.json")))
        .unwrap()
}

fn basis_povm(v: &CMatrix) -> Vec<CMatrix> {
    let e = hermitian_eig(v, 1e-12).unwrap();
    (0..v.rows()).map(|k| CMatrix::projector(&e.vector(k))).collect()
}

fn optimal_chsh() -> QuantumStrategy {
    let r = 1.0 / 2f64.sqrt();
    let bob = |o: &CMatrix| basis_povm(o);
    QuantumStrategy {
        d_a: 2,
        d_b: 2,
        psi: vec![C64::new(r, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(r, 0.0)],
        m: vec![basis_povm(&paulis::z()), basis_povm(&paulis::x())],
        n: vec![bob(&(&paulis::z() + &paulis::x()).scale_real(r)), bob(&(&paulis::z() - &paulis::x()).scale_real(r))],
    }
}

fn random_tensor(rng: &mut ChaCha8Rng, da: usize, db: usize) -> QuantumStrategy {
    QuantumStrategy {
        d_a: da,
        d_b: db,
        psi: random::random_state(rng, da * db),
        m: (0..2).map(|_| random::random_povm(rng, da, 2)).collect(),
        n: (0..2).map(|_| random::random_povm(rng, db, 3)).collect(),
    }
}

#[test]
fn trivial_correlation() {
    let p0 = CMatrix::diag_real(&[1.0, 0.0]);
    let p1 = CMatrix::diag_real(&[0.0, 1.0]);
    let zero = CMatrix::zeros(2, 2);
    let s = SequentialQuantumStrategy::new(
        vec![vec![p0.clone(), zero.clone()], vec![p0.clone(), zero]],
        vec![vec![p0.clone(), p1.clone()], vec![p0, p1]],
    )
    .unwrap();
    let c = correlation_of(&s);
    for x in 0..2 {
        for y in 0..2 {
            assert_eq!(c.get(x, y, 0, 0), 1.0);
        }
    }
}

#[test]
fn invalid_strategies_are_rejected() {
    let half = CMatrix::diag_real(&[0.5, 0.0]);
    let b = vec![vec![CMatrix::identity(2)]];
    assert!(SequentialQuantumStrategy::new(vec![vec![half.clone()]], b.clone()).is_err());
    assert!(SequentialQuantumStrategy::new(vec![vec![half, CMatrix::diag_real(&[0.5, 0.0, 0.0])]], b).is_err());
}

#[test]
fn forward_constructions_reproduce_correlations() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let q = random_tensor(&mut rng, 2, 3);
    let s = from_tensor(&q).unwrap();
    s.validate(1e-9).unwrap();
    assert!(correlation_of(&s).max_abs_diff(&q.correlation()) < 1e-10);

    let c = planted_commuting_strategy(&mut rng, &[(2, 1), (1, 2), (2, 2)], (2, 2, 2, 2)).unwrap();
    assert!(c.commutation_residual < 1e-12);
    let s = from_commuting(&c).unwrap();
    s.validate(1e-9).unwrap();
    assert!(correlation_of(&s).max_abs_diff(&c.correlation()) < 1e-10);
    assert!(strong_nonsig_residual(&s, 4).0 <= 1e-9);
    assert!(crate::games::check_nonsignaling(&correlation_of(&s)).bob_to_alice_max_violation < 1e-10);
}

#[test]
fn degree_two_witness() {
    let s = witness();
    assert!(strong_nonsig_residual(&s, 1).0 < 1e-15);
    let (r, w) = strong_nonsig_residual(&s, 2);
    assert!((r - 0.5).abs() < 1e-12, "{r}");
    assert_eq!(w.degree(), 2);
    let again = SequentialQuantumStrategy::from_json_str(&s.to_json()).unwrap();
    assert_eq!(again, s);
}

#[test]
fn identical_states_have_zero_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = random::random_density(&mut rng, 3);
    let b: Vec<Vec<CMatrix>> = (0..2).map(|_| random::random_povm(&mut rng, 3, 2)).collect();
    let s = SequentialQuantumStrategy::new(
        vec![vec![rho.scale_real(0.25), rho.scale_real(0.75)], vec![rho.scale_real(0.5), rho.scale_real(0.5)]],
        b,
    )
    .unwrap();
    for d in 1..=4 {
        assert!(strong_nonsig_residual(&s, d).0 < 1e-12);
    }
}

#[test]
fn polynomial_evaluation() {
    let s = witness();
    let p = NCPolynomial::chsh_anticommutator_squared();
    assert_eq!(p.degree(), 4);
    let z = paulis::z();
    let x = paulis::x();
    let direct = z.anticommutator(&x);
    let direct = direct.matmul(&direct);
    assert!(p.evaluate(&s.b).unwrap().max_abs_diff(&direct) < 1e-12);
    assert!(NCPolynomial::monomial(vec![(2, 0)]).evaluate(&s.b).is_err());
    assert_eq!(monomials(&s.b, 2).len(), 4 + 16);
    let adj = NCPolynomial::monomial(vec![(0, 0), (1, 0)]).adjoint();
    assert_eq!(adj.terms[0].1, vec![(1, 0), (0, 0)]);
}

#[test]
fn classical_conversion() {
    let c = ClassicalStrategy {
        gamma: vec![0.2, 0.8],
        p_a: vec![vec![vec![1.0, 0.0], vec![0.3, 0.7]], vec![vec![0.5, 0.5], vec![0.0, 1.0]]],
        q_b: vec![vec![vec![0.6, 0.4], vec![1.0, 0.0]], vec![vec![0.1, 0.9], vec![0.5, 0.5]]],
    };
    let s = SequentialClassicalStrategy::from_classical(&c);
    s.validate(1e-12).unwrap();
    let back = convert_classical(&s, 1e-12).unwrap();
    back.validate(1e-12).unwrap();
    assert!(back.correlation().max_abs_diff(&c.correlation()) < 1e-12);
    assert!(s.correlation().max_abs_diff(&c.correlation()) < 1e-12);

    let signaling = SequentialClassicalStrategy {
        p_a: vec![vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![vec![0.0, 1.0], vec![0.0, 0.0]]],
        q_b: vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
    };
    assert!(matches!(convert_classical(&signaling, 1e-6), Err(Error::NotStronglyNonsignaling(_))));
}

#[test]
fn purification_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = random_tensor(&mut rng, 3, 2);
    let s = from_tensor(&q).unwrap();
    let t = convert_purify(&s, 1e-9).unwrap();
    t.validate(1e-8).unwrap();
    assert_eq!((t.d_a, t.d_b), (2 * 2, 2));
    assert!(t.correlation().max_abs_diff(&q.correlation()) < 1e-8);

    let chsh = from_tensor(&optimal_chsh()).unwrap();
    let t = convert_purify(&chsh, 1e-9).unwrap();
    let v = t.value(&crate::games::chsh()).unwrap();
    assert!((v - (2.0 + 2f64.sqrt()) / 4.0).abs() < 1e-6);

    assert!(matches!(convert_purify(&witness(), 1e-6), Err(Error::NotStronglyNonsignaling(_))));
}

#[test]
fn block_reduce_diagonal_and_full() {
    let diag = |v: &[f64]| CMatrix::diag_real(v);
    let b = vec![vec![diag(&[1.0, 1.0, 0.0]), diag(&[0.0, 0.0, 1.0])]];
    let rho = CMatrix::identity(3).scale_real(1.0 / 3.0);
    let s = SequentialQuantumStrategy::new(vec![vec![rho.clone()]], b).unwrap();
    let (dec, _) = block_reduce(&s, 1e-9).unwrap();
    let dims: Vec<(usize, usize)> = dec.blocks.iter().map(|b| (b.n, b.m)).collect();
    assert_eq!(dims, vec![(1, 1), (1, 2)]);
    assert!(dec.residual < 1e-10);
    assert_eq!(dec.algebra_dim, 2);

    let w = witness();
    let (dec, reduced) = block_reduce(&w, 1e-9).unwrap();
    assert_eq!(dec.blocks.len(), 1);
    assert_eq!((dec.blocks[0].n, dec.blocks[0].m), (2, 1));
    for x in 0..2 {
        for a in 0..2 {
            assert!(reduced.sigma[x][a].max_abs_diff(&w.sigma[x][a]) < 1e-10);
        }
    }
}

#[test]
fn block_reduce_recovers_planted_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let planted = [(1, 2), (2, 1), (2, 3)];
    let c = planted_commuting_strategy(&mut rng, &planted, (2, 2, 2, 2)).unwrap();
    let s = from_commuting(&c).unwrap();
    let (dec, reduced) = block_reduce(&s, 1e-9).unwrap();
    let mut got: Vec<(usize, usize)> = dec.blocks.iter().map(|b| (b.n, b.m)).collect();
    got.sort();
    let mut want = planted.to_vec();
    want.sort();
    assert_eq!(got, want);
    assert!(dec.residual < 1e-8, "{}", dec.residual);
    assert_eq!(dec.algebra_dim, 1 + 4 + 4);
    for x in 0..2 {
        for a in 0..2 {
            assert!((reduced.sigma[x][a].trace() - s.sigma[x][a].trace()).norm() < 1e-10);
        }
    }
    // trace identity on algebra elements
    let basis = algebra_basis(&s.b.iter().flatten().cloned().collect::<Vec<_>>(), 1e-9).unwrap();
    for el in &basis {
        for x in 0..2 {
            for a in 0..2 {
                let d = (reduced.sigma[x][a].trace_product(el) - s.sigma[x][a].trace_product(el)).norm();
                assert!(d < 1e-8, "{d}");
            }
        }
    }
    assert!(reduced.sigma_x(0).max_abs_diff(&reduced.sigma_x(1)) < 1e-8);
    let t = convert_purify(&reduced, 1e-8).unwrap();
    assert!(t.correlation().max_abs_diff(&c.correlation()) < 1e-7);
}

#[test]
fn chsh_residuals() {
    let honest = from_tensor(&optimal_chsh()).unwrap();
    assert!(chsh_selftest_residual(&honest).unwrap().abs() < 1e-12);
    let mut same = honest.clone();
    same.b[1] = same.b[0].clone();
    assert!((chsh_selftest_residual(&same).unwrap() - 4.0).abs() < 1e-9);
    let mut wrong = honest;
    wrong.b.push(wrong.b[0].clone());
    assert!(matches!(chsh_selftest_residual(&wrong), Err(Error::ShapeMismatch(_))));
}

#[test]
fn commuting_from_tensor_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let q = random_tensor(&mut rng, 2, 2);
    let c = CommutingStrategy::from_tensor(&q);
    let s1 = from_tensor(&q).unwrap();
    let s2 = from_commuting(&c).unwrap();
    assert!(correlation_of(&s1).max_abs_diff(&correlation_of(&s2)) < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn residual_is_monotone_in_degree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma: Vec<Vec<CMatrix>> = (0..2)
            .map(|_| { let r = random::random_density(&mut rng, 2); vec![r.scale_real(0.5), r.scale_real(0.5)] })
            .collect();
        let b: Vec<Vec<CMatrix>> = (0..2).map(|_| random::random_povm(&mut rng, 2, 2)).collect();
        let s = SequentialQuantumStrategy::new(sigma, b).unwrap();
        let r: Vec<f64> = (1..=3).map(|d| strong_nonsig_residual(&s, d).0).collect();
        prop_assert!(r[0] <= r[1] + 1e-15 && r[1] <= r[2] + 1e-15);
    }
}
