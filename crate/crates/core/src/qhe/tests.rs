use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::harness::{exhaustive_correctness, security_harness, FirstPayloadBit, OracleComparison};
use super::*;
use crate::numerics::{kron_all, paulis, random, CMatrix};

fn all_messages(l: usize) -> Vec<Vec<bool>> {
    (0..1usize << l).map(|m| to_bits(m, l)).collect()
}

fn random_clifford(rng: &mut ChaCha8Rng, wires: usize, len: usize) -> Vec<Gate> {
    (0..len)
        .map(|_| {
            let a = rng.gen_range(0..wires);
            let mut b = rng.gen_range(0..wires);
            if wires > 1 {
                while b == a {
                    b = rng.gen_range(0..wires);
                }
            }
            match rng.gen_range(0..if wires > 1 { 9 } else { 6 }) {
                0 => Gate::H(a),
                1 => Gate::S(a),
                2 => Gate::Sdg(a),
                3 => Gate::X(a),
                4 => Gate::Y(a),
                5 => Gate::Z(a),
                6 => Gate::Cnot { control: a, target: b },
                7 => Gate::Cz(a, b),
                _ => Gate::Swap(a, b),
            }
        })
        .collect()
}

fn aux_ensemble(rng: &mut ChaCha8Rng, dim: usize) -> Vec<(f64, Vec<C64>)> {
    vec![(0.3, random::random_state(rng, dim)), (0.7, random::random_state(rng, dim))]
}

#[test]
fn gen_is_deterministic_and_rejects_zero() {
    for b in [backend(BackendKind::Ideal, 2), backend(BackendKind::Clifford, 2)] {
        assert_eq!(b.gen(8, 11).unwrap(), b.gen(8, 11).unwrap());
        assert_eq!(b.gen(8, 11).unwrap().bits.len(), 8);
        assert!(matches!(b.gen(0, 1), Err(Error::InvalidInput(_))));
    }
}

#[test]
fn distinct_seeds_rarely_collide() {
    let b = CliffordBackend::new(1);
    let keys: Vec<_> = (0..1000).map(|s| b.gen(8, s).unwrap()).collect();
    let collisions = keys.windows(2).filter(|w| w[0] == w[1]).count();
    // expected 999/256
    assert!(collisions < 15, "{collisions}");
}

#[test]
fn round_trip_and_fresh_nonces() {
    for b in [backend(BackendKind::Ideal, 2), backend(BackendKind::Clifford, 2)] {
        let sk = b.gen(8, 3).unwrap();
        for m in all_messages(2) {
            let c1 = b.enc(&sk, &m).unwrap();
            let c2 = b.enc(&sk, &m).unwrap();
            assert_ne!(c1, c2);
            assert_eq!(b.dec(&sk, &c1).unwrap(), m);
            assert_eq!(b.dec(&sk, &c2).unwrap(), m);
        }
    }
}

#[test]
fn wrong_key_behaviour() {
    let ideal = IdealBackend::new(2);
    let (k1, k2) = (ideal.gen(8, 1).unwrap(), ideal.gen(8, 2).unwrap());
    let ct = ideal.enc(&k1, &[true, false]).unwrap();
    assert!(matches!(ideal.dec(&k2, &ct), Err(Error::WrongKey)));

    let cl = CliffordBackend::new(8);
    let m = vec![false; 8];
    let ct = cl.enc(&cl.gen(16, 1).unwrap(), &m).unwrap();
    let garbled = (2..10).any(|s| cl.dec(&cl.gen(16, s).unwrap(), &ct).unwrap() != m);
    assert!(garbled);
}

#[test]
fn ideal_handles_do_not_depend_on_plaintext() {
    let b = IdealBackend::new(3);
    let sk = b.gen(4, 0).unwrap();
    let bytes: Vec<Vec<u8>> = all_messages(3).iter().map(|m| b.enc_with_nonce(&sk, m, 9).unwrap().to_bytes()).collect();
    assert!(bytes.windows(2).all(|w| w[0] == w[1]));
    let parsed = Ciphertext::from_bytes(BackendKind::Ideal, &bytes[0], 3).unwrap();
    assert!(matches!(b.dec(&sk, &parsed), Err(Error::DecodeFailure(_))));
}

#[test]
fn prf_matches_shipped_vectors() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/prf_vectors.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let vectors = doc["vectors"].as_array().unwrap();
    assert!(!vectors.is_empty());
    for v in vectors {
        let bits: Vec<bool> = v["key_bits"].as_str().unwrap().chars().map(|c| c == '1').collect();
        let sk = SecretKey { lambda: v["lambda"].as_u64().unwrap() as usize, bits };
        let tag = v["tag"].as_str().unwrap().as_bytes()[0];
        let out: String = prf(&sk, v["nonce"].as_u64().unwrap(), tag).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(out, v["output"].as_str().unwrap());
    }
}

#[test]
fn clifford_payload_is_message_xor_prf() {
    let b = CliffordBackend::new(5);
    let sk = b.gen(8, 77).unwrap();
    let m = [true, false, true, true, false];
    let ct = b.enc_with_nonce(&sk, &m, 12).unwrap();
    let pad = unpack_bits(&prf(&sk, 12, b'X'), 5);
    let expect: Vec<bool> = m.iter().zip(&pad).map(|(a, p)| a ^ p).collect();
    assert_eq!(ct.payload, expect);
}

#[test]
fn wire_format() {
    let b = CliffordBackend::new(10);
    let sk = b.gen(8, 5).unwrap();
    let ct = b.enc_with_nonce(&sk, &[true; 10], 0x0102030405060708).unwrap();
    let bytes = ct.to_bytes();
    assert_eq!(bytes.len(), 8 + 2);
    assert_eq!(&bytes[..8], &[1, 2, 3, 4, 5, 6, 7, 8]);
    assert_eq!(Ciphertext::from_bytes(BackendKind::Clifford, &bytes, 10).unwrap(), ct);
    let c = EvalCircuit::new(10, 0, vec![Gate::H(0), Gate::Cnot { control: 0, target: 3 }]).unwrap();
    let br = b.eval_branches(&ct, &c, &[(1.0, vec![C64::new(1.0, 0.0)])], 1).unwrap();
    let evaluated = &br[0].ciphertext;
    let back = Ciphertext::from_bytes(BackendKind::Clifford, &evaluated.to_bytes(), 10).unwrap();
    assert_eq!(&back, evaluated);
    assert!(Ciphertext::from_bytes(BackendKind::Clifford, &bytes[..5], 10).is_err());
}

#[test]
fn identity_circuit_preserves_message() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for b in [backend(BackendKind::Ideal, 2), backend(BackendKind::Clifford, 2)] {
        let sk = b.gen(8, 1).unwrap();
        let c = EvalCircuit::new(2, 1, vec![]).unwrap();
        for m in all_messages(2) {
            let ct = b.enc(&sk, &m).unwrap();
            let aux = StateVector::basis(4, 1);
            let (out, residual) = b.eval(&ct, &c, &aux, 2, &mut rng).unwrap();
            assert_eq!(b.dec(&sk, &out).unwrap(), m);
            assert_eq!(residual.dim(), 2);
        }
    }
}

#[test]
fn cnot_into_aux_matches_plaintext() {
    let c = EvalCircuit::new(1, 1, vec![Gate::Cnot { control: 0, target: 1 }]).unwrap();
    let aux = [(1.0, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)])];
    for b in [backend(BackendKind::Ideal, 1), backend(BackendKind::Clifford, 1)] {
        for seed in 0..4 {
            let sk = b.gen(8, seed).unwrap();
            assert!(exhaustive_correctness(b.as_ref(), &sk, &c, &aux, 1).unwrap() < 1e-12);
        }
    }
}

#[test]
fn controlled_basis_change_needs_ideal_backend() {
    let ch = CMatrix::direct_sum(&[CMatrix::identity(2), paulis::h()]);
    let c = EvalCircuit::new(1, 1, vec![Gate::Unitary { wires: vec![0, 1], matrix: ch }, Gate::Swap(0, 1)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let aux = aux_ensemble(&mut rng, 4);
    let cl = CliffordBackend::new(1);
    let sk = cl.gen(8, 0).unwrap();
    let ct = cl.enc(&sk, &[true]).unwrap();
    assert!(!cl.supports(&c));
    assert!(matches!(cl.eval_branches(&ct, &c, &aux, 2), Err(Error::UnsupportedCircuit(_))));
    let ideal = IdealBackend::new(1);
    let sk = ideal.gen(8, 0).unwrap();
    assert_eq!(exhaustive_correctness(&ideal, &sk, &c, &aux, 2).unwrap(), 0.0);
}

/// `X^x Z^z` on `n` qubits, wire 0 most significant.
fn pauli(n: usize, x: u32, z: u32) -> CMatrix {
    let factors: Vec<CMatrix> = (0..n)
        .map(|w| {
            let bx = (x >> w) & 1 == 1;
            let bz = (z >> w) & 1 == 1;
            match (bx, bz) {
                (false, false) => paulis::id2(),
                (true, false) => paulis::x(),
                (false, true) => paulis::z(),
                (true, true) => paulis::x().matmul(&paulis::z()),
            }
        })
        .collect();
    kron_all(&factors)
}

/// X-part of `U P U^*` found by projecting onto every Pauli string.
fn conjugated_x_part(u: &CMatrix, n: usize, x: u32, z: u32) -> u32 {
    let p = u.matmul(&pauli(n, x, z)).matmul(&u.adjoint());
    let dim = (1usize << n) as f64;
    for xx in 0..1u32 << n {
        for zz in 0..1u32 << n {
            if (pauli(n, xx, zz).adjoint().trace_product(&p).norm() / dim - 1.0).abs() < 1e-9 {
                return xx;
            }
        }
    }
    panic!("conjugate is not a Pauli");
}

#[test]
fn key_update_agrees_with_matrix_conjugation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let (l, a) = (rng.gen_range(1..=2), rng.gen_range(0..=2));
        let n = l + a;
        let len = rng.gen_range(0..=20);
        let c = EvalCircuit::new(l, a, random_clifford(&mut rng, n, len)).unwrap();
        let u = c.circuit(1).unitary();
        let k = key_update(&c).unwrap();
        for _ in 0..4 {
            let (p, q): (u32, u32) = (rng.gen_range(0..1 << l), rng.gen_range(0..1 << l));
            let mask = (p as u128) | ((q as u128) << l);
            let xs = conjugated_x_part(&u, n, p, q);
            for (i, row) in k.rows.iter().enumerate() {
                assert_eq!((row & mask).count_ones() % 2 == 1, (xs >> i) & 1 == 1);
            }
        }
    }
}

#[test]
fn ideal_security_advantage_is_zero() {
    let make = || backend(BackendKind::Ideal, 2);
    for d in [&mut FirstPayloadBit as &mut dyn harness::Distinguisher, &mut OracleComparison] {
        let r = security_harness(&make, &[false, false], &[true, true], d, 200, 8, 1).unwrap();
        assert_eq!(r.advantage, 0.0);
    }
}

#[test]
fn clifford_security_statistics() {
    let make = || backend(BackendKind::Clifford, 2);
    let r = security_harness(&make, &[false, false], &[true, false], &mut FirstPayloadBit, 10_000, 8, 3).unwrap();
    let sigma = (0.5f64 / 10_000.0).sqrt();
    assert!(r.advantage <= 3.0 * sigma, "{r:?}");
    assert!(r.interval.0 <= r.advantage && r.advantage <= r.interval.1);

    let broken = || Box::new(CliffordBackend::with_broken_prf(2)) as Box<dyn QheBackend>;
    let r = security_harness(&broken, &[false, false], &[true, false], &mut FirstPayloadBit, 500, 8, 3).unwrap();
    assert!((r.advantage - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn clifford_circuits_are_evaluated_correctly(seed in any::<u64>(), l in 1usize..=3, a in 0usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = rng.gen_range(0..=15);
        let c = EvalCircuit::new(l, a, random_clifford(&mut rng, l + a, len)).unwrap();
        let aux = aux_ensemble(&mut rng, (1 << a) * 2);
        for b in [backend(BackendKind::Ideal, l), backend(BackendKind::Clifford, l)] {
            let sk = b.gen(8, seed).unwrap();
            prop_assert!(exhaustive_correctness(b.as_ref(), &sk, &c, &aux, 2).unwrap() < 1e-12);
        }
    }
}
