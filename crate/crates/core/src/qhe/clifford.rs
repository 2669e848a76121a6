use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{
    check_lambda, check_message, sim, unpack_bits, BackendKind, Ciphertext, EvalBranch, EvalCircuit, KeyUpdate, QheBackend,
    SecretKey,
};
use crate::error::{Error, Result};
use crate::numerics::C64;
use crate::quantum::{DensityOperator, Gate, StateVector};

const PRF_DOMAIN: &[u8] = b"nonlocal-qotp-prf-v1";
const MAX_MESSAGE_BITS: usize = 64;
const MAX_ENUMERATED_LAMBDA: usize = 20;

/// `SHA-256(domain || lambda as u32 BE || key bytes || nonce as u64 BE || tag)`.
pub fn prf(sk: &SecretKey, nonce: u64, tag: u8) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(PRF_DOMAIN);
    h.update((sk.lambda as u32).to_be_bytes());
    h.update(sk.bytes());
    h.update(nonce.to_be_bytes());
    h.update([tag]);
    h.finalize().into()
}

/// Pauli one-time pad `X^p Z^q` with pads drawn from [`prf`] under tags `b'X'` and `b'Z'`.
#[derive(Debug)]
pub struct CliffordBackend {
    message_bits: usize,
    counter: AtomicU64,
    broken_prf: bool,
}

impl CliffordBackend {
    /// Panics if `message_bits` exceeds 64.
    pub fn new(message_bits: usize) -> Self {
        assert!(message_bits <= MAX_MESSAGE_BITS, "at most {MAX_MESSAGE_BITS} message bits");
        Self { message_bits, counter: AtomicU64::new(0), broken_prf: false }
    }

    /// Pads are identically zero, so payloads are plaintexts.
    pub fn with_broken_prf(message_bits: usize) -> Self {
        Self { broken_prf: true, ..Self::new(message_bits) }
    }

    /// `(p, q)` for the given key and nonce.
    pub fn pads(&self, sk: &SecretKey, nonce: u64) -> (Vec<bool>, Vec<bool>) {
        let l = self.message_bits;
        if self.broken_prf {
            return (vec![false; l], vec![false; l]);
        }
        (unpack_bits(&prf(sk, nonce, b'X'), l), unpack_bits(&prf(sk, nonce, b'Z'), l))
    }

    fn pad_mask(&self, sk: &SecretKey, nonce: u64) -> u128 {
        let (p, q) = self.pads(sk, nonce);
        let l = self.message_bits;
        let mut mask = 0u128;
        for i in 0..l {
            mask |= (p[i] as u128) << i;
            mask |= (q[i] as u128) << (l + i);
        }
        mask
    }

    fn fresh_input<'a>(&self, ct: &'a Ciphertext) -> Result<&'a [bool]> {
        if ct.backend != BackendKind::Clifford {
            return Err(Error::DecodeFailure(format!("{} ciphertext given to the clifford backend", ct.backend)));
        }
        if ct.update.is_some() {
            return Err(Error::UnsupportedCircuit("evaluated ciphertexts cannot be evaluated again".into()));
        }
        check_message(&ct.payload, self.message_bits)?;
        Ok(&ct.payload)
    }

    fn evaluated(&self, ct: &Ciphertext, o: Vec<bool>, update: &KeyUpdate) -> Ciphertext {
        Ciphertext::from_parts(BackendKind::Clifford, ct.nonce, o, Some(update.clone()))
    }
}

/// Propagates the input pad through `c`; row `i` is the X-frame of output wire `i` as a mask over `(p || q)`.
///
/// Bit `i` of a mask is `p_i` and bit `l + i` is `q_i`.
pub fn key_update(c: &EvalCircuit) -> Result<KeyUpdate> {
    let l = c.message_bits;
    if l > MAX_MESSAGE_BITS {
        return Err(Error::UnsupportedCircuit(format!("{l} message bits exceed the frame width")));
    }
    let n = l + c.aux_qubits;
    let mut x = vec![0u128; n];
    let mut z = vec![0u128; n];
    for i in 0..l {
        x[i] = 1 << i;
        z[i] = 1 << (l + i);
    }
    for g in &c.gates {
        match *g {
            Gate::H(w) => std::mem::swap(&mut x[w], &mut z[w]),
            Gate::S(w) | Gate::Sdg(w) => z[w] ^= x[w],
            Gate::X(_) | Gate::Y(_) | Gate::Z(_) => {}
            Gate::Cnot { control, target } => {
                x[target] ^= x[control];
                z[control] ^= z[target];
            }
            Gate::Cz(a, b) => {
                z[a] ^= x[b];
                z[b] ^= x[a];
            }
            Gate::Swap(a, b) => {
                x.swap(a, b);
                z.swap(a, b);
            }
            Gate::T(_) | Gate::Unitary { .. } => {
                return Err(Error::UnsupportedCircuit(format!("non-Clifford gate {g:?}")));
            }
        }
    }
    x.truncate(l);
    Ok(KeyUpdate { rows: x })
}

fn parity(v: u128) -> bool {
    v.count_ones() % 2 == 1
}

impl QheBackend for CliffordBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Clifford
    }

    fn message_bits(&self) -> usize {
        self.message_bits
    }

    fn gen(&self, lambda: usize, seed: u64) -> Result<SecretKey> {
        check_lambda(lambda)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(SecretKey { lambda, bits: (0..lambda).map(|_| rng.gen()).collect() })
    }

    fn enc(&self, sk: &SecretKey, m: &[bool]) -> Result<Ciphertext> {
        self.enc_with_nonce(sk, m, self.counter.fetch_add(1, Ordering::Relaxed))
    }

    fn enc_with_nonce(&self, sk: &SecretKey, m: &[bool], nonce: u64) -> Result<Ciphertext> {
        check_message(m, self.message_bits)?;
        let (p, _) = self.pads(sk, nonce);
        let payload = m.iter().zip(&p).map(|(a, b)| a ^ b).collect();
        Ok(Ciphertext::from_parts(BackendKind::Clifford, nonce, payload, None))
    }

    /// A mismatched key yields a garbled message rather than an error.
    fn dec(&self, sk: &SecretKey, ct: &Ciphertext) -> Result<Vec<bool>> {
        if ct.backend != BackendKind::Clifford {
            return Err(Error::DecodeFailure(format!("{} ciphertext given to the clifford backend", ct.backend)));
        }
        check_message(&ct.payload, self.message_bits)
            .map_err(|_| Error::DecodeFailure("payload length differs from the message width".into()))?;
        let mask = self.pad_mask(sk, ct.nonce);
        match &ct.update {
            None => {
                let (p, _) = self.pads(sk, ct.nonce);
                Ok(ct.payload.iter().zip(&p).map(|(a, b)| a ^ b).collect())
            }
            Some(u) => {
                if u.rows.len() != self.message_bits {
                    return Err(Error::DecodeFailure("key update has the wrong number of rows".into()));
                }
                Ok(ct.payload.iter().zip(&u.rows).map(|(&a, &r)| a ^ parity(r & mask)).collect())
            }
        }
    }

    fn supports(&self, c: &EvalCircuit) -> bool {
        c.message_bits == self.message_bits && c.is_clifford()
    }

    fn eval_branches(&self, ct: &Ciphertext, c: &EvalCircuit, aux: &[(f64, Vec<C64>)], b_dim: usize) -> Result<Vec<EvalBranch>> {
        if c.message_bits != self.message_bits {
            return Err(Error::UnsupportedCircuit("circuit message width differs from the backend".into()));
        }
        let update = key_update(c)?;
        let input = self.fresh_input(ct)?;
        Ok(sim::branches(input, c, aux, b_dim)?
            .into_iter()
            .map(|(o, rho)| EvalBranch {
                ciphertext: self.evaluated(ct, o, &update),
                residual: DensityOperator::from_matrix_unchecked(rho),
            })
            .collect())
    }

    fn eval(
        &self,
        ct: &Ciphertext,
        c: &EvalCircuit,
        aux: &StateVector,
        b_dim: usize,
        rng: &mut dyn RngCore,
    ) -> Result<(Ciphertext, StateVector)> {
        if c.message_bits != self.message_bits {
            return Err(Error::UnsupportedCircuit("circuit message width differs from the backend".into()));
        }
        let update = key_update(c)?;
        let input = self.fresh_input(ct)?;
        let (o, residual) = sim::sample(input, c, aux, b_dim, rng)?;
        Ok((self.evaluated(ct, o, &update), residual))
    }

    /// Every key of `lambda` bits.
    fn exact_key_space(&self, lambda: usize) -> Result<Vec<SecretKey>> {
        check_lambda(lambda)?;
        if lambda > MAX_ENUMERATED_LAMBDA {
            return Err(Error::BudgetExceeded(format!("2^{lambda} keys")));
        }
        Ok((0..1u64 << lambda).map(|i| SecretKey::from_index(lambda, i)).collect())
    }
}
