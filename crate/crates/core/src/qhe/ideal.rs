use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_lambda, check_message, sim, BackendKind, Ciphertext, EvalBranch, EvalCircuit, QheBackend, Sealed, SecretKey};
use crate::error::{Error, Result};
use crate::numerics::C64;
use crate::quantum::{DensityOperator, StateVector};

/// Evaluated handles carry the input nonce with this bit flipped.
const EVAL_NONCE_BIT: u64 = 1 << 63;

/// Ideal functionality: ciphertexts are handles whose visible bits never depend on the plaintext.
#[derive(Debug)]
pub struct IdealBackend {
    message_bits: usize,
    counter: AtomicU64,
}

impl IdealBackend {
    pub fn new(message_bits: usize) -> Self {
        Self { message_bits, counter: AtomicU64::new(0) }
    }

    fn handle(&self, nonce: u64, token: u64, bits: Vec<bool>) -> Ciphertext {
        Ciphertext {
            backend: BackendKind::Ideal,
            nonce,
            payload: vec![false; self.message_bits],
            update: None,
            sealed: Some(Sealed { token, bits }),
        }
    }

    fn opened<'a>(&self, ct: &'a Ciphertext) -> Result<&'a Sealed> {
        if ct.backend != BackendKind::Ideal {
            return Err(Error::DecodeFailure(format!("{} ciphertext given to the ideal backend", ct.backend)));
        }
        ct.sealed.as_ref().ok_or_else(|| Error::DecodeFailure("unknown handle".into()))
    }
}

impl QheBackend for IdealBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Ideal
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
        Ok(self.handle(nonce, sk.token(), m.to_vec()))
    }

    fn dec(&self, sk: &SecretKey, ct: &Ciphertext) -> Result<Vec<bool>> {
        let s = self.opened(ct)?;
        if s.token != sk.token() {
            return Err(Error::WrongKey);
        }
        Ok(s.bits.clone())
    }

    fn supports(&self, c: &EvalCircuit) -> bool {
        c.message_bits == self.message_bits
    }

    fn eval_branches(&self, ct: &Ciphertext, c: &EvalCircuit, aux: &[(f64, Vec<C64>)], b_dim: usize) -> Result<Vec<EvalBranch>> {
        if !self.supports(c) {
            return Err(Error::UnsupportedCircuit("circuit message width differs from the backend".into()));
        }
        let s = self.opened(ct)?;
        let nonce = ct.nonce ^ EVAL_NONCE_BIT;
        Ok(sim::branches(&s.bits, c, aux, b_dim)?
            .into_iter()
            .map(|(o, rho)| EvalBranch {
                ciphertext: self.handle(nonce, s.token, o),
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
        if !self.supports(c) {
            return Err(Error::UnsupportedCircuit("circuit message width differs from the backend".into()));
        }
        let s = self.opened(ct)?;
        let (o, residual) = sim::sample(&s.bits, c, aux, b_dim, rng)?;
        let nonce = ct.nonce ^ EVAL_NONCE_BIT;
        Ok((self.handle(nonce, s.token, o), residual))
    }

    /// A single key: nothing observable depends on which key is used.
    fn exact_key_space(&self, lambda: usize) -> Result<Vec<SecretKey>> {
        Ok(vec![self.gen(lambda, 0)?])
    }
}
