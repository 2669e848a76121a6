//! Quantum homomorphic encryption with classical keys and ciphertexts.
//!
//! Two backends implement [`QheBackend`]: an ideal functionality whose
//! ciphertexts are opaque handles, and a Pauli one-time pad scheme that
//! evaluates Clifford circuits with a GF(2) key update.

mod clifford;
pub mod harness;
mod ideal;
mod sim;

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use clifford::{key_update, prf, CliffordBackend};
pub use ideal::IdealBackend;

use crate::error::{Error, Result};
use crate::numerics::C64;
use crate::quantum::{Circuit, DensityOperator, Gate, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Ideal,
    Clifford,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Ideal => "ideal",
            BackendKind::Clifford => "clifford",
        })
    }
}

impl std::str::FromStr for BackendKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(BackendKind::Ideal),
            "clifford" => Ok(BackendKind::Clifford),
            _ => Err(Error::InvalidInput(format!("unknown backend {s}"))),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SecretKey {
    pub lambda: usize,
    pub bits: Vec<bool>,
}

impl SecretKey {
    pub fn from_index(lambda: usize, index: u64) -> Self {
        Self { lambda, bits: (0..lambda).map(|i| (index >> (lambda - 1 - i)) & 1 == 1).collect() }
    }

    /// Bits packed most significant first.
    pub fn bytes(&self) -> Vec<u8> {
        pack_bits(&self.bits)
    }

    fn token(&self) -> u64 {
        self.bits.iter().fold(self.lambda as u64, |h, &b| h.wrapping_mul(0x100000001b3).wrapping_add(b as u64 + 1))
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey({} bits)", self.lambda)
    }
}

/// GF(2) map from the input pad `(p || q)` to the X-frame on each output wire.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyUpdate {
    pub rows: Vec<u128>,
}

/// Plaintext sealed inside an ideal-backend handle; not reachable outside this module.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Sealed {
    token: u64,
    bits: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub backend: BackendKind,
    pub nonce: u64,
    pub payload: Vec<bool>,
    pub update: Option<KeyUpdate>,
    sealed: Option<Sealed>,
}

impl Ciphertext {
    /// Ciphertext parsed from raw parts; carries no sealed plaintext.
    pub fn from_parts(backend: BackendKind, nonce: u64, payload: Vec<bool>, update: Option<KeyUpdate>) -> Self {
        Self { backend, nonce, payload, update, sealed: None }
    }

    /// Nonce (8 bytes, big endian) then the payload packed into bytes, then any key-update rows.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.nonce.to_be_bytes().to_vec();
        out.extend(pack_bits(&self.payload));
        if let Some(u) = &self.update {
            for r in &u.rows {
                out.extend(r.to_be_bytes());
            }
        }
        out
    }

    pub fn from_bytes(backend: BackendKind, bytes: &[u8], message_bits: usize) -> Result<Self> {
        let pl = message_bits.div_ceil(8);
        if bytes.len() < 8 + pl {
            return Err(Error::DecodeFailure(format!("ciphertext of {} bytes is too short", bytes.len())));
        }
        let nonce = u64::from_be_bytes(bytes[..8].try_into().expect("eight bytes"));
        let payload = unpack_bits(&bytes[8..8 + pl], message_bits);
        let rest = &bytes[8 + pl..];
        let update = if rest.is_empty() {
            None
        } else if rest.len() == 16 * message_bits {
            Some(KeyUpdate { rows: rest.chunks(16).map(|c| u128::from_be_bytes(c.try_into().expect("sixteen bytes"))).collect() })
        } else {
            return Err(Error::DecodeFailure("trailing ciphertext bytes".into()));
        };
        Ok(Self::from_parts(backend, nonce, payload, update))
    }

    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 0x80 >> (i % 8);
        }
    }
    out
}

pub fn unpack_bits(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect()
}

/// `value` as `width` bits, most significant first.
pub fn to_bits(value: usize, width: usize) -> Vec<bool> {
    (0..width).map(|i| (value >> (width - 1 - i)) & 1 == 1).collect()
}

pub fn from_bits(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

/// Circuit on `message_bits + aux_qubits` wires; message wires come first and are the outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalCircuit {
    pub message_bits: usize,
    pub aux_qubits: usize,
    pub gates: Vec<Gate>,
}

impl EvalCircuit {
    pub fn new(message_bits: usize, aux_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        Circuit::new(message_bits + aux_qubits, 1, gates.clone())?;
        Ok(Self { message_bits, aux_qubits, gates })
    }

    pub fn is_clifford(&self) -> bool {
        self.gates.iter().all(Gate::is_clifford)
    }

    pub(crate) fn circuit(&self, rest: usize) -> Circuit {
        Circuit { qubits: self.message_bits + self.aux_qubits, rest: rest.max(1), gates: self.gates.clone() }
    }
}

/// One branch of an exact evaluation: the output ciphertext and the unnormalised residual on `B`.
#[derive(Clone, Debug)]
pub struct EvalBranch {
    pub ciphertext: Ciphertext,
    pub residual: DensityOperator,
}

pub trait QheBackend: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn message_bits(&self) -> usize;

    fn gen(&self, lambda: usize, seed: u64) -> Result<SecretKey>;

    /// Encrypt under the next nonce of this instance's counter.
    fn enc(&self, sk: &SecretKey, m: &[bool]) -> Result<Ciphertext>;

    fn enc_with_nonce(&self, sk: &SecretKey, m: &[bool], nonce: u64) -> Result<Ciphertext>;

    fn dec(&self, sk: &SecretKey, ct: &Ciphertext) -> Result<Vec<bool>>;

    fn supports(&self, c: &EvalCircuit) -> bool;

    /// Exact evaluation on an ensemble `{(w, |phi>)}` over `A (x) B`, `A` being the circuit's auxiliary qubits.
    ///
    /// Output wires and the `A` register are measured in the computational basis; `A` is discarded.
    fn eval_branches(&self, ct: &Ciphertext, c: &EvalCircuit, aux: &[(f64, Vec<C64>)], b_dim: usize) -> Result<Vec<EvalBranch>>;

    /// Sampled evaluation on a pure auxiliary state; returns the output and the post-measurement state of `B`.
    fn eval(
        &self,
        ct: &Ciphertext,
        c: &EvalCircuit,
        aux: &StateVector,
        b_dim: usize,
        rng: &mut dyn RngCore,
    ) -> Result<(Ciphertext, StateVector)>;

    /// Keys to average over when computing exact protocol values.
    fn exact_key_space(&self, lambda: usize) -> Result<Vec<SecretKey>>;
}

pub fn backend(kind: BackendKind, message_bits: usize) -> Box<dyn QheBackend> {
    match kind {
        BackendKind::Ideal => Box::new(IdealBackend::new(message_bits)),
        BackendKind::Clifford => Box::new(CliffordBackend::new(message_bits)),
    }
}

fn check_message(m: &[bool], l: usize) -> Result<()> {
    if m.len() != l {
        return Err(Error::InvalidInput(format!("message has {} bits, backend expects {l}", m.len())));
    }
    Ok(())
}

fn check_lambda(lambda: usize) -> Result<()> {
    if lambda == 0 {
        return Err(Error::InvalidInput("security parameter must be at least 1".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
