//! Correctness and security harnesses for [`QheBackend`] implementations.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{sim, to_bits, Ciphertext, EvalCircuit, QheBackend, SecretKey};
use crate::error::Result;
use crate::numerics::{trace_norm, CMatrix, C64};

/// Classical-quantum output state `o -> rho_B(o)`.
pub type CqState = BTreeMap<Vec<bool>, CMatrix>;

/// Encrypt, evaluate homomorphically, decrypt every branch.
pub fn game1(
    backend: &dyn QheBackend,
    sk: &SecretKey,
    m: &[bool],
    c: &EvalCircuit,
    aux: &[(f64, Vec<C64>)],
    b_dim: usize,
) -> Result<CqState> {
    let ct = backend.enc(sk, m)?;
    let mut out = CqState::new();
    for br in backend.eval_branches(&ct, c, aux, b_dim)? {
        let o = backend.dec(sk, &br.ciphertext)?;
        let rho = br.residual.into_matrix();
        let slot = out.entry(o).or_insert_with(|| CMatrix::zeros(rho.rows(), rho.cols()));
        *slot = &*slot + &rho;
    }
    Ok(out)
}

/// Run the circuit on the plaintext.
pub fn game2(m: &[bool], c: &EvalCircuit, aux: &[(f64, Vec<C64>)], b_dim: usize) -> Result<CqState> {
    Ok(sim::branches(m, c, aux, b_dim)?.into_iter().collect())
}

pub fn cq_trace_distance(s: &CqState, t: &CqState) -> Result<f64> {
    let mut total = 0.0;
    for key in s.keys().chain(t.keys().filter(|k| !s.contains_key(*k))) {
        let d = match (s.get(key), t.get(key)) {
            (Some(a), Some(b)) => trace_norm(&(a - b))?,
            (Some(a), None) | (None, Some(a)) => trace_norm(a)?,
            (None, None) => 0.0,
        };
        total += d;
    }
    Ok(0.5 * total)
}

/// Largest Game 1 / Game 2 trace distance over all `2^l` messages.
pub fn exhaustive_correctness(
    backend: &dyn QheBackend,
    sk: &SecretKey,
    c: &EvalCircuit,
    aux: &[(f64, Vec<C64>)],
    b_dim: usize,
) -> Result<f64> {
    let l = backend.message_bits();
    let mut worst = 0.0f64;
    for m in 0..1usize << l {
        let bits = to_bits(m, l);
        let d = cq_trace_distance(&game1(backend, sk, &bits, c, aux, b_dim)?, &game2(&bits, c, aux, b_dim)?)?;
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Adversary that sees a challenge ciphertext and may query an encryption oracle; it never sees the key.
pub trait Distinguisher {
    fn guess(&mut self, challenge: &Ciphertext, oracle: &mut dyn FnMut(&[bool]) -> Result<Ciphertext>) -> bool;
}

/// Outputs the first payload bit.
#[derive(Clone, Copy, Debug, Default)]
pub struct FirstPayloadBit;

impl Distinguisher for FirstPayloadBit {
    fn guess(&mut self, challenge: &Ciphertext, _: &mut dyn FnMut(&[bool]) -> Result<Ciphertext>) -> bool {
        challenge.payload.first().copied().unwrap_or(false)
    }
}

/// Encrypts the all-zero message and compares payloads with the challenge.
#[derive(Clone, Copy, Debug, Default)]
pub struct OracleComparison;

impl Distinguisher for OracleComparison {
    fn guess(&mut self, challenge: &Ciphertext, oracle: &mut dyn FnMut(&[bool]) -> Result<Ciphertext>) -> bool {
        match oracle(&vec![false; challenge.payload.len()]) {
            Ok(reference) => reference.payload != challenge.payload,
            Err(_) => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecurityReport {
    pub trials: usize,
    pub p0: f64,
    pub p1: f64,
    pub advantage: f64,
    /// 95% interval for the advantage.
    pub interval: (f64, f64),
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Estimates `|Pr[1 | m0] - Pr[1 | m1]|` with `trials` fresh keys per message.
///
/// Every trial builds a fresh backend instance, so nonces carry no information about the trial index.
pub fn security_harness(
    make_backend: &dyn Fn() -> Box<dyn QheBackend>,
    m0: &[bool],
    m1: &[bool],
    distinguisher: &mut dyn Distinguisher,
    trials: usize,
    lambda: usize,
    seed: u64,
) -> Result<SecurityReport> {
    let mut ones = [0usize; 2];
    for (which, m) in [m0, m1].into_iter().enumerate() {
        for t in 0..trials {
            let backend = make_backend();
            let key_seed = seed.wrapping_add((which * trials + t) as u64).wrapping_mul(0x9e3779b97f4a7c15);
            let sk = backend.gen(lambda, key_seed)?;
            let challenge = backend.enc(&sk, m)?;
            let mut oracle = |msg: &[bool]| backend.enc(&sk, msg);
            if distinguisher.guess(&challenge, &mut oracle) {
                ones[which] += 1;
            }
        }
    }
    let n = trials.max(1) as f64;
    let (p0, p1) = (ones[0] as f64 / n, ones[1] as f64 / n);
    let (l0, u0) = wilson_interval(ones[0], trials);
    let (l1, u1) = wilson_interval(ones[1], trials);
    // Newcombe's interval for the difference p0 - p1
    let d = p0 - p1;
    let lo = d - ((p0 - l0).powi(2) + (u1 - p1).powi(2)).sqrt();
    let hi = d + ((u0 - p0).powi(2) + (p1 - l1).powi(2)).sqrt();
    let interval =
        if lo <= 0.0 && hi >= 0.0 { (0.0, lo.abs().max(hi.abs())) } else { (lo.abs().min(hi.abs()), lo.abs().max(hi.abs())) };
    Ok(SecurityReport { trials, p0, p1, advantage: d.abs(), interval })
}
