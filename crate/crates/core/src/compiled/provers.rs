use std::sync::Arc;

use rand::RngCore;

use super::{ProverContext, ProverStrategy, WhiteBox};
use crate::error::{Error, Result};
use crate::games::Game;
use crate::numerics::{complete_orthonormal, kron, paulis, sqrt_psd, CMatrix, C64, ONE, ZERO};
use crate::qhe::{from_bits, to_bits, Ciphertext, EvalCircuit, QheBackend};
use crate::quantum::{sample_index, Gate, StateVector};
use crate::values::QuantumStrategy;

fn qubits_for(n: usize) -> usize {
    (usize::BITS - n.saturating_sub(1).leading_zeros()) as usize
}

fn basis_projectors(d: usize, pick: impl Fn(usize) -> bool) -> CMatrix {
    CMatrix::diag_real(&(0..d).map(|i| if pick(i) { 1.0 } else { 0.0 }).collect::<Vec<_>>())
}

/// Bob's POVM answering `table[c]` on classical register value `c`.
fn classical_povm(table: &[usize], k_b: usize) -> Vec<CMatrix> {
    (0..k_b).map(|b| basis_projectors(table.len(), |c| table[c] == b)).collect()
}

fn trivial_povm(k_b: usize) -> Vec<CMatrix> {
    (0..k_b).map(|b| CMatrix::identity(1).scale_real(if b == 0 { 1.0 } else { 0.0 })).collect()
}

/// `a(x)` maximising `sum_y mu(x,y) max_b V(a,b|x,y)`, and the maximising `b(x,y)`.
pub fn best_answers(g: &Game) -> (Vec<usize>, Vec<Vec<usize>>) {
    let (n_a, n_b, k_a, k_b) = g.shape();
    let best_b = |x: usize, y: usize, a: usize| (0..k_b).find(|&b| g.v(x, y, a, b)).unwrap_or(0);
    let score = |x: usize, a: usize| -> f64 { (0..n_b).filter(|&y| g.v(x, y, a, best_b(x, y, a))).map(|y| g.mu(x, y)).sum() };
    let a: Vec<usize> =
        (0..n_a).map(|x| (0..k_a).fold(0, |best, a| if score(x, a) > score(x, best) + 1e-15 { a } else { best })).collect();
    let b = (0..n_a).map(|x| (0..n_b).map(|y| best_b(x, y, a[x])).collect()).collect();
    (a, b)
}

/// Optimal CHSH strategy: `|Phi+>`, Alice measures `Z` then `X`, Bob `(Z + X)/sqrt 2` then `(Z - X)/sqrt 2`.
pub fn chsh_strategy() -> QuantumStrategy {
    let (i, x, z) = (paulis::id2(), paulis::x(), paulis::z());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let pm = |o: &CMatrix| vec![(&i + o).scale_real(0.5), (&i - o).scale_real(0.5)];
    let b0 = (&z + &x).scale_real(r);
    let b1 = (&z - &x).scale_real(r);
    QuantumStrategy {
        d_a: 2,
        d_b: 2,
        psi: vec![C64::new(r, 0.0), ZERO, ZERO, C64::new(r, 0.0)],
        m: vec![pm(&z), pm(&x)],
        n: vec![pm(&b0), pm(&b1)],
    }
}

/// Perfect magic-square strategy on two EPR pairs.
///
/// Alice measures the two observables of row `x`, answering `a = b0 + 2 b1`; Bob measures the
/// transposes of the first two entries of column `y`.
pub fn magic_square_strategy() -> QuantumStrategy {
    let (i, x, y, z) = (paulis::id2(), paulis::x(), paulis::y(), paulis::z());
    let neg = |m: CMatrix| m.scale_real(-1.0);
    let square = [
        [kron(&x, &i), kron(&i, &x), kron(&x, &x)],
        [kron(&i, &z), kron(&z, &i), kron(&z, &z)],
        [neg(kron(&x, &z)), neg(kron(&z, &x)), kron(&y, &y)],
    ];
    let id4 = CMatrix::identity(4);
    let half = |o: &CMatrix, bit: usize| (&id4 + &o.scale_real(if bit == 0 { 1.0 } else { -1.0 })).scale_real(0.5);
    let pair = |o0: &CMatrix, o1: &CMatrix, v: usize| half(o0, v & 1).matmul(&half(o1, (v >> 1) & 1)).hermitian_part();
    let m = (0..3).map(|r| (0..4).map(|a| pair(&square[r][0], &square[r][1], a)).collect()).collect();
    let n = (0..3).map(|c| (0..4).map(|b| pair(&square[0][c].transpose(), &square[1][c].transpose(), b)).collect()).collect();
    let mut psi = vec![ZERO; 16];
    for k in 0..4 {
        psi[k * 4 + k] = C64::new(0.5, 0.0);
    }
    QuantumStrategy { d_a: 4, d_b: 4, psi, m, n }
}

/// Honest prover: Alice's measurement is run homomorphically as a Naimark unitary controlled on the
/// encrypted question, then the answer register is swapped onto the message wires.
#[derive(Clone, Debug)]
pub struct CircuitProver {
    name: String,
    circuit: EvalCircuit,
    aux: Vec<C64>,
    bob: Vec<Vec<CMatrix>>,
    b_dim: usize,
}

impl CircuitProver {
    pub fn honest(strategy: &QuantumStrategy, backend: &dyn QheBackend) -> Result<Self> {
        strategy.validate(1e-9)?;
        let (n_a, _, k_a, _) = strategy.shape();
        let l = backend.message_bits();
        if k_a > 1 << l || n_a > 1 << l {
            return Err(Error::DimensionMismatch(format!("{n_a} questions / {k_a} answers do not fit {l} bits")));
        }
        let s = qubits_for(strategy.d_a);
        let (dm, ds, dout) = (1usize << l, 1usize << s, 1usize << l);
        let block = ds * dout;
        let mut full = CMatrix::zeros(dm * block, dm * block);
        for m in 0..dm {
            let u = if m < n_a { naimark_unitary(&strategy.m[m], strategy.d_a, ds, dout)? } else { CMatrix::identity(block) };
            full.set_submatrix(m * block, m * block, &u);
        }
        let mut gates = vec![Gate::Unitary { wires: (0..2 * l + s).collect(), matrix: full }];
        gates.extend((0..l).map(|i| Gate::Swap(i, l + s + i)));
        let circuit = EvalCircuit::new(l, s + l, gates)?;
        if !backend.supports(&circuit) {
            return Err(Error::UnsupportedCircuit(format!(
                "the {} backend cannot evaluate the controlled measurement unitary",
                backend.kind()
            )));
        }
        let d_b = strategy.d_b;
        let mut aux = vec![ZERO; block * d_b];
        for h in 0..strategy.d_a {
            for b in 0..d_b {
                aux[(h * dout) * d_b + b] = strategy.psi[h * d_b + b];
            }
        }
        Ok(Self { name: "honest".into(), circuit, aux, bob: strategy.n.clone(), b_dim: d_b })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn circuit(&self) -> &EvalCircuit {
        &self.circuit
    }
}

/// Unitary on `C^ds (x) C^dout` mapping `|h>|0>` to `sum_a sqrt(M_a)|h> |a>` for `h < d`, fixing `|h>|0>` otherwise.
fn naimark_unitary(povm: &[CMatrix], d: usize, ds: usize, dout: usize) -> Result<CMatrix> {
    let n = ds * dout;
    let roots: Vec<CMatrix> = povm.iter().map(|m| sqrt_psd(&m.hermitian_part(), 1e-9)).collect::<Result<_>>()?;
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for h in 0..ds {
        let mut v = vec![ZERO; n];
        if h < d {
            for (a, r) in roots.iter().enumerate() {
                for hp in 0..d {
                    v[hp * dout + a] = r[(hp, h)];
                }
            }
        } else {
            v[h * dout] = ONE;
        }
        cols.push(v);
    }
    let basis = complete_orthonormal(cols, n);
    let mut extra = basis[ds..].iter();
    let ordered: Vec<Vec<C64>> = (0..n)
        .map(|c| if c % dout == 0 { basis[c / dout].clone() } else { extra.next().expect("completion has n columns").clone() })
        .collect();
    Ok(CMatrix::from_columns(n, &ordered))
}

impl WhiteBox for CircuitProver {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn register_dim(&self) -> usize {
        self.b_dim
    }

    fn first_round_branches(&self, ctx: &ProverContext, xi: &Ciphertext) -> Result<Vec<(Ciphertext, CMatrix)>> {
        let aux = [(1.0, self.aux.clone())];
        Ok(ctx
            .backend
            .eval_branches(xi, &self.circuit, &aux, self.b_dim)?
            .into_iter()
            .map(|b| (b.ciphertext, b.residual.into_matrix()))
            .collect())
    }

    fn second_round_povm(&self, y: usize) -> Vec<CMatrix> {
        self.bob[y].clone()
    }
}

/// Ignores the question: prepares `sigma_a` with `a` in a register and swaps it onto the message wires.
#[derive(Clone, Debug)]
pub struct IgnoringProver {
    name: String,
    circuit: EvalCircuit,
    aux: Vec<C64>,
    bob: Vec<Vec<CMatrix>>,
    dim: usize,
}

impl IgnoringProver {
    /// `sigma[a]` must sum to a unit-trace state; `bob[y]` are POVMs on the same space.
    pub fn new(name: impl Into<String>, sigma: &[CMatrix], bob: Vec<Vec<CMatrix>>, message_bits: usize) -> Result<Self> {
        let dim = sigma.first().ok_or(Error::EmptyList)?.rows();
        if sigma.len() > 1 << message_bits {
            return Err(Error::DimensionMismatch(format!("{} answers do not fit {message_bits} bits", sigma.len())));
        }
        let s = qubits_for(dim);
        let ds = 1usize << s;
        let mut aux = vec![ZERO; (1 << message_bits) * ds * dim];
        for (a, sig) in sigma.iter().enumerate() {
            let r = sqrt_psd(&sig.hermitian_part(), 1e-9)?;
            for hp in 0..dim {
                for h in 0..dim {
                    aux[(a * ds + hp) * dim + h] = r[(h, hp)];
                }
            }
        }
        let aux = StateVector::normalized(aux)?.into_amplitudes();
        let gates = (0..message_bits).map(|i| Gate::Swap(i, message_bits + i)).collect();
        let circuit = EvalCircuit::new(message_bits, message_bits + s, gates)?;
        Ok(Self { name: name.into(), circuit, aux, bob, dim })
    }

    /// Always answers `a`, and `b = 0` for Bob.
    pub fn constant(a: usize, k_a: usize, n_b: usize, k_b: usize, message_bits: usize) -> Result<Self> {
        let sigma: Vec<CMatrix> = (0..k_a).map(|i| CMatrix::identity(1).scale_real(if i == a { 1.0 } else { 0.0 })).collect();
        Self::new(format!("constant-a{a}"), &sigma, vec![trivial_povm(k_b); n_b], message_bits)
    }

    pub fn with_prefix(mut self, prefix: &str) -> Self {
        self.name = format!("{prefix}/{}", self.name);
        self
    }

    /// Replays the sequential data of question `x0` whatever the question.
    pub fn replay(data: &super::ExtractedSequentialData, x0: usize, message_bits: usize) -> Result<Self> {
        let mut sigma = data.sigma[x0].clone();
        sigma[0] = &sigma[0] + &data.rejected[x0];
        Self::new(format!("replay-x{x0}"), &sigma, data.bob.clone(), message_bits)
    }
}

impl WhiteBox for IgnoringProver {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn register_dim(&self) -> usize {
        self.dim
    }

    fn first_round_branches(&self, ctx: &ProverContext, xi: &Ciphertext) -> Result<Vec<(Ciphertext, CMatrix)>> {
        let aux = [(1.0, self.aux.clone())];
        Ok(ctx
            .backend
            .eval_branches(xi, &self.circuit, &aux, self.dim)?
            .into_iter()
            .map(|b| (b.ciphertext, b.residual.into_matrix()))
            .collect())
    }

    fn second_round_povm(&self, y: usize) -> Vec<CMatrix> {
        self.bob[y].clone()
    }
}

/// Returns the question ciphertext unchanged, so the decoded answer is `x`.
#[derive(Clone, Debug)]
pub struct EchoProver {
    n_b: usize,
    k_b: usize,
}

impl EchoProver {
    pub fn new(n_b: usize, k_b: usize) -> Self {
        Self { n_b, k_b }
    }
}

impl WhiteBox for EchoProver {
    fn name(&self) -> String {
        "echo".into()
    }

    fn register_dim(&self) -> usize {
        1
    }

    fn first_round_branches(&self, ctx: &ProverContext, xi: &Ciphertext) -> Result<Vec<(Ciphertext, CMatrix)>> {
        let c = EvalCircuit::new(ctx.message_bits(), 0, Vec::new())?;
        Ok(ctx
            .backend
            .eval_branches(xi, &c, &[(1.0, vec![ONE])], 1)?
            .into_iter()
            .map(|b| (b.ciphertext, b.residual.into_matrix()))
            .collect())
    }

    fn second_round_povm(&self, y: usize) -> Vec<CMatrix> {
        debug_assert!(y < self.n_b);
        trivial_povm(self.k_b)
    }
}

/// Sends a fixed, well-formed but never evaluated ciphertext and answers `b = 0`.
#[derive(Clone, Debug)]
pub struct GarbageProver {
    pub payload: Vec<bool>,
    pub nonce: u64,
    k_b: usize,
}

impl GarbageProver {
    pub fn new(payload: Vec<bool>, nonce: u64, k_b: usize) -> Self {
        Self { payload, nonce, k_b }
    }
}

impl WhiteBox for GarbageProver {
    fn name(&self) -> String {
        "garbage".into()
    }

    fn register_dim(&self) -> usize {
        1
    }

    fn first_round_branches(&self, ctx: &ProverContext, _xi: &Ciphertext) -> Result<Vec<(Ciphertext, CMatrix)>> {
        let ct = Ciphertext::from_parts(ctx.backend.kind(), self.nonce, self.payload.clone(), None);
        Ok(vec![(ct, CMatrix::identity(1))])
    }

    fn second_round_povm(&self, _y: usize) -> Vec<CMatrix> {
        trivial_povm(self.k_b)
    }
}

/// Reads the visible payload bits as a guess `x^` and plays the best answers for `x^`,
/// keeping `x^` in a classical register for Bob.
#[derive(Clone, Debug)]
pub struct GuessingProver {
    alice: Vec<usize>,
    bob: Vec<Vec<usize>>,
    k_b: usize,
}

impl GuessingProver {
    pub fn new(g: &Game) -> Self {
        let (alice, bob) = best_answers(g);
        Self { alice, bob, k_b: g.k_b }
    }

    fn guess(&self, xi: &Ciphertext) -> usize {
        from_bits(&xi.payload) % self.alice.len()
    }
}

impl WhiteBox for GuessingProver {
    fn name(&self) -> String {
        "guess-from-payload".into()
    }

    fn register_dim(&self) -> usize {
        self.alice.len()
    }

    fn first_round_branches(&self, ctx: &ProverContext, xi: &Ciphertext) -> Result<Vec<(Ciphertext, CMatrix)>> {
        let l = ctx.message_bits();
        let n = self.alice.len();
        let g = self.guess(xi);
        let mut aux = vec![ZERO; (1 << l) * n];
        aux[self.alice[g] * n + g] = ONE;
        let c = EvalCircuit::new(l, l, (0..l).map(|i| Gate::Swap(i, l + i)).collect())?;
        Ok(ctx
            .backend
            .eval_branches(xi, &c, &[(1.0, aux)], n)?
            .into_iter()
            .map(|b| (b.ciphertext, b.residual.into_matrix()))
            .collect())
    }

    fn second_round_povm(&self, y: usize) -> Vec<CMatrix> {
        let table: Vec<usize> = self.bob.iter().map(|row| row[y]).collect();
        classical_povm(&table, self.k_b)
    }
}

/// Decrypts the question with a leaked key and plays the best answers for the true `x`.
#[derive(Clone, Debug)]
pub struct KeyStealer {
    alice: Vec<usize>,
    bob: Vec<Vec<usize>>,
    k_b: usize,
}

impl KeyStealer {
    pub fn new(g: &Game) -> Self {
        let (alice, bob) = best_answers(g);
        Self { alice, bob, k_b: g.k_b }
    }
}

impl WhiteBox for KeyStealer {
    fn name(&self) -> String {
        "key-stealer".into()
    }

    fn register_dim(&self) -> usize {
        self.alice.len()
    }

    fn first_round_branches(&self, ctx: &ProverContext, xi: &Ciphertext) -> Result<Vec<(Ciphertext, CMatrix)>> {
        let sk = ctx.stolen_key.ok_or_else(|| Error::InvalidInput("the key stealer only runs in insecure mode".into()))?;
        let n = self.alice.len();
        let x = from_bits(&ctx.backend.dec(sk, xi)?) % n;
        let alpha = ctx.backend.enc_with_nonce(sk, &to_bits(self.alice[x], ctx.message_bits()), xi.nonce + 1)?;
        Ok(vec![(alpha, basis_projectors(n, |c| c == x))])
    }

    fn second_round_povm(&self, y: usize) -> Vec<CMatrix> {
        let table: Vec<usize> = self.bob.iter().map(|row| row[y]).collect();
        classical_povm(&table, self.k_b)
    }
}

enum Stage {
    Fresh,
    Holding(CMatrix),
    Done,
}

/// Runs a [`WhiteBox`] prover interactively by sampling its branches.
pub struct SampledProver {
    inner: Arc<dyn WhiteBox>,
    stage: Stage,
}

impl SampledProver {
    pub fn new(inner: Arc<dyn WhiteBox>) -> Self {
        Self { inner, stage: Stage::Fresh }
    }
}

impl ProverStrategy for SampledProver {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn first_round(&mut self, ctx: &ProverContext, xi: &Ciphertext, rng: &mut dyn RngCore) -> Result<Ciphertext> {
        if !matches!(self.stage, Stage::Fresh) {
            return Err(Error::ProtocolViolation("first round already played".into()));
        }
        let mut branches = self.inner.first_round_branches(ctx, xi)?;
        if branches.is_empty() {
            return Err(Error::SolverFailure("prover produced no branch".into()));
        }
        let weights: Vec<f64> = branches.iter().map(|(_, r)| r.trace().re.max(0.0)).collect();
        let k = sample_index(rng, &weights);
        let (alpha, rho) = branches.swap_remove(k);
        self.stage = Stage::Holding(rho.scale_real(1.0 / weights[k]));
        Ok(alpha)
    }

    fn second_round(&mut self, y: usize, rng: &mut dyn RngCore) -> Result<usize> {
        let rho = match std::mem::replace(&mut self.stage, Stage::Done) {
            Stage::Holding(rho) => rho,
            Stage::Fresh => {
                self.stage = Stage::Fresh;
                return Err(Error::ProtocolViolation("second round before first round".into()));
            }
            Stage::Done => return Err(Error::ProtocolViolation("second round already played".into())),
        };
        let probs: Vec<f64> = self.inner.second_round_povm(y).iter().map(|e| e.trace_product(&rho).re.max(0.0)).collect();
        Ok(sample_index(rng, &probs))
    }

    fn white_box(&self) -> Option<&dyn WhiteBox> {
        Some(self.inner.as_ref())
    }
}

/// Honest prover driven only through sampled evaluation; has no operator-level description.
pub struct BlackBoxProver {
    circuit: EvalCircuit,
    aux: StateVector,
    bob: Vec<Vec<CMatrix>>,
    b_dim: usize,
    state: Option<Option<StateVector>>,
}

impl BlackBoxProver {
    pub fn new(p: &CircuitProver) -> Result<Self> {
        Ok(Self {
            circuit: p.circuit.clone(),
            aux: StateVector::normalized(p.aux.clone())?,
            bob: p.bob.clone(),
            b_dim: p.b_dim,
            state: None,
        })
    }
}

impl ProverStrategy for BlackBoxProver {
    fn name(&self) -> String {
        "black-box".into()
    }

    fn first_round(&mut self, ctx: &ProverContext, xi: &Ciphertext, rng: &mut dyn RngCore) -> Result<Ciphertext> {
        if self.state.is_some() {
            return Err(Error::ProtocolViolation("first round already played".into()));
        }
        let (alpha, phi) = ctx.backend.eval(xi, &self.circuit, &self.aux, self.b_dim, rng)?;
        self.state = Some(Some(phi));
        Ok(alpha)
    }

    fn second_round(&mut self, y: usize, rng: &mut dyn RngCore) -> Result<usize> {
        let phi = match self.state.as_mut() {
            None => return Err(Error::ProtocolViolation("second round before first round".into())),
            Some(slot) => slot.take().ok_or_else(|| Error::ProtocolViolation("second round already played".into()))?,
        };
        let probs: Vec<f64> = self.bob[y].iter().map(|e| e.expectation(phi.amplitudes()).re.max(0.0)).collect();
        Ok(sample_index(rng, &probs))
    }
}
