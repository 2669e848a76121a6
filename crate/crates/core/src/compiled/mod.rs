//! The compiled single-prover protocol.
//!
//! The verifier encrypts Alice's question `x`, the prover returns an encrypted
//! answer `alpha`, then receives Bob's question `y` in the clear and answers `b`.
//! White-box provers expose their first-round instrument and second-round POVMs,
//! which lets [`exact_value`] compute `omega_lambda` and the extracted
//! `sigma_xa`, `B_yb` without sampling.

mod battery;
mod provers;

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use battery::{adversary_battery, BatteryEntry, BatteryReport};
pub use provers::{
    best_answers, chsh_strategy, magic_square_strategy, BlackBoxProver, CircuitProver, EchoProver, GarbageProver, GuessingProver,
    IgnoringProver, KeyStealer, SampledProver,
};

use crate::error::{Error, Result};
use crate::games::{winning_probability, Correlation, Game};
use crate::numerics::CMatrix;
use crate::qhe::{from_bits, to_bits, Ciphertext, QheBackend, SecretKey};
use crate::quantum::{sample_index, validate_povm};
use crate::sequential::SequentialQuantumStrategy;

/// Questions and answers of Alice travel as `message_width` bits.
pub fn message_width((n_a, _, k_a, _): (usize, usize, usize, usize)) -> usize {
    let n = n_a.max(k_a).max(2);
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

/// What a prover may see besides the messages.
#[derive(Clone, Copy)]
pub struct ProverContext<'a> {
    pub backend: &'a dyn QheBackend,
    pub shape: (usize, usize, usize, usize),
    /// Present only when the run is flagged insecure.
    pub stolen_key: Option<&'a SecretKey>,
}

impl ProverContext<'_> {
    pub fn message_bits(&self) -> usize {
        self.backend.message_bits()
    }
}

/// Operator-level description of a prover.
pub trait WhiteBox: Send + Sync {
    fn name(&self) -> String;

    /// Dimension of the register kept between the two rounds.
    fn register_dim(&self) -> usize;

    /// Every `(alpha, rho)` with `rho` the unnormalised residual register state given `alpha`.
    fn first_round_branches(&self, ctx: &ProverContext, xi: &Ciphertext) -> Result<Vec<(Ciphertext, CMatrix)>>;

    fn second_round_povm(&self, y: usize) -> Vec<CMatrix>;
}

/// Interactive prover; `second_round` may be called once, after `first_round`.
pub trait ProverStrategy {
    fn name(&self) -> String;

    fn first_round(&mut self, ctx: &ProverContext, xi: &Ciphertext, rng: &mut dyn RngCore) -> Result<Ciphertext>;

    fn second_round(&mut self, y: usize, rng: &mut dyn RngCore) -> Result<usize>;

    fn white_box(&self) -> Option<&dyn WhiteBox> {
        None
    }
}

/// Builds a fresh prover per session.
pub type ProverFactory = Arc<dyn Fn() -> Box<dyn ProverStrategy> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionState {
    Init,
    SentXi,
    SentY,
    Done,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub x: usize,
    pub y: usize,
    pub xi_hex: String,
    pub alpha_hex: String,
    pub b: usize,
    /// `None` when `alpha` failed to decode to a valid answer.
    pub a: Option<usize>,
    pub accept: bool,
    pub seed: u64,
}

/// Verifier side of one session; `x` is encrypted under nonce `seed >> 1`.
pub struct VerifierSession<'a> {
    game: &'a Game,
    backend: &'a dyn QheBackend,
    lambda: usize,
    state: SessionState,
    x: usize,
    y: usize,
    sk: SecretKey,
    seed: u64,
    xi: Option<Ciphertext>,
    alpha: Option<Ciphertext>,
}

fn check_width(g: &Game, backend: &dyn QheBackend) -> Result<()> {
    let want = message_width(g.shape());
    if backend.message_bits() != want {
        return Err(Error::DimensionMismatch(format!("backend carries {} bits, game needs {want}", backend.message_bits())));
    }
    Ok(())
}

/// `Dec(sk, alpha)` as an answer in `0..k_a`, or `None`.
pub fn decode_answer(backend: &dyn QheBackend, sk: &SecretKey, alpha: &Ciphertext, k_a: usize) -> Option<usize> {
    let a = from_bits(&backend.dec(sk, alpha).ok()?);
    (a < k_a).then_some(a)
}

impl<'a> VerifierSession<'a> {
    pub fn new(game: &'a Game, backend: &'a dyn QheBackend, lambda: usize, seed: u64) -> Result<Self> {
        check_width(game, backend)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sk = backend.gen(lambda, rng.gen())?;
        let (n_a, n_b, _, _) = game.shape();
        let mu: Vec<f64> = (0..n_a * n_b).map(|i| game.mu(i / n_b, i % n_b)).collect();
        let q = sample_index(&mut rng, &mu);
        Ok(Self { game, backend, lambda, state: SessionState::Init, x: q / n_b, y: q % n_b, sk, seed, xi: None, alpha: None })
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn questions(&self) -> (usize, usize) {
        (self.x, self.y)
    }

    pub fn secret_key(&self) -> &SecretKey {
        &self.sk
    }

    fn expect(&self, s: SessionState) -> Result<()> {
        if self.state != s {
            return Err(Error::ProtocolViolation(format!("expected state {s:?}, session is in {:?}", self.state)));
        }
        Ok(())
    }

    pub fn send_xi(&mut self) -> Result<Ciphertext> {
        self.expect(SessionState::Init)?;
        let xi = self.backend.enc_with_nonce(&self.sk, &to_bits(self.x, self.backend.message_bits()), self.seed >> 1)?;
        self.xi = Some(xi.clone());
        self.state = SessionState::SentXi;
        Ok(xi)
    }

    pub fn send_y(&mut self, alpha: Ciphertext) -> Result<usize> {
        self.expect(SessionState::SentXi)?;
        self.alpha = Some(alpha);
        self.state = SessionState::SentY;
        Ok(self.y)
    }

    pub fn finish(&mut self, b: usize) -> Result<Transcript> {
        self.expect(SessionState::SentY)?;
        self.state = SessionState::Done;
        let (_, _, k_a, k_b) = self.game.shape();
        let alpha = self.alpha.as_ref().expect("set in SentY");
        let a = decode_answer(self.backend, &self.sk, alpha, k_a);
        let accept = matches!(a, Some(a) if b < k_b && self.game.v(self.x, self.y, a, b));
        Ok(Transcript {
            x: self.x,
            y: self.y,
            xi_hex: self.xi.as_ref().expect("set in SentXi").to_hex(),
            alpha_hex: alpha.to_hex(),
            b,
            a,
            accept,
            seed: self.seed,
        })
    }
}

/// One run of the protocol; with `insecure` the prover also sees the secret key.
pub fn run_session(
    g: &Game,
    prover: &mut dyn ProverStrategy,
    backend: &dyn QheBackend,
    lambda: usize,
    seed: u64,
    insecure: bool,
) -> Result<Transcript> {
    let mut v = VerifierSession::new(g, backend, lambda, seed)?;
    let sk = v.secret_key().clone();
    let ctx = ProverContext { backend, shape: g.shape(), stolen_key: insecure.then_some(&sk) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let xi = v.send_xi()?;
    let alpha = prover.first_round(&ctx, &xi, &mut rng)?;
    let y = v.send_y(alpha)?;
    let b = prover.second_round(y, &mut rng)?;
    v.finish(b)
}

/// Seed of session `i` in a batch seeded by `seed`.
pub fn session_seed(seed: u64, i: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng.next_u64()
}

/// `trials` independent sessions, each with a fresh prover, split over `threads` workers.
///
/// The transcripts do not depend on `threads`.
#[allow(clippy::too_many_arguments)]
pub fn run_sessions(
    g: &Game,
    make: &ProverFactory,
    backend: &dyn QheBackend,
    lambda: usize,
    trials: usize,
    seed: u64,
    insecure: bool,
    threads: usize,
) -> Result<Vec<Transcript>> {
    let workers = threads.clamp(1, trials.max(1));
    let chunk = trials.div_ceil(workers.max(1)).max(1);
    let parts: Vec<Result<Vec<Transcript>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..trials)
            .step_by(chunk)
            .map(|start| {
                s.spawn(move || {
                    (start..(start + chunk).min(trials))
                        .map(|i| run_session(g, make().as_mut(), backend, lambda, session_seed(seed, i as u64), insecure))
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("session worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(trials);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Fraction of accepted transcripts and its binomial standard error.
pub fn acceptance_rate(ts: &[Transcript]) -> (f64, f64) {
    let n = ts.len().max(1) as f64;
    let p = ts.iter().filter(|t| t.accept).count() as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

/// `sigma_xa` averaged over keys, the mass whose answer failed to decode, and Bob's POVMs.
#[derive(Clone, Debug, Serialize)]
pub struct ExtractedSequentialData {
    /// `[x][a]`
    pub sigma: Vec<Vec<CMatrix>>,
    /// `[x]`
    pub rejected: Vec<CMatrix>,
    /// `[y][b]`
    pub bob: Vec<Vec<CMatrix>>,
}

impl ExtractedSequentialData {
    pub fn dim(&self) -> usize {
        self.sigma[0][0].rows()
    }

    /// `sigma_x`, including the rejected mass.
    pub fn sigma_x(&self, x: usize) -> CMatrix {
        self.sigma[x].iter().fold(self.rejected[x].clone(), |acc, s| &acc + s)
    }

    pub fn rejected_mass(&self, x: usize) -> f64 {
        self.rejected[x].trace().re
    }

    /// `p(a,b|x,y) = tr(sigma_xa B_yb)`; subnormalised when answers are rejected.
    pub fn correlation(&self) -> Correlation {
        let shape = (self.sigma.len(), self.bob.len(), self.sigma[0].len(), self.bob[0].len());
        Correlation::from_fn_unchecked(shape, |x, y, a, b| self.sigma[x][a].trace_product(&self.bob[y][b]).re)
    }

    /// Sequential strategy on the register; rejected mass, if any, becomes an extra last answer.
    pub fn to_sequential(&self) -> Result<SequentialQuantumStrategy> {
        let any_rejected = (0..self.sigma.len()).any(|x| self.rejected_mass(x) > 1e-12);
        let sigma = self
            .sigma
            .iter()
            .zip(&self.rejected)
            .map(|(row, r)| {
                let mut row = row.clone();
                if any_rejected {
                    row.push(r.clone());
                }
                row
            })
            .collect();
        SequentialQuantumStrategy::new_unchecked(sigma, self.bob.clone())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactResult {
    pub value: f64,
    pub correlation: Correlation,
    pub data: ExtractedSequentialData,
}

/// `omega_lambda` by exhausting the backend's key space, with every question encrypted under nonce 0.
pub fn exact_value(
    g: &Game,
    prover: &dyn ProverStrategy,
    backend: &dyn QheBackend,
    lambda: usize,
    insecure: bool,
) -> Result<ExactResult> {
    let wb = prover.white_box().ok_or(Error::NotWhiteBox)?;
    check_width(g, backend)?;
    let (n_a, n_b, k_a, k_b) = g.shape();
    let d = wb.register_dim();
    let keys = backend.exact_key_space(lambda)?;
    let w = 1.0 / keys.len() as f64;
    let mut sigma = vec![vec![CMatrix::zeros(d, d); k_a]; n_a];
    let mut rejected = vec![CMatrix::zeros(d, d); n_a];
    for sk in &keys {
        let ctx = ProverContext { backend, shape: g.shape(), stolen_key: insecure.then_some(sk) };
        for x in 0..n_a {
            let xi = backend.enc_with_nonce(sk, &to_bits(x, backend.message_bits()), 0)?;
            for (alpha, rho) in wb.first_round_branches(&ctx, &xi)? {
                let slot = match decode_answer(backend, sk, &alpha, k_a) {
                    Some(a) => &mut sigma[x][a],
                    None => &mut rejected[x],
                };
                *slot = &*slot + &rho.scale_real(w);
            }
        }
    }
    let bob: Vec<Vec<CMatrix>> = (0..n_b).map(|y| wb.second_round_povm(y)).collect();
    for fam in &bob {
        if fam.len() != k_b {
            return Err(Error::DimensionMismatch(format!("Bob POVM has {} outcomes, game has {k_b}", fam.len())));
        }
        validate_povm(fam, 1e-9)?;
    }
    let data = ExtractedSequentialData { sigma, rejected, bob };
    let correlation = data.correlation();
    let value = winning_probability(g, &correlation)?;
    Ok(ExactResult { value, correlation, data })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EvalMode {
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

/// Values over a grid of security parameters with tail minima and maxima.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueSequence {
    pub lambdas: Vec<usize>,
    pub values: Vec<f64>,
    /// `tail_min[i] = min_{j >= i} values[j]`; the last entry estimates the lower limit.
    pub tail_min: Vec<f64>,
    pub tail_max: Vec<f64>,
}

pub fn value_sequence(
    g: &Game,
    make: &ProverFactory,
    backend: &dyn QheBackend,
    lambdas: &[usize],
    mode: EvalMode,
) -> Result<ValueSequence> {
    if lambdas.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut values = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let v = match mode {
            EvalMode::Exact => exact_value(g, make().as_ref(), backend, l, false)?.value,
            EvalMode::MonteCarlo { trials, seed } => {
                acceptance_rate(&run_sessions(g, make, backend, l, trials, seed, false, 1)?).0
            }
        };
        values.push(v);
    }
    let mut tail_min = values.clone();
    let mut tail_max = values.clone();
    for i in (0..values.len().saturating_sub(1)).rev() {
        tail_min[i] = tail_min[i].min(tail_min[i + 1]);
        tail_max[i] = tail_max[i].max(tail_max[i + 1]);
    }
    Ok(ValueSequence { lambdas: lambdas.to_vec(), values, tail_min, tail_max })
}
