use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::provers::{
    magic_square_strategy, CircuitProver, EchoProver, GarbageProver, GuessingProver, IgnoringProver, KeyStealer, SampledProver,
};
use super::{exact_value, ExactResult, WhiteBox};
use crate::error::Result;
use crate::games::{check_nonsignaling, Game};
use crate::numerics::{random, CMatrix};
use crate::qhe::{IdealBackend, QheBackend};
use crate::sequential::moment_spread;
use crate::values::seesaw_lower_bound;

const MOMENT_DEGREE: usize = 3;
const RANDOM_CHEATERS: u64 = 3;

#[derive(Clone, Debug, Serialize)]
pub struct BatteryEntry {
    pub name: String,
    /// `true` for provers that use the leaked key.
    pub uses_key: bool,
    pub value: Option<f64>,
    /// Largest `|tr(sigma_x P) - tr(sigma_x' P)|` over monomials of degree at most 3 in Bob's POVMs.
    pub moment_residual: Option<f64>,
    pub bob_to_alice_violation: Option<f64>,
    /// Why the prover could not run, e.g. an unsupported circuit.
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BatteryReport {
    pub game: String,
    pub backend: String,
    pub lambda: usize,
    pub insecure: bool,
    pub entries: Vec<BatteryEntry>,
    /// Largest value among provers that do not use the key.
    pub secure_max: f64,
    pub key_stealer: Option<f64>,
}

fn entry(name: String, uses_key: bool, outcome: Result<ExactResult>) -> BatteryEntry {
    match outcome {
        Ok(r) => {
            let rhos: Vec<CMatrix> = (0..r.data.sigma.len()).map(|x| r.data.sigma_x(x)).collect();
            BatteryEntry {
                name,
                uses_key,
                value: Some(r.value),
                moment_residual: Some(moment_spread(&rhos, &r.data.bob, MOMENT_DEGREE).0),
                bob_to_alice_violation: Some(check_nonsignaling(&r.correlation).bob_to_alice_max_violation),
                skipped: None,
            }
        }
        Err(e) => BatteryEntry {
            name,
            uses_key,
            value: None,
            moment_residual: None,
            bob_to_alice_violation: None,
            skipped: Some(e.to_string()),
        },
    }
}

/// Honest strategies worth compiling for `g`: a see-saw optimum, and the perfect strategy when `g` is the magic square.
fn honest_strategies(g: &Game, seed: u64) -> Vec<(String, crate::values::QuantumStrategy)> {
    let mut out = vec![("honest-seesaw-d2".to_string(), seesaw_lower_bound(g, 2, 4, 200, seed).1)];
    let ms = magic_square_strategy();
    if g.shape() == ms.shape() && ms.value(g).is_ok_and(|v| v > 1.0 - 1e-9) {
        out.push(("honest-magic-square".into(), ms));
    }
    out
}

/// Exact values of every battery prover; the key stealer joins only when `insecure`.
pub fn adversary_battery(g: &Game, backend: &dyn QheBackend, lambda: usize, insecure: bool, seed: u64) -> Result<BatteryReport> {
    let (n_a, n_b, k_a, k_b) = g.shape();
    let l = backend.message_bits();
    let run = |w: Arc<dyn WhiteBox>, key: bool| -> BatteryEntry {
        let name = w.name();
        entry(name, key, exact_value(g, &SampledProver::new(w), backend, lambda, key && insecure))
    };
    let mut entries = Vec::new();
    let reference = IdealBackend::new(l);
    let mut replay_sources = Vec::new();
    for (name, s) in honest_strategies(g, seed) {
        if let Ok(p) = CircuitProver::honest(&s, &reference) {
            if let Ok(r) = exact_value(g, &SampledProver::new(Arc::new(p)), &reference, lambda, false) {
                replay_sources.push((name.clone(), r.data));
            }
        }
        match CircuitProver::honest(&s, backend) {
            Ok(p) => entries.push(run(Arc::new(p.with_name(name)), false)),
            Err(e) => entries.push(entry(name, false, Err(e))),
        }
    }
    for a in 0..k_a {
        entries.push(match IgnoringProver::constant(a, k_a, n_b, k_b, l) {
            Ok(p) => run(Arc::new(p), false),
            Err(e) => entry(format!("constant-a{a}"), false, Err(e)),
        });
    }
    for (src, data) in &replay_sources {
        for x0 in 0..n_a {
            entries.push(match IgnoringProver::replay(data, x0, l) {
                Ok(p) => run(Arc::new(p.with_prefix(src)), false),
                Err(e) => entry(format!("{src}/replay-x{x0}"), false, Err(e)),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..RANDOM_CHEATERS {
        let d = 2;
        let rho = random::random_density(&mut rng, d);
        let root = crate::numerics::sqrt_psd(&rho, 1e-9)?;
        let sigma: Vec<CMatrix> =
            random::random_povm(&mut rng, d, k_a).iter().map(|e| root.matmul(e).matmul(&root).hermitian_part()).collect();
        let bob = (0..n_b).map(|_| random::random_povm(&mut rng, d, k_b)).collect();
        entries.push(match IgnoringProver::new(format!("random-ignoring-{i}"), &sigma, bob, l) {
            Ok(p) => run(Arc::new(p), false),
            Err(e) => entry(format!("random-ignoring-{i}"), false, Err(e)),
        });
    }
    entries.push(run(Arc::new(EchoProver::new(n_b, k_b)), false));
    entries.push(run(Arc::new(GarbageProver::new(vec![false; l], 7, k_b)), false));
    entries.push(run(Arc::new(GuessingProver::new(g)), false));
    if insecure {
        entries.push(run(Arc::new(KeyStealer::new(g)), true));
    }
    let secure_max = entries.iter().filter(|e| !e.uses_key).filter_map(|e| e.value).fold(0.0, f64::max);
    let key_stealer = entries.iter().find(|e| e.uses_key).and_then(|e| e.value);
    Ok(BatteryReport {
        game: g.name.clone(),
        backend: backend.kind().to_string(),
        lambda,
        insecure,
        entries,
        secure_max,
        key_stealer,
    })
}
