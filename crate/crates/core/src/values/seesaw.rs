//! Alternating (see-saw) optimisation of tensor-product strategies.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sdp::{solve_sdp, Entry, SdpOptions, SdpProblem};
use super::strategy::QuantumStrategy;
use crate::error::Result;
use crate::games::{winning_probability, Game};
use crate::numerics::{hermitian_eig, inv_sqrt_psd, kron, random, CMatrix, C64};

/// Best strategy found and the per-restart objective histories.
#[derive(Clone, Debug)]
pub struct SeesawResult {
    pub value: f64,
    pub strategy: QuantumStrategy,
    /// Objective after every update, one list per restart.
    pub histories: Vec<Vec<f64>>,
}

pub fn seesaw_lower_bound(g: &Game, d: usize, restarts: usize, iters: usize, seed: u64) -> (f64, QuantumStrategy) {
    let r = seesaw(g, d, restarts, iters, seed);
    (r.value, r.strategy)
}

pub fn seesaw(g: &Game, d: usize, restarts: usize, iters: usize, seed: u64) -> SeesawResult {
    let d = d.max(1);
    let mut best: Option<(f64, QuantumStrategy)> = None;
    let mut histories = Vec::new();
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let (s, hist) = single_run(g, d, iters, &mut rng);
        let v = winning_probability(g, &s.correlation()).expect("shapes match");
        histories.push(hist);
        if best.as_ref().map_or(true, |(bv, _)| v > *bv) {
            best = Some((v, s));
        }
    }
    let (value, strategy) = best.expect("at least one restart");
    SeesawResult { value, strategy, histories }
}

fn game_operator(g: &Game, s: &QuantumStrategy) -> CMatrix {
    let dim = s.d_a * s.d_b;
    let mut op = CMatrix::zeros(dim, dim);
    let (n_a, n_b, k_a, k_b) = g.shape();
    for x in 0..n_a {
        for y in 0..n_b {
            let mu = g.mu(x, y);
            if mu == 0.0 {
                continue;
            }
            for a in 0..k_a {
                for b in 0..k_b {
                    if g.v(x, y, a, b) {
                        op = &op + &kron(&s.m[x][a], &s.n[y][b]).scale_real(mu);
                    }
                }
            }
        }
    }
    op
}

fn objective(g: &Game, s: &QuantumStrategy) -> f64 {
    winning_probability(g, &s.correlation()).expect("shapes match")
}

fn single_run(g: &Game, d: usize, iters: usize, rng: &mut ChaCha8Rng) -> (QuantumStrategy, Vec<f64>) {
    let (n_a, n_b, k_a, k_b) = g.shape();
    let mut s = QuantumStrategy {
        d_a: d,
        d_b: d,
        psi: random::random_state(rng, d * d),
        m: (0..n_a).map(|_| random::random_balanced_measurement(rng, d, k_a)).collect(),
        n: (0..n_b).map(|_| random::random_balanced_measurement(rng, d, k_b)).collect(),
    };
    let mut hist = vec![objective(g, &s)];
    let mut current = hist[0];
    let accept = |s: &mut QuantumStrategy, cand: QuantumStrategy, current: &mut f64, hist: &mut Vec<f64>| {
        let v = objective(g, &cand);
        if v >= *current - 1e-12 {
            *s = cand;
            *current = v.max(*current);
        }
        hist.push(*current);
    };
    for _ in 0..iters.max(1) {
        let start = current;
        // state
        if let Ok(e) = hermitian_eig(&game_operator(g, &s), 1e-8) {
            let mut cand = s.clone();
            cand.psi = e.vector(0);
            accept(&mut s, cand, &mut current, &mut hist);
        }
        // Alice
        let psi = CMatrix::from_vec(d, d, s.psi.clone()).expect("d*d amplitudes");
        let psi_adj = psi.adjoint();
        let mut cand = s.clone();
        for x in 0..n_a {
            let r: Vec<CMatrix> = (0..k_a)
                .map(|a| {
                    let mut acc = CMatrix::zeros(d, d);
                    for y in 0..n_b {
                        for b in 0..k_b {
                            if g.v(x, y, a, b) && g.mu(x, y) != 0.0 {
                                acc = &acc + &s.n[y][b].transpose().scale_real(g.mu(x, y));
                            }
                        }
                    }
                    psi.matmul(&acc).matmul(&psi_adj).hermitian_part()
                })
                .collect();
            cand.m[x] = best_response(&r, &s.m[x]);
        }
        accept(&mut s, cand, &mut current, &mut hist);
        // Bob
        let psi = CMatrix::from_vec(d, d, s.psi.clone()).expect("d*d amplitudes");
        let psi_t = psi.transpose();
        let psi_bar = psi.conj();
        let mut cand = s.clone();
        for y in 0..n_b {
            let r: Vec<CMatrix> = (0..k_b)
                .map(|b| {
                    let mut acc = CMatrix::zeros(d, d);
                    for x in 0..n_a {
                        for a in 0..k_a {
                            if g.v(x, y, a, b) && g.mu(x, y) != 0.0 {
                                acc = &acc + &s.m[x][a].transpose().scale_real(g.mu(x, y));
                            }
                        }
                    }
                    psi_t.matmul(&acc).matmul(&psi_bar).hermitian_part()
                })
                .collect();
            cand.n[y] = best_response(&r, &s.n[y]);
        }
        accept(&mut s, cand, &mut current, &mut hist);
        if current - start < 1e-13 {
            break;
        }
    }
    (s, hist)
}

/// POVM maximising `sum_a tr(M_a R_a)`.
fn best_response(r: &[CMatrix], previous: &[CMatrix]) -> Vec<CMatrix> {
    let d = r[0].rows();
    if r.len() == 1 {
        return vec![CMatrix::identity(d)];
    }
    if r.len() == 2 {
        let diff = &r[0] - &r[1];
        return match hermitian_eig(&diff, 1e-8) {
            Ok(e) => {
                let p = e.map_spectrum(|v| if v >= 0.0 { 1.0 } else { 0.0 });
                let q = &CMatrix::identity(d) - &p;
                vec![p, q]
            }
            Err(_) => previous.to_vec(),
        };
    }
    sdp_response(r).or_else(|_| greedy_response(r)).unwrap_or_else(|_| previous.to_vec())
}

fn embed(m: &CMatrix) -> Vec<(usize, usize, f64)> {
    // [[Re, -Im], [Im, Re]], upper triangle only
    let d = m.rows();
    let mut out = Vec::new();
    for i in 0..2 * d {
        for j in i..2 * d {
            let (bi, bj) = (i / d, j / d);
            let z = m[(i % d, j % d)];
            let v = match (bi, bj) {
                (0, 0) | (1, 1) => z.re,
                (0, 1) => -z.im,
                _ => z.im,
            };
            if v != 0.0 {
                out.push((i, j, v));
            }
        }
    }
    out
}

fn sdp_response(r: &[CMatrix]) -> Result<Vec<CMatrix>> {
    let d = r[0].rows();
    let k = r.len();
    let n2 = 2 * d;
    let mut c: Vec<Entry> = Vec::new();
    for (a, ra) in r.iter().enumerate() {
        c.extend(embed(ra).into_iter().map(|(i, j, v)| (a, i, j, -v)));
    }
    let mut cons: Vec<Vec<Entry>> = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..n2 {
        for j in i..n2 {
            cons.push((0..k).map(|a| (a, i, j, if i == j { 1.0 } else { 0.5 })).collect());
            rhs.push(if i == j { 1.0 } else { 0.0 });
        }
    }
    let sol = solve_sdp(&SdpProblem { block_sizes: vec![n2; k], c, a: cons, b: rhs }, SdpOptions { tol: 1e-10, max_iter: 100 })?;
    let mut xs: Vec<CMatrix> = sol
        .x
        .iter()
        .map(|xt| {
            CMatrix::from_fn(d, d, |i, j| {
                let re = 0.5 * (xt[(i, j)] + xt[(i + d, j + d)]);
                let im = 0.5 * (xt[(i + d, j)] - xt[(i, j + d)]);
                C64::new(re, im)
            })
            .hermitian_part()
        })
        .collect();
    for x in xs.iter_mut() {
        let e = hermitian_eig(x, 1e-8)?;
        *x = e.map_spectrum(|v| v.max(0.0));
    }
    let mut total = CMatrix::zeros(d, d);
    for x in &xs {
        total = &total + x;
    }
    let fix = inv_sqrt_psd(&total, 1e-12)?;
    Ok(xs.iter().map(|x| fix.matmul(x).matmul(&fix).hermitian_part()).collect())
}

fn greedy_response(r: &[CMatrix]) -> Result<Vec<CMatrix>> {
    let d = r[0].rows();
    let e = hermitian_eig(&r[0], 1e-8)?;
    let mut out = vec![CMatrix::zeros(d, d); r.len()];
    for k in 0..d {
        let v = e.vector(k);
        let best = (0..r.len()).max_by(|&a, &b| r[a].expectation(&v).re.partial_cmp(&r[b].expectation(&v).re).unwrap()).unwrap();
        out[best] = &out[best] + &CMatrix::projector(&v);
    }
    Ok(out)
}
