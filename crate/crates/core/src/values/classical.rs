use super::lp::simplex_max;
use super::strategy::ClassicalStrategy;
use crate::error::{Error, Result};
use crate::games::Game;

const BUDGET: f64 = 1e8;

/// Exact classical value by enumerating Alice's deterministic functions; Bob best-responds per question.
pub fn classical_value(g: &Game) -> Result<(f64, ClassicalStrategy)> {
    let (n_a, n_b, k_a, k_b) = g.shape();
    let size = (k_a as f64).powi(n_a as i32) * (k_b as f64).powi(n_b as i32);
    if size > BUDGET {
        return Err(Error::BudgetExceeded(format!("{size:e} deterministic strategies")));
    }
    let mut alice = vec![0usize; n_a];
    let mut best_val = f64::NEG_INFINITY;
    let mut best = (alice.clone(), vec![0usize; n_b]);
    loop {
        let mut total = 0.0;
        let mut bob = vec![0usize; n_b];
        for y in 0..n_b {
            let mut top = f64::NEG_INFINITY;
            for b in 0..k_b {
                let s: f64 = (0..n_a).filter(|&x| g.v(x, y, alice[x], b)).map(|x| g.mu(x, y)).sum();
                if s > top {
                    top = s;
                    bob[y] = b;
                }
            }
            total += top;
        }
        if total > best_val {
            best_val = total;
            best = (alice.clone(), bob);
        }
        // lexicographic successor, last question fastest
        let mut i = n_a;
        loop {
            if i == 0 {
                return Ok((best_val, ClassicalStrategy::deterministic(&best.0, &best.1, k_a, k_b)));
            }
            i -= 1;
            alice[i] += 1;
            if alice[i] < k_a {
                break;
            }
            alice[i] = 0;
        }
    }
}

/// Maximum winning probability over non-signaling correlations (LP).
pub fn nonsignaling_value(g: &Game, tol: f64) -> Result<f64> {
    let (n_a, n_b, k_a, k_b) = g.shape();
    let idx = |x: usize, y: usize, a: usize, b: usize| ((x * n_b + y) * k_a + a) * k_b + b;
    let nv = n_a * n_b * k_a * k_b;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for x in 0..n_a {
        for y in 0..n_b {
            let mut r = vec![0.0; nv];
            for a in 0..k_a {
                for b in 0..k_b {
                    r[idx(x, y, a, b)] = 1.0;
                }
            }
            rows.push(r);
            rhs.push(1.0);
        }
    }
    for x in 0..n_a {
        for a in 0..k_a {
            for y in 1..n_b {
                let mut r = vec![0.0; nv];
                for b in 0..k_b {
                    r[idx(x, y, a, b)] += 1.0;
                    r[idx(x, 0, a, b)] -= 1.0;
                }
                rows.push(r);
                rhs.push(0.0);
            }
        }
    }
    for y in 0..n_b {
        for b in 0..k_b {
            for x in 1..n_a {
                let mut r = vec![0.0; nv];
                for a in 0..k_a {
                    r[idx(x, y, a, b)] += 1.0;
                    r[idx(0, y, a, b)] -= 1.0;
                }
                rows.push(r);
                rhs.push(0.0);
            }
        }
    }
    let mut c = vec![0.0; nv];
    for x in 0..n_a {
        for y in 0..n_b {
            for a in 0..k_a {
                for b in 0..k_b {
                    if g.v(x, y, a, b) {
                        c[idx(x, y, a, b)] = g.mu(x, y);
                    }
                }
            }
        }
    }
    Ok(simplex_max(&c, &rows, &rhs, tol.min(1e-9))?.value)
}
