//! Sequential strategies: a single player answers Alice's question, then Bob's.
//!
//! Includes strong non-signaling checks, conversions back to nonlocal
//! strategies, block reduction of Bob's algebra and the CHSH self-test residual.

mod blocks;
mod convert;
mod poly;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use blocks::{algebra_basis, block_reduce, commutant_basis, AlgebraBlock, AlgebraBlockDecomposition};
pub use convert::{
    convert_classical, convert_purify, from_commuting, from_tensor, planted_commuting_strategy, SequentialClassicalStrategy,
};
pub use poly::{monomials, NCPolynomial, Word};

use crate::error::{Error, Result};
use crate::games::Correlation;
use crate::numerics::{hermitian_eig, CMatrix, C64};
use crate::quantum::validate_povm;

const TOL: f64 = 1e-9;

/// Subnormalised states `sigma[x][a]` and Bob's POVMs `b[y][b]` on one space.
#[derive(Clone, Debug, PartialEq)]
pub struct SequentialQuantumStrategy {
    pub dim: usize,
    pub sigma: Vec<Vec<CMatrix>>,
    pub b: Vec<Vec<CMatrix>>,
}

impl SequentialQuantumStrategy {
    pub fn new(sigma: Vec<Vec<CMatrix>>, b: Vec<Vec<CMatrix>>) -> Result<Self> {
        let s = Self::new_unchecked(sigma, b)?;
        s.validate(TOL)?;
        Ok(s)
    }

    /// Checks shapes only.
    pub fn new_unchecked(sigma: Vec<Vec<CMatrix>>, b: Vec<Vec<CMatrix>>) -> Result<Self> {
        let dim = sigma.first().and_then(|r| r.first()).map(CMatrix::rows).ok_or(Error::EmptyList)?;
        if b.is_empty() || b.iter().any(Vec::is_empty) {
            return Err(Error::EmptyList);
        }
        let k_a = sigma[0].len();
        let k_b = b[0].len();
        for m in sigma.iter().flatten().chain(b.iter().flatten()) {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::DimensionMismatch(format!("operator is {}x{}, expected {dim}", m.rows(), m.cols())));
            }
        }
        if sigma.iter().any(|r| r.len() != k_a) || b.iter().any(|r| r.len() != k_b) {
            return Err(Error::DimensionMismatch("ragged answer sets".into()));
        }
        Ok(Self { dim, sigma, b })
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        for (x, row) in self.sigma.iter().enumerate() {
            let mut total = 0.0;
            for s in row {
                if s.hermiticity_defect() > tol {
                    return Err(Error::NotHermitian(s.hermiticity_defect()));
                }
                let low = hermitian_eig(&s.hermitian_part(), tol)?.values.last().copied().unwrap_or(0.0);
                if low < -tol {
                    return Err(Error::NotPsd(low));
                }
                total += s.trace().re;
            }
            if (total - 1.0).abs() > tol {
                return Err(Error::InvalidInput(format!("sigma_{x} has trace {total}")));
            }
        }
        for fam in &self.b {
            validate_povm(fam, tol)?;
        }
        Ok(())
    }

    /// `(nA, nB, kA, kB)`
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.sigma.len(), self.b.len(), self.sigma[0].len(), self.b[0].len())
    }

    pub fn sigma_x(&self, x: usize) -> CMatrix {
        self.sigma[x].iter().fold(CMatrix::zeros(self.dim, self.dim), |acc, s| &acc + s)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: RawStrategy = serde_json::from_str(s)?;
        let mut n_a = 0;
        let mut k_a = 0;
        let mut parsed = Vec::new();
        for (key, m) in raw.sigma {
            let (x, a) = key
                .split_once(',')
                .and_then(|(x, a)| Some((x.trim().parse::<usize>().ok()?, a.trim().parse::<usize>().ok()?)))
                .ok_or_else(|| Error::InvalidInput(format!("sigma key {key:?} is not \"x,a\"")))?;
            n_a = n_a.max(x + 1);
            k_a = k_a.max(a + 1);
            parsed.push((x, a, m));
        }
        let mut sigma = vec![vec![CMatrix::zeros(raw.dim, raw.dim); k_a]; n_a];
        for (x, a, m) in parsed {
            sigma[x][a] = m;
        }
        let s = Self::new(sigma, raw.b)?;
        if s.dim != raw.dim {
            return Err(Error::DimensionMismatch(format!("declared dim {} but operators are {}", raw.dim, s.dim)));
        }
        Ok(s)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let mut sigma = BTreeMap::new();
        for (x, row) in self.sigma.iter().enumerate() {
            for (a, m) in row.iter().enumerate() {
                sigma.insert(format!("{x},{a}"), m.clone());
            }
        }
        serde_json::to_string(&RawStrategy { dim: self.dim, sigma, b: self.b.clone() }).expect("matrices serialise")
    }
}

#[derive(Serialize, Deserialize)]
struct RawStrategy {
    dim: usize,
    sigma: BTreeMap<String, CMatrix>,
    #[serde(rename = "B")]
    b: Vec<Vec<CMatrix>>,
}

/// `p(a,b|x,y) = tr(sigma_xa B_yb)`.
pub fn correlation_of(s: &SequentialQuantumStrategy) -> Correlation {
    let (n_a, n_b, k_a, k_b) = s.shape();
    Correlation::from_fn_unchecked((n_a, n_b, k_a, k_b), |x, y, a, b| s.sigma[x][a].trace_product(&s.b[y][b]).re)
}

/// Largest `|tr(sigma_x W) - tr(sigma_x' W)|` over monomials `W` of degree at most `degree`.
///
/// Returns the residual and a monomial attaining it.
pub fn strong_nonsig_residual(s: &SequentialQuantumStrategy, degree: usize) -> (f64, NCPolynomial) {
    let sigmas: Vec<CMatrix> = (0..s.sigma.len()).map(|x| s.sigma_x(x)).collect();
    moment_spread(&sigmas, &s.b, degree)
}

/// Spread of `tr(rho_x W)` across `x` for every monomial `W` in `b` of degree at most `degree`.
pub fn moment_spread(rhos: &[CMatrix], b: &[Vec<CMatrix>], degree: usize) -> (f64, NCPolynomial) {
    let letters: Vec<(usize, usize)> = b.iter().enumerate().flat_map(|(y, f)| (0..f.len()).map(move |o| (y, o))).collect();
    let dim = rhos.first().map_or(1, CMatrix::rows);
    let mut best = (0.0, Vec::new());
    let mut stack: Vec<(Word, CMatrix)> = vec![(Vec::new(), CMatrix::identity(dim))];
    while let Some((word, w)) = stack.pop() {
        let vals: Vec<C64> = rhos.iter().map(|r| r.trace_product(&w)).collect();
        for i in 0..vals.len() {
            for j in i + 1..vals.len() {
                let d = (vals[i] - vals[j]).norm();
                if d > best.0 {
                    best = (d, word.clone());
                }
            }
        }
        if word.len() < degree {
            for &(y, o) in &letters {
                let mut next = word.clone();
                next.push((y, o));
                stack.push((next, w.matmul(&b[y][o])));
            }
        }
    }
    (best.0, NCPolynomial::monomial(best.1))
}

/// `max_x tr(sigma_x {B_0, B_1}^2)` with `B_y = B_y0 - B_y1`.
pub fn chsh_selftest_residual(s: &SequentialQuantumStrategy) -> Result<f64> {
    let (_, n_b, _, k_b) = s.shape();
    if n_b != 2 || k_b != 2 {
        return Err(Error::ShapeMismatch(format!("need two binary Bob questions, got nB={n_b}, kB={k_b}")));
    }
    let obs: Vec<CMatrix> = s.b.iter().map(|f| &f[0] - &f[1]).collect();
    let anti = obs[0].anticommutator(&obs[1]);
    let sq = anti.matmul(&anti);
    Ok((0..s.sigma.len()).map(|x| s.sigma_x(x).trace_product(&sq).re).fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests;
