use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SequentialQuantumStrategy;
use crate::error::{Error, Result};
use crate::games::Correlation;
use crate::numerics::{hermitian_eig, kron, random, trace_distance, CMatrix, C64};
use crate::quantum::uhlmann_unitary_with_tol;
use crate::values::{ClassicalStrategy, CommutingStrategy, QuantumStrategy};

/// Sequential classical strategy `p(a, w | x) q_w(b | y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequentialClassicalStrategy {
    /// `[x][a][w]`
    pub p_a: Vec<Vec<Vec<f64>>>,
    /// `[w][y][b]`
    pub q_b: Vec<Vec<Vec<f64>>>,
}

impl SequentialClassicalStrategy {
    /// Reverse of [`convert_classical`]: `p(a, w | x) = gamma(w) p_w(a | x)`.
    pub fn from_classical(s: &ClassicalStrategy) -> Self {
        let n_a = s.p_a[0].len();
        let k_a = s.p_a[0][0].len();
        let p_a = (0..n_a)
            .map(|x| (0..k_a).map(|a| s.gamma.iter().enumerate().map(|(w, g)| g * s.p_a[w][x][a]).collect()).collect())
            .collect();
        Self { p_a, q_b: s.q_b.clone() }
    }

    pub fn omega_len(&self) -> usize {
        self.q_b.len()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        for (x, row) in self.p_a.iter().enumerate() {
            if row.iter().any(|r| r.len() != self.omega_len()) {
                return Err(Error::DimensionMismatch("p_a rows do not match |Omega|".into()));
            }
            let total: f64 = row.iter().flatten().sum();
            if row.iter().flatten().any(|&v| v < -tol) || (total - 1.0).abs() > tol {
                return Err(Error::InvalidInput(format!("p(a, w | x={x}) is not a distribution")));
            }
        }
        for table in &self.q_b {
            for r in table {
                if r.iter().any(|&v| v < -tol) || (r.iter().sum::<f64>() - 1.0).abs() > tol {
                    return Err(Error::InvalidInput("q_w(b | y) is not a distribution".into()));
                }
            }
        }
        Ok(())
    }

    pub fn correlation(&self) -> Correlation {
        let n_a = self.p_a.len();
        let k_a = self.p_a[0].len();
        let n_b = self.q_b[0].len();
        let k_b = self.q_b[0][0].len();
        Correlation::from_fn_unchecked((n_a, n_b, k_a, k_b), |x, y, a, b| {
            (0..self.omega_len()).map(|w| self.p_a[x][a][w] * self.q_b[w][y][b]).sum()
        })
    }

    fn omega_marginal(&self, x: usize) -> Vec<f64> {
        (0..self.omega_len()).map(|w| self.p_a[x].iter().map(|r| r[w]).sum()).collect()
    }
}

/// Shared randomness `gamma(w) = p(w | x)`, required to be the same for every `x` within `tol`.
pub fn convert_classical(s: &SequentialClassicalStrategy, tol: f64) -> Result<ClassicalStrategy> {
    s.validate(1e-9)?;
    let marginals: Vec<Vec<f64>> = (0..s.p_a.len()).map(|x| s.omega_marginal(x)).collect();
    let mut dev = 0.0f64;
    for m in &marginals {
        for n in &marginals {
            for (u, v) in m.iter().zip(n) {
                dev = dev.max((u - v).abs());
            }
        }
    }
    if dev > tol {
        return Err(Error::NotStronglyNonsignaling(dev));
    }
    let n_a = s.p_a.len();
    let k_a = s.p_a[0].len();
    let gamma: Vec<f64> = (0..s.omega_len()).map(|w| marginals.iter().map(|m| m[w]).sum::<f64>() / n_a as f64).collect();
    let p_a = (0..s.omega_len())
        .map(|w| {
            (0..n_a)
                .map(|x| {
                    let mass = marginals[x][w];
                    (0..k_a)
                        .map(|a| {
                            if mass > 0.0 {
                                s.p_a[x][a][w] / mass
                            } else if a == 0 {
                                1.0
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(ClassicalStrategy { gamma, p_a, q_b: s.q_b.clone() })
}

/// `sigma_xa = tr_A((M_xa (x) 1) psi psi^*)`, `B = N`.
pub fn from_tensor(q: &QuantumStrategy) -> Result<SequentialQuantumStrategy> {
    let psi = CMatrix::from_vec(q.d_a, q.d_b, q.psi.clone())?;
    let left = psi.transpose();
    let right = psi.conj();
    let sigma =
        q.m.iter().map(|f| f.iter().map(|m| left.matmul(&m.transpose()).matmul(&right).hermitian_part()).collect()).collect();
    SequentialQuantumStrategy::new_unchecked(sigma, q.n.clone())
}

/// `sigma_xa = sqrt(M_xa) psi psi^* sqrt(M_xa)`, `B = N`.
pub fn from_commuting(c: &CommutingStrategy) -> Result<SequentialQuantumStrategy> {
    let rho = CMatrix::outer(&c.psi, &c.psi);
    let mut sigma = Vec::new();
    for fam in &c.m {
        let mut row = Vec::new();
        for m in fam {
            let r = hermitian_eig(&m.hermitian_part(), 1e-12)?.map_spectrum(|v| v.max(0.0).sqrt());
            row.push(r.matmul(&rho).matmul(&r).hermitian_part());
        }
        sigma.push(row);
    }
    SequentialQuantumStrategy::new_unchecked(sigma, c.n.clone())
}

/// Purification recording `a`: amplitudes `[(a, h'), h] = sqrt(sigma_xa)[h, h']`.
fn recording_purification(s: &SequentialQuantumStrategy, x: usize) -> Result<Vec<C64>> {
    let d = s.dim;
    let k_a = s.sigma[x].len();
    let mut psi = vec![C64::new(0.0, 0.0); k_a * d * d];
    for (a, sig) in s.sigma[x].iter().enumerate() {
        let r = hermitian_eig(&sig.hermitian_part(), 1e-12)?.map_spectrum(|v| v.max(0.0).sqrt());
        for hp in 0..d {
            for h in 0..d {
                psi[(a * d + hp) * d + h] = r[(h, hp)];
            }
        }
    }
    Ok(psi)
}

/// Tensor strategy on `(C^kA (x) C^dim) (x) C^dim` from a strategy whose `sigma_x` coincide within `tol` in trace distance.
pub fn convert_purify(s: &SequentialQuantumStrategy, tol: f64) -> Result<QuantumStrategy> {
    let (n_a, _, k_a, _) = s.shape();
    let sig: Vec<CMatrix> = (0..n_a).map(|x| s.sigma_x(x)).collect();
    let mut dev = 0.0f64;
    for x in 1..n_a {
        dev = dev.max(trace_distance(&sig[x], &sig[0])?);
    }
    if dev > tol {
        return Err(Error::NotStronglyNonsignaling(dev));
    }
    let d = s.dim;
    let d_a = k_a * d;
    let psi0 = recording_purification(s, 0)?;
    let mut m = Vec::with_capacity(n_a);
    for x in 0..n_a {
        let psi_x = recording_purification(s, x)?;
        let u = uhlmann_unitary_with_tol(&psi_x, &psi0, (d_a, d), 10.0 * tol + 1e-9)?;
        let ud = u.adjoint();
        let fam = (0..k_a)
            .map(|a| {
                let mut p = vec![0.0; k_a];
                p[a] = 1.0;
                let proj = kron(&CMatrix::diag_real(&p), &CMatrix::identity(d));
                ud.matmul(&proj).matmul(&u).hermitian_part()
            })
            .collect();
        m.push(fam);
    }
    Ok(QuantumStrategy { d_a, d_b: d, psi: psi0, m, n: s.b.clone() })
}

/// Commuting strategy with Bob's algebra `(+)_i M_{n_i} (x) 1_{m_i}` hidden by a Haar-random change of basis.
///
/// Bob's POVMs are `(+)_i B^i (x) 1`, Alice's are `(+)_i 1 (x) A^i`, with generic random POVMs `B^i`, `A^i`.
pub fn planted_commuting_strategy<R: Rng + ?Sized>(
    rng: &mut R,
    blocks: &[(usize, usize)],
    (n_a, n_b, k_a, k_b): (usize, usize, usize, usize),
) -> Result<CommutingStrategy> {
    if blocks.is_empty() {
        return Err(Error::EmptyList);
    }
    let d: usize = blocks.iter().map(|(n, m)| n * m).sum();
    let bob: Vec<Vec<Vec<CMatrix>>> =
        blocks.iter().map(|&(n, _)| (0..n_b).map(|_| random::random_povm(rng, n, k_b)).collect()).collect();
    let alice: Vec<Vec<Vec<CMatrix>>> =
        blocks.iter().map(|&(_, m)| (0..n_a).map(|_| random::random_povm(rng, m, k_a)).collect()).collect();
    let w = random::random_unitary(rng, d);
    let wd = w.adjoint();
    let assemble = |q: usize, o: usize, bob_side: bool| {
        let parts: Vec<CMatrix> =
            blocks
                .iter()
                .enumerate()
                .map(|(i, &(n, m))| {
                    if bob_side {
                        kron(&bob[i][q][o], &CMatrix::identity(m))
                    } else {
                        kron(&CMatrix::identity(n), &alice[i][q][o])
                    }
                })
                .collect();
        w.matmul(&CMatrix::direct_sum(&parts)).matmul(&wd).hermitian_part()
    };
    let n = (0..n_b).map(|y| (0..k_b).map(|b| assemble(y, b, true)).collect()).collect();
    let m = (0..n_a).map(|x| (0..k_a).map(|a| assemble(x, a, false)).collect()).collect();
    CommutingStrategy::new(random::random_state(rng, d), m, n)
}
