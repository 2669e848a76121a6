use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{Correlation, Game};
use crate::numerics::{cvec_serde, vec_norm, CMatrix, C64};
use crate::quantum::validate_povm;

/// Shared randomness `gamma` over local response functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalStrategy {
    pub gamma: Vec<f64>,
    /// `[omega][x][a]`
    pub p_a: Vec<Vec<Vec<f64>>>,
    /// `[omega][y][b]`
    pub q_b: Vec<Vec<Vec<f64>>>,
}

impl ClassicalStrategy {
    /// Single deterministic strategy `a = alice[x]`, `b = bob[y]`.
    pub fn deterministic(alice: &[usize], bob: &[usize], k_a: usize, k_b: usize) -> Self {
        let onehot = |v: usize, k: usize| (0..k).map(|i| if i == v { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
        Self {
            gamma: vec![1.0],
            p_a: vec![alice.iter().map(|&a| onehot(a, k_a)).collect()],
            q_b: vec![bob.iter().map(|&b| onehot(b, k_b)).collect()],
        }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let sum: f64 = self.gamma.iter().sum();
        if self.gamma.iter().any(|&g| g < -tol) || (sum - 1.0).abs() > tol {
            return Err(Error::InvalidInput("gamma is not a distribution".into()));
        }
        if self.p_a.len() != self.gamma.len() || self.q_b.len() != self.gamma.len() {
            return Err(Error::DimensionMismatch("response tables do not match |Omega|".into()));
        }
        for table in self.p_a.iter().chain(&self.q_b) {
            for row in table {
                if row.iter().any(|&v| v < -tol) || (row.iter().sum::<f64>() - 1.0).abs() > tol {
                    return Err(Error::InvalidInput("response row is not a distribution".into()));
                }
            }
        }
        Ok(())
    }

    pub fn correlation(&self) -> Correlation {
        let n_a = self.p_a[0].len();
        let k_a = self.p_a[0][0].len();
        let n_b = self.q_b[0].len();
        let k_b = self.q_b[0][0].len();
        Correlation::from_fn_unchecked((n_a, n_b, k_a, k_b), |x, y, a, b| {
            self.gamma.iter().enumerate().map(|(w, g)| g * self.p_a[w][x][a] * self.q_b[w][y][b]).sum()
        })
    }
}

/// Tensor-product strategy `<psi| M_xa (x) N_yb |psi>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumStrategy {
    pub d_a: usize,
    pub d_b: usize,
    #[serde(with = "cvec_serde")]
    pub psi: Vec<C64>,
    /// `[x][a]`
    pub m: Vec<Vec<CMatrix>>,
    /// `[y][b]`
    pub n: Vec<Vec<CMatrix>>,
}

impl QuantumStrategy {
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.psi.len() != self.d_a * self.d_b {
            return Err(Error::DimensionMismatch("state length differs from dA*dB".into()));
        }
        let nrm = vec_norm(&self.psi);
        if (nrm - 1.0).abs() > tol {
            return Err(Error::InvalidInput(format!("state norm {nrm}")));
        }
        for fam in &self.m {
            validate_povm(fam, tol)?;
            if fam[0].rows() != self.d_a {
                return Err(Error::DimensionMismatch("Alice POVM dimension".into()));
            }
        }
        for fam in &self.n {
            validate_povm(fam, tol)?;
            if fam[0].rows() != self.d_b {
                return Err(Error::DimensionMismatch("Bob POVM dimension".into()));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.m.len(), self.n.len(), self.m[0].len(), self.n[0].len())
    }

    fn psi_matrix(&self) -> CMatrix {
        CMatrix::from_vec(self.d_a, self.d_b, self.psi.clone()).expect("validated length")
    }

    pub fn correlation(&self) -> Correlation {
        let psi = self.psi_matrix();
        let psi_adj = psi.adjoint();
        let (n_a, n_b, k_a, k_b) = self.shape();
        let mut c = Correlation::zeros((n_a, n_b, k_a, k_b));
        for x in 0..n_a {
            for a in 0..k_a {
                // Psi^* M Psi, a dB x dB operator; p = tr(Psi^* M Psi N^T)
                let left = psi_adj.matmul(&self.m[x][a]).matmul(&psi);
                for y in 0..n_b {
                    for b in 0..k_b {
                        c.set(x, y, a, b, left.trace_product(&self.n[y][b].transpose()).re);
                    }
                }
            }
        }
        c
    }

    pub fn value(&self, g: &Game) -> Result<f64> {
        crate::games::winning_probability(g, &self.correlation())
    }

    /// Deterministic classical strategy as diagonal measurements on a product state.
    pub fn from_deterministic(alice: &[usize], bob: &[usize], k_a: usize, k_b: usize) -> Self {
        let proj = |v: usize, k: usize| -> Vec<CMatrix> {
            (0..k).map(|i| CMatrix::identity(1).scale_real(if i == v { 1.0 } else { 0.0 })).collect()
        };
        Self {
            d_a: 1,
            d_b: 1,
            psi: vec![C64::new(1.0, 0.0)],
            m: alice.iter().map(|&a| proj(a, k_a)).collect(),
            n: bob.iter().map(|&b| proj(b, k_b)).collect(),
        }
    }

    /// Classical strategy with shared randomness `omega`, shared as `sum_w sqrt(gamma_w) |w w>`.
    pub fn from_classical(s: &ClassicalStrategy) -> Self {
        let r = s.gamma.len();
        let mut psi = vec![C64::new(0.0, 0.0); r * r];
        for (w, g) in s.gamma.iter().enumerate() {
            psi[w * r + w] = C64::new(g.max(0.0).sqrt(), 0.0);
        }
        let diag = |table: &Vec<Vec<Vec<f64>>>, q: usize, o: usize| {
            CMatrix::diag_real(&(0..r).map(|w| table[w][q][o]).collect::<Vec<_>>())
        };
        let n_a = s.p_a[0].len();
        let k_a = s.p_a[0][0].len();
        let n_b = s.q_b[0].len();
        let k_b = s.q_b[0][0].len();
        Self {
            d_a: r,
            d_b: r,
            psi,
            m: (0..n_a).map(|x| (0..k_a).map(|a| diag(&s.p_a, x, a)).collect()).collect(),
            n: (0..n_b).map(|y| (0..k_b).map(|b| diag(&s.q_b, y, b)).collect()).collect(),
        }
    }
}

/// Single-space strategy with commuting Alice and Bob operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutingStrategy {
    pub d: usize,
    #[serde(with = "cvec_serde")]
    pub psi: Vec<C64>,
    pub m: Vec<Vec<CMatrix>>,
    pub n: Vec<Vec<CMatrix>>,
    pub commutation_residual: f64,
}

impl CommutingStrategy {
    pub fn new(psi: Vec<C64>, m: Vec<Vec<CMatrix>>, n: Vec<Vec<CMatrix>>) -> Result<Self> {
        let d = psi.len();
        for fam in m.iter().chain(&n) {
            validate_povm(fam, 1e-9)?;
            if fam[0].rows() != d {
                return Err(Error::DimensionMismatch("POVM dimension differs from state".into()));
            }
        }
        let mut res = 0.0f64;
        for fam in &m {
            for ma in fam {
                for gam in &n {
                    for nb in gam {
                        res = res.max(ma.commutator(nb).max_abs());
                    }
                }
            }
        }
        Ok(Self { d, psi, m, n, commutation_residual: res })
    }

    pub fn from_tensor(q: &QuantumStrategy) -> Self {
        let ia = CMatrix::identity(q.d_a);
        let ib = CMatrix::identity(q.d_b);
        let m = q.m.iter().map(|f| f.iter().map(|e| crate::numerics::kron(e, &ib)).collect()).collect();
        let n = q.n.iter().map(|f| f.iter().map(|e| crate::numerics::kron(&ia, e)).collect()).collect();
        Self { d: q.d_a * q.d_b, psi: q.psi.clone(), m, n, commutation_residual: 0.0 }
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.m.len(), self.n.len(), self.m[0].len(), self.n[0].len())
    }

    pub fn correlation(&self) -> Correlation {
        let (n_a, n_b, k_a, k_b) = self.shape();
        let nb_psi: Vec<Vec<Vec<C64>>> = self.n.iter().map(|f| f.iter().map(|e| e.mul_vec(&self.psi)).collect()).collect();
        let mut c = Correlation::zeros((n_a, n_b, k_a, k_b));
        for x in 0..n_a {
            for a in 0..k_a {
                let ma_psi = self.m[x][a].mul_vec(&self.psi);
                for y in 0..n_b {
                    for b in 0..k_b {
                        c.set(x, y, a, b, crate::numerics::inner(&ma_psi, &nb_psi[y][b]).re);
                    }
                }
            }
        }
        c
    }
}
