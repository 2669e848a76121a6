use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::SequentialQuantumStrategy;
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, kron, partial_trace, svd, CMatrix, Side, C64};

/// One summand `M_n (x) 1_m`; `isometry` maps `C^n (x) C^m` (index `j*m + k`) into the full space.
#[derive(Clone, Debug, Serialize)]
pub struct AlgebraBlock {
    pub n: usize,
    pub m: usize,
    pub isometry: CMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraBlockDecomposition {
    pub blocks: Vec<AlgebraBlock>,
    /// Largest entry of `B - (+)_i V_i (B^i (x) 1) V_i^*` over Bob's POVM elements.
    pub residual: f64,
    /// Dimension of the algebra generated by Bob's POVM elements.
    pub algebra_dim: usize,
}

fn frob_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x.conj() * y).sum()
}

fn orthogonalize(basis: &[CMatrix], c: &CMatrix) -> CMatrix {
    let mut r = c.clone();
    for _ in 0..2 {
        for q in basis {
            let p = frob_inner(q, &r);
            r = &r - &q.scale(p);
        }
    }
    r
}

/// Orthonormal basis (Frobenius inner product) of the unital algebra generated by `gens`.
pub fn algebra_basis(gens: &[CMatrix], tol: f64) -> Result<Vec<CMatrix>> {
    let d = gens.first().map_or(1, CMatrix::rows);
    let budget = d * d;
    let mut basis: Vec<CMatrix> = Vec::new();
    let mut queue: Vec<CMatrix> = Vec::new();
    let push = |basis: &mut Vec<CMatrix>, queue: &mut Vec<CMatrix>, c: &CMatrix| -> Result<()> {
        let scale = c.frobenius_norm();
        if scale <= tol {
            return Ok(());
        }
        let r = orthogonalize(basis, c);
        let nr = r.frobenius_norm();
        if nr > tol.sqrt() * scale.max(1.0) {
            if basis.len() == budget {
                return Err(Error::NoConvergence(format!("algebra closure exceeded dimension {budget}")));
            }
            let q = r.scale_real(1.0 / nr);
            basis.push(q.clone());
            queue.push(q);
        }
        Ok(())
    };
    push(&mut basis, &mut queue, &CMatrix::identity(d))?;
    for g in gens {
        push(&mut basis, &mut queue, g)?;
    }
    while let Some(a) = queue.pop() {
        for g in gens {
            push(&mut basis, &mut queue, &a.matmul(g))?;
        }
    }
    Ok(basis)
}

/// Orthonormal basis of `{X : [X, g] = 0 for every g}`.
pub fn commutant_basis(gens: &[CMatrix], tol: f64) -> Result<Vec<CMatrix>> {
    let d = gens.first().map_or(1, CMatrix::rows);
    let n = d * d;
    let mut gram = CMatrix::zeros(n, n);
    for g in gens {
        // vec(gX - Xg), vec index i*d + j
        let k = CMatrix::from_fn(n, n, |row, col| {
            let (r, c) = (row / d, row % d);
            let (i, j) = (col / d, col % d);
            let mut v = C64::new(0.0, 0.0);
            if c == j {
                v += g[(r, i)];
            }
            if r == i {
                v -= g[(j, c)];
            }
            v
        });
        gram = &gram + &k.adjoint().matmul(&k);
    }
    let e = hermitian_eig(&gram.hermitian_part(), 1e-13)?;
    let top = e.values.first().copied().unwrap_or(0.0).max(1.0);
    Ok((0..n).filter(|&i| e.values[i] <= tol * top).map(|i| CMatrix::from_vec(d, d, e.vector(i)).expect("d*d entries")).collect())
}

/// Unitary polar factor.
fn polar(t: &CMatrix) -> Result<CMatrix> {
    let s = svd(t)?;
    Ok(s.u.matmul(&s.v.adjoint()))
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    parent[i] = r;
    r
}

fn decompose(gens: &[CMatrix], tol: f64) -> Result<Vec<AlgebraBlock>> {
    let d = gens[0].rows();
    let comm = commutant_basis(gens, tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut z = CMatrix::zeros(d, d);
    for x in &comm {
        let r: f64 = StandardNormal.sample(&mut rng);
        z = &z + &(x + &x.adjoint()).scale_real(r);
    }
    let e = hermitian_eig(&z.hermitian_part(), 1e-13)?;
    let gap = tol.sqrt();
    let mut spaces: Vec<CMatrix> = Vec::new();
    let mut start = 0;
    for i in 1..=d {
        if i == d || e.values[i - 1] - e.values[i] > gap {
            let cols: Vec<Vec<C64>> = (start..i).map(|k| e.vector(k)).collect();
            spaces.push(CMatrix::from_columns(d, &cols));
            start = i;
        }
    }
    let link = |p: &CMatrix, q: &CMatrix| -> (f64, usize) {
        let mut best = (0.0, 0);
        for (k, x) in comm.iter().enumerate() {
            let v = p.adjoint().matmul(x).matmul(q).frobenius_norm();
            if v > best.0 {
                best = (v, k);
            }
        }
        best
    };
    let mut parent: Vec<usize> = (0..spaces.len()).collect();
    for p in 0..spaces.len() {
        for q in p + 1..spaces.len() {
            if spaces[p].cols() == spaces[q].cols() && link(&spaces[p], &spaces[q]).0 > gap {
                let (rp, rq) = (find(&mut parent, p), find(&mut parent, q));
                parent[rq] = rp;
            }
        }
    }
    let mut blocks = Vec::new();
    for root in 0..spaces.len() {
        let members: Vec<usize> = (0..spaces.len()).filter(|&i| find(&mut parent, i) == root).collect();
        if members.is_empty() {
            continue;
        }
        let first = &spaces[members[0]];
        let n = first.cols();
        let m = members.len();
        let mut aligned = vec![first.clone()];
        for &k in &members[1..] {
            let (_, idx) = link(&spaces[k], first);
            let t = spaces[k].adjoint().matmul(&comm[idx]).matmul(first);
            aligned.push(spaces[k].matmul(&polar(&t)?));
        }
        let isometry = CMatrix::from_fn(d, n * m, |r, c| aligned[c % m][(r, c / m)]);
        blocks.push(AlgebraBlock { n, m, isometry });
    }
    blocks.sort_by_key(|b| (b.n, b.m));
    Ok(blocks)
}

fn compress(block: &AlgebraBlock, a: &CMatrix) -> Result<CMatrix> {
    let v = &block.isometry;
    partial_trace(&v.adjoint().matmul(a).matmul(v), (block.n, block.m), Side::Second)
}

fn leakage(blocks: &[AlgebraBlock], a: &CMatrix) -> Result<f64> {
    let mut rec = CMatrix::zeros(a.rows(), a.cols());
    for b in blocks {
        let part = compress(b, a)?.scale_real(1.0 / b.m as f64);
        let lifted = kron(&part, &CMatrix::identity(b.m));
        rec = &rec + &b.isometry.matmul(&lifted).matmul(&b.isometry.adjoint());
    }
    Ok(rec.max_abs_diff(a))
}

/// `sigma~ = (+)_i V_i (tr_{m_i}(V_i^* sigma V_i) (x) 1/m_i) V_i^*`.
fn pinch(blocks: &[AlgebraBlock], sigma: &CMatrix) -> Result<CMatrix> {
    let mut out = CMatrix::zeros(sigma.rows(), sigma.cols());
    for b in blocks {
        let lifted = kron(&compress(b, sigma)?, &CMatrix::identity(b.m).scale_real(1.0 / b.m as f64));
        out = &out + &b.isometry.matmul(&lifted).matmul(&b.isometry.adjoint());
    }
    Ok(out.hermitian_part())
}

/// Wedderburn decomposition of the algebra generated by Bob's POVMs, and the strategy with every
/// `sigma_xa` replaced by its block pinching.
pub fn block_reduce(s: &SequentialQuantumStrategy, tol: f64) -> Result<(AlgebraBlockDecomposition, SequentialQuantumStrategy)> {
    let gens: Vec<CMatrix> = s.b.iter().flatten().cloned().collect();
    let algebra_dim = algebra_basis(&gens, tol)?.len();
    let blocks = decompose(&gens, tol)?;
    let total: usize = blocks.iter().map(|b| b.n * b.m).sum();
    if total != s.dim {
        return Err(Error::SolverFailure(format!("blocks cover {total} of {} dimensions", s.dim)));
    }
    let mut residual = 0.0f64;
    for g in &gens {
        residual = residual.max(leakage(&blocks, g)?);
    }
    let sigma = s
        .sigma
        .iter()
        .map(|row| row.iter().map(|x| pinch(&blocks, x)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let reduced = SequentialQuantumStrategy::new_unchecked(sigma, s.b.clone())?;
    Ok((AlgebraBlockDecomposition { blocks, residual, algebra_dim }, reduced))
}
