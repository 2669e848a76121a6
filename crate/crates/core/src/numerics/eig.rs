//! Cyclic Jacobi eigensolver for Hermitian matrices and a one-sided Jacobi SVD.

use super::matrix::{inner, vec_norm, CMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug)]
pub struct HermitianEig {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: CMatrix,
}

impl HermitianEig {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    /// Rebuild `sum_i f(lambda_i) v_i v_i*`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    /// Descending, length `min(rows, cols)`.
    pub s: Vec<f64>,
    pub v: CMatrix,
}

/// 2x2 unitary `G` with `G* [[app, apq], [conj(apq), aqq]] G` diagonal.
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> [[C64; 2]; 2] {
    let abs = apq.norm();
    let phase = apq / abs;
    let theta = (aqq - app) / (2.0 * abs);
    let t = if theta == 0.0 { 1.0 } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let ph = phase.conj();
    [[C64::new(c, 0.0), C64::new(s, 0.0)], [-ph * s, ph * c]]
}

fn rotate_columns(m: &mut CMatrix, p: usize, q: usize, g: &[[C64; 2]; 2]) {
    for k in 0..m.rows() {
        let x = m[(k, p)];
        let y = m[(k, q)];
        m[(k, p)] = x * g[0][0] + y * g[1][0];
        m[(k, q)] = x * g[0][1] + y * g[1][1];
    }
}

fn rotate_rows_adjoint(m: &mut CMatrix, p: usize, q: usize, g: &[[C64; 2]; 2]) {
    for k in 0..m.cols() {
        let x = m[(p, k)];
        let y = m[(q, k)];
        m[(p, k)] = g[0][0].conj() * x + g[1][0].conj() * y;
        m[(q, k)] = g[0][1].conj() * x + g[1][1].conj() * y;
    }
}

/// Make the first non-negligible component of `v` real and positive.
pub fn canonical_phase(v: &mut [C64]) {
    let scale = vec_norm(v);
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-10 * scale.max(1e-300)).copied() {
        let ph = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= ph;
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
pub fn hermitian_eig(a: &CMatrix, tol: f64) -> Result<HermitianEig> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("eig of {}x{}", a.rows(), a.cols())));
    }
    let defect = a.hermiticity_defect();
    if defect > tol {
        return Err(Error::NotHermitian(defect));
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm();
    let mut converged = scale == 0.0 || n <= 1;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.norm() <= 1e-300 {
                    continue;
                }
                let g = jacobi_rotation(m[(p, p)].re, m[(q, q)].re, apq);
                rotate_columns(&mut m, p, q, &g);
                rotate_rows_adjoint(&mut m, p, q, &g);
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                rotate_columns(&mut v, p, q, &g);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("Jacobi eigensolver on {n}x{n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.partial_cmp(&m[(i, i)].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = v.column(i);
        canonical_phase(&mut col);
        vectors.set_column(k, &col);
    }
    Ok(HermitianEig { values, vectors })
}

/// Extend orthonormal columns `cols` (each of length `dim`) to an orthonormal basis.
pub fn complete_orthonormal(mut cols: Vec<Vec<C64>>, dim: usize) -> Vec<Vec<C64>> {
    let mut k = 0;
    while cols.len() < dim && k < dim {
        let mut e = vec![ZERO; dim];
        e[k] = ONE;
        k += 1;
        for _ in 0..2 {
            for c in &cols {
                let proj = inner(c, &e);
                for (x, y) in e.iter_mut().zip(c) {
                    *x -= proj * y;
                }
            }
        }
        let nrm = vec_norm(&e);
        if nrm > 1e-6 {
            e.iter_mut().for_each(|x| *x /= nrm);
            cols.push(e);
        }
    }
    cols
}

fn svd_tall(a: &CMatrix) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    let mut w: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v = CMatrix::identity(n);
    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = w[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = w[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = inner(&w[p], &w[q]);
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() < 1e-300 {
                    continue;
                }
                rotated = true;
                let g = jacobi_rotation(alpha, beta, gamma);
                for k in 0..m {
                    let x = w[p][k];
                    let y = w[q][k];
                    w[p][k] = x * g[0][0] + y * g[1][0];
                    w[q][k] = x * g[0][1] + y * g[1][1];
                }
                rotate_columns(&mut v, p, q, &g);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("one-sided Jacobi SVD on {m}x{n}")));
    }
    let norms: Vec<f64> = w.iter().map(|c| vec_norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let smax = norms.iter().cloned().fold(0.0, f64::max);
    let s: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let mut ucols: Vec<Vec<C64>> = Vec::new();
    for &i in &order {
        if norms[i] > 1e-13 * smax.max(1e-300) && smax > 0.0 {
            let mut c: Vec<C64> = w[i].iter().map(|z| z / norms[i]).collect();
            // re-orthogonalise against previous columns for tiny singular values
            for prev in &ucols {
                let proj = inner(prev, &c);
                for (x, y) in c.iter_mut().zip(prev.iter()) {
                    *x -= proj * y;
                }
            }
            let nrm = vec_norm(&c);
            c.iter_mut().for_each(|x| *x /= nrm);
            ucols.push(c);
        } else {
            break;
        }
    }
    let ucols = complete_orthonormal(ucols, m);
    let u = CMatrix::from_columns(m, &ucols);
    let vcols: Vec<Vec<C64>> = order.iter().map(|&i| v.column(i)).collect();
    let v = CMatrix::from_columns(n, &vcols);
    Ok(Svd { u, s, v })
}

/// `A = U diag(s) V*` with full unitary `U` (rows x rows) and `V` (cols x cols).
pub fn svd(a: &CMatrix) -> Result<Svd> {
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let t = svd_tall(&a.adjoint())?;
        Ok(Svd { u: t.v, s: t.s, v: t.u })
    }
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> Result<f64> {
    Ok(svd(a)?.s.first().copied().unwrap_or(0.0))
}

/// Sum of singular values.
pub fn trace_norm(a: &CMatrix) -> Result<f64> {
    Ok(svd(a)?.s.iter().sum())
}
