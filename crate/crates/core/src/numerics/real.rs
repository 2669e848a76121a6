//! Small dense real matrices for the conic solvers.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RMatrix {
    pub n: usize,
    pub m: usize,
    pub data: Vec<f64>,
}

impl RMatrix {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self { n, m, data: vec![0.0; n * m] }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 1.0;
        }
        a
    }

    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut a = Self::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                a[(i, j)] = f(i, j);
            }
        }
        a
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.m, self.n, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, b: &Self) -> Self {
        assert_eq!(self.m, b.n);
        let mut out = Self::zeros(self.n, b.m);
        for i in 0..self.n {
            for k in 0..self.m {
                let a = self.data[i * self.m + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &b.data[k * b.m..(k + 1) * b.m];
                let orow = &mut out.data[i * b.m..(i + 1) * b.m];
                for (o, x) in orow.iter_mut().zip(brow) {
                    *o += a * x;
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, s: f64, b: &Self) {
        for (x, y) in self.data.iter_mut().zip(&b.data) {
            *x += s * y;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, m: self.m, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in i + 1..self.n {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    /// Frobenius inner product.
    pub fn dot(&self, b: &Self) -> f64 {
        self.data.iter().zip(&b.data).map(|(x, y)| x * y).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n.min(self.m)).map(|i| self[(i, i)]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Lower Cholesky factor.
    pub fn cholesky(&self) -> Result<Self> {
        let n = self.n;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPsd(d));
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(l)
    }

    /// Inverse of a symmetric positive definite matrix via its Cholesky factor.
    pub fn spd_inverse(&self) -> Result<Self> {
        let l = self.cholesky()?;
        let li = lower_inverse(&l);
        Ok(li.transpose().matmul(&li))
    }

    /// Eigenvalues of a symmetric matrix (ascending) with eigenvectors as columns.
    pub fn symmetric_eig(&self) -> (Vec<f64>, Self) {
        let n = self.n;
        let mut a = self.clone();
        a.symmetrize();
        let mut v = Self::identity(n);
        let scale = a.norm().max(1e-300);
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off.sqrt() <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = if theta == 0.0 { 1.0 } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let x = a[(k, p)];
                        let y = a[(k, q)];
                        a[(k, p)] = c * x - s * y;
                        a[(k, q)] = s * x + c * y;
                    }
                    for k in 0..n {
                        let x = a[(p, k)];
                        let y = a[(q, k)];
                        a[(p, k)] = c * x - s * y;
                        a[(q, k)] = s * x + c * y;
                    }
                    for k in 0..n {
                        let x = v[(k, p)];
                        let y = v[(k, q)];
                        v[(k, p)] = c * x - s * y;
                        v[(k, q)] = s * x + c * y;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
        let vals = order.iter().map(|&i| a[(i, i)]).collect();
        let vecs = Self::from_fn(n, n, |i, k| v[(i, order[k])]);
        (vals, vecs)
    }
}

impl Index<(usize, usize)> for RMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.m + j]
    }
}

impl IndexMut<(usize, usize)> for RMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.m + j]
    }
}

pub fn lower_inverse(l: &RMatrix) -> RMatrix {
    let n = l.n;
    let mut inv = RMatrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = 1.0 / l[(j, j)];
        for i in j + 1..n {
            let mut s = 0.0;
            for k in j..i {
                s -= l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = s / l[(i, i)];
        }
    }
    inv
}

/// Solve `A x = b` for symmetric positive definite `A`.
pub fn cholesky_solve(a: &RMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let l = a.cholesky()?;
    let n = a.n;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Ok(x)
}

/// Solve a general square system by Gaussian elimination with partial pivoting.
pub fn lu_solve(a: &RMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[(i, col)].abs().partial_cmp(&m[(j, col)].abs()).unwrap()).unwrap();
        if m[(piv, col)].abs() < 1e-300 {
            return Err(Error::SolverFailure("singular linear system".into()));
        }
        if piv != col {
            for k in 0..n {
                m.data.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        for i in col + 1..n {
            let f = m[(i, col)] / m[(col, col)];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[(i, k)] -= f * m[(col, k)];
            }
            x[i] -= f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= m[(i, k)] * x[k];
        }
        x[i] = s / m[(i, i)];
    }
    Ok(x)
}
