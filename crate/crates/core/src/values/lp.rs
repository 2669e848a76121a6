//! Dense two-phase simplex with Bland's rule.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

struct Tableau {
    rows: usize,
    cols: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f == 0.0 {
                continue;
            }
            for j in 0..w {
                self.t[i * w + j] -= f * prow[j];
            }
        }
        self.basis[r] = c;
    }

    /// Maximise `obj . x` over the current basis; only columns with `allowed[j]` may enter.
    fn optimize(&mut self, obj: &[f64], allowed: &[bool], tol: f64) -> Result<()> {
        for _ in 0..50_000 {
            let reduced = |j: usize| -> f64 { obj[j] - (0..self.rows).map(|i| obj[self.basis[i]] * self.at(i, j)).sum::<f64>() };
            let Some(enter) = (0..self.cols).find(|&j| allowed[j] && !self.basis.contains(&j) && reduced(j) > tol) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, enter);
                if a > tol {
                    let ratio = self.rhs(i) / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::SolverFailure("linear program is unbounded".into()));
            };
            self.pivot(r, enter);
        }
        Err(Error::NoConvergence("simplex pivot budget exhausted".into()))
    }
}

/// Maximise `c . x` subject to `a x = b`, `x >= 0`. `a` is given row-major.
pub fn simplex_max(c: &[f64], a: &[Vec<f64>], b: &[f64], tol: f64) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("LP data shapes".into()));
    }
    let cols = n + m;
    let w = cols + 1;
    let mut t = vec![0.0; m * w];
    for i in 0..m {
        let s = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i * w + j] = s * a[i][j];
        }
        t[i * w + n + i] = 1.0;
        t[i * w + cols] = s * b[i];
    }
    let mut tab = Tableau { rows: m, cols, t, basis: (n..n + m).collect() };
    // phase one: maximise minus the sum of artificials
    let mut obj1 = vec![0.0; cols];
    obj1[n..].iter_mut().for_each(|v| *v = -1.0);
    tab.optimize(&obj1, &vec![true; cols], tol)?;
    let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= n).map(|i| tab.rhs(i)).sum();
    if infeas > 1e-7 {
        return Err(Error::SolverFailure(format!("linear program is infeasible (phase one {infeas:.3e})")));
    }
    // drive remaining artificials out of the basis; rows that cannot pivot are redundant
    for i in 0..m {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab.at(i, j).abs() > 1e-9 && !tab.basis.contains(&j)) {
                tab.pivot(i, j);
            }
        }
    }
    let mut obj2 = vec![0.0; cols];
    obj2[..n].copy_from_slice(c);
    let allowed: Vec<bool> = (0..cols).map(|j| j < n).collect();
    tab.optimize(&obj2, &allowed, tol)?;
    let mut x = vec![0.0; n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.rhs(i);
        }
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpSolution { value, x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp_brute_force_oracle() {
        // max x + 2y s.t. x + y + s1 = 4, x + 3y + s2 = 6
        let c = [1.0, 2.0, 0.0, 0.0];
        let a = vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]];
        let sol = simplex_max(&c, &a, &[4.0, 6.0], 1e-10).unwrap();
        // vertices of the feasible polygon: (0,0),(4,0),(0,2),(3,1)
        let best = [(0.0, 0.0), (4.0, 0.0), (0.0, 2.0), (3.0, 1.0)].iter().map(|(x, y)| x + 2.0 * y).fold(f64::MIN, f64::max);
        assert!((sol.value - best).abs() < 1e-10);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![vec![1.0, 1.0]];
        assert!(simplex_max(&[1.0, 0.0], &a, &[-1.0], 1e-10).is_err());
        let a = vec![vec![1.0, -1.0]];
        assert!(matches!(simplex_max(&[1.0, 0.0], &a, &[1.0], 1e-10), Err(Error::SolverFailure(_))));
    }

    #[test]
    fn redundant_equalities() {
        let a = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        let sol = simplex_max(&[1.0, 3.0], &a, &[1.0, 2.0], 1e-10).unwrap();
        assert!((sol.value - 3.0).abs() < 1e-10);
    }
}
