//! Primal-dual interior point method for block-diagonal real SDPs.
//!
//! Primal: `min <C, X>` s.t. `<A_i, X> = b_i`, `X >= 0`.
//! Dual:   `max b . y`  s.t. `C - sum_i y_i A_i = Z >= 0`.
//!
//! Search direction is HKM with a Mehrotra predictor-corrector.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::real::{cholesky_solve, lower_inverse, lu_solve, RMatrix};

/// Symmetric sparse entry: `(block, i, j, value)` sets both `(i,j)` and `(j,i)`.
pub type Entry = (usize, usize, usize, f64);

#[derive(Clone, Debug, Default)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub c: Vec<Entry>,
    pub a: Vec<Vec<Entry>>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SdpSolution {
    pub primal_objective: f64,
    pub dual_objective: f64,
    #[serde(skip)]
    pub x: Vec<RMatrix>,
    pub y: Vec<f64>,
    #[serde(skip)]
    pub z: Vec<RMatrix>,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 200 }
    }
}

type BMat = Vec<RMatrix>;

fn dense(sizes: &[usize], entries: &[Entry]) -> BMat {
    let mut out: BMat = sizes.iter().map(|&n| RMatrix::zeros(n, n)).collect();
    for &(blk, i, j, v) in entries {
        out[blk][(i, j)] += v;
        if i != j {
            out[blk][(j, i)] += v;
        }
    }
    out
}

fn bdot(a: &BMat, b: &BMat) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn bnorm(a: &BMat) -> f64 {
    bdot(a, a).sqrt()
}

fn apply(entries: &[Entry], g: &BMat) -> f64 {
    entries.iter().map(|&(blk, i, j, v)| if i == j { v * g[blk][(i, j)] } else { v * (g[blk][(i, j)] + g[blk][(j, i)]) }).sum()
}

/// Largest step in `(0, 1]` scaled by `tau` keeping `m + alpha d` positive definite.
fn step_length(m: &BMat, d: &BMat, tau: f64) -> Result<f64> {
    let mut alpha = f64::INFINITY;
    for (mb, db) in m.iter().zip(d) {
        if mb.n == 0 {
            continue;
        }
        let l = mb.cholesky()?;
        let li = lower_inverse(&l);
        let s = li.matmul(db).matmul(&li.transpose());
        let (vals, _) = s.symmetric_eig();
        let lmin = vals[0];
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    Ok((tau * alpha).min(1.0))
}

/// Drop constraints that are linearly dependent on earlier ones; reject inconsistent right-hand sides.
fn independent_constraints(p: &SdpProblem) -> Result<Vec<usize>> {
    let mut offsets = vec![0usize; p.block_sizes.len() + 1];
    for (k, &n) in p.block_sizes.iter().enumerate() {
        offsets[k + 1] = offsets[k] + n * (n + 1) / 2;
    }
    let dim = offsets[p.block_sizes.len()];
    let svec = |entries: &[Entry]| -> Vec<f64> {
        let mut v = vec![0.0; dim + 1];
        for &(blk, i, j, val) in entries {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            let n = p.block_sizes[blk];
            let idx = offsets[blk] + i * n - i * (i + 1) / 2 + j;
            v[idx] += if i == j { val } else { val * std::f64::consts::SQRT_2 };
        }
        v
    };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    for (k, entries) in p.a.iter().enumerate() {
        let mut v = svec(entries);
        v[dim] = p.b[k];
        let scale = v[..dim].iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 {
            if p.b[k].abs() > 1e-9 {
                return Err(Error::SolverFailure(format!("constraint {k} is 0 = {}", p.b[k])));
            }
            continue;
        }
        v.iter_mut().for_each(|x| *x /= scale);
        for _ in 0..2 {
            for q in &basis {
                let proj: f64 = v[..dim].iter().zip(&q[..dim]).map(|(a, b)| a * b).sum();
                for (a, b) in v.iter_mut().zip(q) {
                    *a -= proj * b;
                }
            }
        }
        let nrm = v[..dim].iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-9 {
            v.iter_mut().for_each(|x| *x /= nrm);
            basis.push(v);
            keep.push(k);
        } else if v[dim].abs() > 1e-7 {
            return Err(Error::SolverFailure(format!("constraint {k} is inconsistent with earlier ones")));
        }
    }
    Ok(keep)
}

pub fn solve_sdp(problem: &SdpProblem, opts: SdpOptions) -> Result<SdpSolution> {
    if problem.a.len() != problem.b.len() {
        return Err(Error::DimensionMismatch("constraint count differs from b".into()));
    }
    let keep = independent_constraints(problem)?;
    let sizes = &problem.block_sizes;
    let a_entries: Vec<&[Entry]> = keep.iter().map(|&k| problem.a[k].as_slice()).collect();
    let b: Vec<f64> = keep.iter().map(|&k| problem.b[k]).collect();
    let m = b.len();
    let ntot: usize = sizes.iter().sum();
    let c = dense(sizes, &problem.c);
    let a_dense: Vec<BMat> = a_entries.iter().map(|e| dense(sizes, e)).collect();
    let touched: Vec<Vec<usize>> = a_entries
        .iter()
        .map(|e| {
            let mut t: Vec<usize> = e.iter().map(|x| x.0).collect();
            t.sort_unstable();
            t.dedup();
            t
        })
        .collect();

    let a_op = |g: &BMat| -> Vec<f64> { a_entries.iter().map(|e| apply(e, g)).collect() };
    let a_adj = |y: &[f64]| -> BMat {
        let mut out: BMat = sizes.iter().map(|&n| RMatrix::zeros(n, n)).collect();
        for (k, &yk) in y.iter().enumerate() {
            if yk == 0.0 {
                continue;
            }
            for &blk in &touched[k] {
                out[blk].add_scaled(yk, &a_dense[k][blk]);
            }
        }
        out
    };

    let nrm_c = bnorm(&c);
    let nrm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let max_a = a_dense.iter().map(bnorm).fold(0.0, f64::max);
    let sqrt_n = (ntot as f64).sqrt();
    let mut xi = 10.0f64.max(sqrt_n);
    for (k, ak) in a_dense.iter().enumerate() {
        xi = xi.max(ntot as f64 * (1.0 + b[k].abs()) / (1.0 + bnorm(ak)));
    }
    let eta = 10.0f64.max(sqrt_n).max(max_a).max(nrm_c);
    let mut x: BMat = sizes.iter().map(|&n| RMatrix::identity(n).scaled(xi)).collect();
    let mut z: BMat = sizes.iter().map(|&n| RMatrix::identity(n).scaled(eta)).collect();
    let mut y = vec![0.0; m];

    for iter in 0..opts.max_iter {
        let ax = a_op(&x);
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let aty = a_adj(&y);
        let rd: BMat = (0..sizes.len())
            .map(|k| {
                let mut r = c[k].clone();
                r.add_scaled(-1.0, &aty[k]);
                r.add_scaled(-1.0, &z[k]);
                r
            })
            .collect();
        let pobj = bdot(&c, &x);
        let dobj: f64 = b.iter().zip(&y).map(|(a, b)| a * b).sum();
        let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + nrm_b);
        let dinf = bnorm(&rd) / (1.0 + nrm_c);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if !pobj.is_finite() || !dobj.is_finite() {
            return Err(Error::SolverFailure("SDP iterates diverged".into()));
        }
        if gap <= opts.tol && pinf <= opts.tol && dinf <= opts.tol {
            return Ok(SdpSolution {
                primal_objective: pobj,
                dual_objective: dobj,
                x,
                y,
                z,
                iterations: iter,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
            });
        }
        if bnorm(&x) > 1e12 || bnorm(&z) > 1e12 {
            return Err(Error::SolverFailure("SDP appears infeasible or unbounded".into()));
        }
        let step = (|| -> Result<(Vec<f64>, BMat, BMat, f64, f64)> {
            let mu = bdot(&x, &z) / ntot as f64;
            let zinv: BMat = z.iter().map(|zb| zb.spd_inverse()).collect::<Result<_>>()?;

            // Schur complement M_ij = tr(A_i X A_j Z^-1)
            let mut schur = RMatrix::zeros(m, m);
            for j in 0..m {
                let mut g: BMat = sizes.iter().map(|&n| RMatrix::zeros(n, n)).collect();
                for &blk in &touched[j] {
                    g[blk] = x[blk].matmul(&a_dense[j][blk]).matmul(&zinv[blk]);
                }
                for i in 0..m {
                    if touched[i].iter().any(|t| touched[j].contains(t)) {
                        schur[(i, j)] = apply(a_entries[i], &g);
                    }
                }
            }
            schur.symmetrize();
            let diag_max = (0..m).map(|i| schur[(i, i)].abs()).fold(0.0, f64::max);
            let solve = |rhs: &[f64]| -> Result<Vec<f64>> {
                match cholesky_solve(&schur, rhs) {
                    Ok(v) => Ok(v),
                    Err(_) => {
                        let mut reg = schur.clone();
                        for i in 0..m {
                            reg[(i, i)] += 1e-13 * diag_max.max(1.0);
                        }
                        cholesky_solve(&reg, rhs).or_else(|_| lu_solve(&schur, rhs))
                    }
                }
            };
            let x_rd_zinv: BMat = (0..sizes.len()).map(|k| x[k].matmul(&rd[k]).matmul(&zinv[k])).collect();
            let a_xrz = a_op(&x_rd_zinv);
            let a_zinv = a_op(&zinv);

            let direction = |sigma_mu: f64, corr: Option<&BMat>| -> Result<(Vec<f64>, BMat, BMat)> {
                let corr_zinv: Option<BMat> = corr.map(|cm| (0..sizes.len()).map(|k| cm[k].matmul(&zinv[k])).collect());
                let mut rhs: Vec<f64> = (0..m).map(|i| b[i] - sigma_mu * a_zinv[i] + a_xrz[i]).collect();
                if let Some(cz) = &corr_zinv {
                    let acz = a_op(cz);
                    for i in 0..m {
                        rhs[i] += acz[i];
                    }
                }
                let dy = solve(&rhs)?;
                let atdy = a_adj(&dy);
                let mut dz: BMat = Vec::with_capacity(sizes.len());
                let mut dx: BMat = Vec::with_capacity(sizes.len());
                for k in 0..sizes.len() {
                    let mut dzk = rd[k].clone();
                    dzk.add_scaled(-1.0, &atdy[k]);
                    let mut dxk = zinv[k].scaled(sigma_mu);
                    dxk.add_scaled(-1.0, &x[k]);
                    dxk.add_scaled(-1.0, &x[k].matmul(&dzk).matmul(&zinv[k]));
                    if let Some(cz) = &corr_zinv {
                        dxk.add_scaled(-1.0, &cz[k]);
                    }
                    dxk.symmetrize();
                    dz.push(dzk);
                    dx.push(dxk);
                }
                Ok((dy, dx, dz))
            };

            let (_, dx_p, dz_p) = direction(0.0, None)?;
            let ap = step_length(&x, &dx_p, 1.0)?;
            let ad = step_length(&z, &dz_p, 1.0)?;
            let mut xz_aff = 0.0;
            for k in 0..sizes.len() {
                let mut xa = x[k].clone();
                xa.add_scaled(ap, &dx_p[k]);
                let mut za = z[k].clone();
                za.add_scaled(ad, &dz_p[k]);
                xz_aff += xa.dot(&za);
            }
            let sigma = (xz_aff / bdot(&x, &z)).clamp(0.0, 1.0).powi(3);
            let corr: BMat = (0..sizes.len()).map(|k| dx_p[k].matmul(&dz_p[k])).collect();
            let (dy, dx, dz) = direction(sigma * mu, Some(&corr))?;
            let tau = if iter < 5 { 0.9 } else { 0.98 };
            let ap = step_length(&x, &dx, tau)?;
            let ad = step_length(&z, &dz, tau)?;
            Ok((dy, dx, dz, ap, ad))
        })();
        let (dy, dx, dz, ap, ad) = match step {
            Ok(s) => s,
            // near the boundary the iterates can lose definiteness in floating point; keep a near-optimal point
            Err(e) => {
                let loose = (opts.tol * 1e2).max(1e-8);
                if gap <= loose && pinf <= loose && dinf <= loose {
                    return Ok(SdpSolution {
                        primal_objective: pobj,
                        dual_objective: dobj,
                        x,
                        y,
                        z,
                        iterations: iter,
                        primal_infeasibility: pinf,
                        dual_infeasibility: dinf,
                    });
                }
                return Err(e);
            }
        };
        for k in 0..sizes.len() {
            x[k].add_scaled(ap, &dx[k]);
            x[k].symmetrize();
            z[k].add_scaled(ad, &dz[k]);
            z[k].symmetrize();
        }
        for (yi, di) in y.iter_mut().zip(&dy) {
            *yi += ad * di;
        }
        if ap < 1e-10 && ad < 1e-10 {
            return Err(Error::SolverFailure("SDP step length collapsed".into()));
        }
    }
    Err(Error::SolverFailure(format!("SDP did not converge in {} iterations", opts.max_iter)))
}
