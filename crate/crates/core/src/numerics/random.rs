use rand::Rng;
use rand_distr::StandardNormal;

use super::eig::complete_orthonormal;
use super::matrix::{inner, vec_norm, CMatrix, C64};

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()
}

pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    let v = gaussian_vector(rng, n);
    let nrm = vec_norm(&v);
    v.into_iter().map(|z| z / nrm).collect()
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    g.hermitian_part()
}

/// Haar-ish random unitary from Gram-Schmidt on Gaussian columns.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = gaussian_vector(rng, n);
        for _ in 0..2 {
            for c in &cols {
                let p = inner(c, &v);
                for (x, y) in v.iter_mut().zip(c) {
                    *x -= p * y;
                }
            }
        }
        let nrm = vec_norm(&v);
        if nrm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / nrm).collect());
        }
    }
    CMatrix::from_columns(n, &complete_orthonormal(cols, n))
}

/// Random projective measurement with `k` outcomes on `C^n` whose ranks differ by at most one.
pub fn random_balanced_measurement<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<CMatrix> {
    let u = random_unitary(rng, n);
    let offset = rng.gen_range(0..k);
    let mut out = vec![CMatrix::zeros(n, n); k];
    for col in 0..n {
        let a = (col + offset) % k;
        out[a] = &out[a] + &CMatrix::projector(&u.column(col));
    }
    out
}

/// Random projective measurement with `k` outcomes on `C^n`; outcome ranks are random and may be zero.
pub fn random_projective_measurement<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<CMatrix> {
    let u = random_unitary(rng, n);
    let mut out = vec![CMatrix::zeros(n, n); k];
    for col in 0..n {
        let a = rng.gen_range(0..k);
        let v = u.column(col);
        out[a] = &out[a] + &CMatrix::projector(&v);
    }
    out
}

/// Random density matrix of full rank (Ginibre).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let r = g.matmul(&g.adjoint());
    let t = r.trace().re;
    r.scale_real(1.0 / t)
}

/// Random POVM with `k` full-rank elements on `C^n`, `E_b = S^{-1/2} G_b S^{-1/2}` for Ginibre `G_b`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<CMatrix> {
    let g: Vec<CMatrix> = (0..k)
        .map(|_| {
            let g = CMatrix::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
            g.matmul(&g.adjoint())
        })
        .collect();
    let total = g.iter().fold(CMatrix::zeros(n, n), |acc, x| &acc + x);
    let fix = super::ops::inv_sqrt_psd(&total, 1e-14).expect("Hermitian input");
    g.iter().map(|x| fix.matmul(x).matmul(&fix).hermitian_part()).collect()
}
