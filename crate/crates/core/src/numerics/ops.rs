use super::eig::hermitian_eig;
use super::matrix::{CMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Which tensor factor to trace out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_all(factors: &[CMatrix]) -> CMatrix {
    let mut acc = CMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f);
    }
    acc
}

/// Partial trace of an operator on `C^dA (x) C^dB`, removing `side`.
pub fn partial_trace(a: &CMatrix, dims: (usize, usize), side: Side) -> Result<CMatrix> {
    let (da, db) = dims;
    if a.rows() != da * db || a.cols() != da * db {
        return Err(Error::DimensionMismatch(format!("partial trace of {}x{} with dims ({da},{db})", a.rows(), a.cols())));
    }
    Ok(match side {
        Side::Second => CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| a[(i * db + k, j * db + k)]).sum()),
        Side::First => CMatrix::from_fn(db, db, |i, j| (0..da).map(|k| a[(k * db + i, k * db + j)]).sum()),
    })
}

/// Reduced state of a pure state `psi` on `A (x) B`, keeping the factor opposite to `side`.
pub fn reduced_from_vector(psi: &[C64], dims: (usize, usize), side: Side) -> Result<CMatrix> {
    let (da, db) = dims;
    if psi.len() != da * db {
        return Err(Error::DimensionMismatch(format!("vector of length {} with dims ({da},{db})", psi.len())));
    }
    Ok(match side {
        Side::Second => CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| psi[i * db + k] * psi[j * db + k].conj()).sum()),
        Side::First => CMatrix::from_fn(db, db, |i, j| (0..da).map(|k| psi[k * db + i] * psi[k * db + j].conj()).sum()),
    })
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMatrix) -> Result<f64> {
    let e = hermitian_eig(a, 1e-8 * (1.0 + a.max_abs()))?;
    Ok(e.values.last().copied().unwrap_or(0.0))
}

pub fn is_psd(a: &CMatrix, tol: f64) -> bool {
    a.is_hermitian(tol) && min_eigenvalue(a).map_or(false, |m| m >= -tol)
}

/// Square root of a PSD matrix. Eigenvalues in `[-tol, 0)` are clipped to zero.
pub fn sqrt_psd(a: &CMatrix, tol: f64) -> Result<CMatrix> {
    let e = hermitian_eig(a, tol.max(1e-12))?;
    if let Some(&m) = e.values.last() {
        if m < -tol {
            return Err(Error::NotPsd(m));
        }
    }
    Ok(e.map_spectrum(|x| x.max(0.0).sqrt()))
}

/// Moore-Penrose pseudo-inverse square root of a PSD matrix, cutting eigenvalues below `cut`.
pub fn inv_sqrt_psd(a: &CMatrix, cut: f64) -> Result<CMatrix> {
    let e = hermitian_eig(a, 1e-8)?;
    Ok(e.map_spectrum(|x| if x > cut { 1.0 / x.sqrt() } else { 0.0 }))
}

/// Trace distance `||a - b||_1 / 2` for Hermitian operators.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let d = a - b;
    let e = hermitian_eig(&d, 1e-8)?;
    Ok(e.values.iter().map(|x| x.abs()).sum::<f64>() / 2.0)
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    u.is_square() && u.adjoint().matmul(u).max_abs_diff(&CMatrix::identity(u.rows())) <= tol
}
