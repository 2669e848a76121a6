use super::state::{DensityOperator, StateVector};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, reduced_from_vector, svd, vec_norm, CMatrix, Side, C64, ZERO};

/// `sum_i sqrt(lambda_i) |v_i> (x) |i>`, system first, eigenvalues descending.
///
/// For subnormalised input the returned vector has squared norm `tr(sigma)`,
/// so it is given as raw amplitudes rather than a [`StateVector`].
pub fn purify_amplitudes(sigma: &CMatrix, tol: f64) -> Result<Vec<C64>> {
    let d = sigma.rows();
    let e = hermitian_eig(sigma, tol)?;
    if let Some(&m) = e.values.last() {
        if m < -tol {
            return Err(Error::NotPsd(m));
        }
    }
    let mut out = vec![ZERO; d * d];
    for (i, &lam) in e.values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let s = lam.sqrt();
        for k in 0..d {
            out[k * d + i] = e.vectors[(k, i)] * s;
        }
    }
    Ok(out)
}

pub fn purify(sigma: &DensityOperator) -> Result<Vec<C64>> {
    purify_amplitudes(sigma.matrix(), DensityOperator::TOL)
}

/// Unitary `U` on the first factor with `(U (x) 1)|psi2> = |psi1>`, given equal reduced states on the second.
pub fn uhlmann_unitary(psi1: &StateVector, psi2: &StateVector, dims: (usize, usize)) -> Result<CMatrix> {
    uhlmann_unitary_with_tol(psi1.amplitudes(), psi2.amplitudes(), dims, 1e-7)
}

/// As [`uhlmann_unitary`] on raw (possibly subnormalised) amplitude vectors.
pub fn uhlmann_unitary_with_tol(psi1: &[C64], psi2: &[C64], dims: (usize, usize), tol: f64) -> Result<CMatrix> {
    let (da, db) = dims;
    if psi1.len() != da * db || psi2.len() != da * db {
        return Err(Error::DimensionMismatch(format!("states of length {}, {} with dims ({da},{db})", psi1.len(), psi2.len())));
    }
    let r1 = reduced_from_vector(psi1, dims, Side::First)?;
    let r2 = reduced_from_vector(psi2, dims, Side::First)?;
    let diff = r1.max_abs_diff(&r2);
    if diff > tol {
        return Err(Error::ReducedStatesDiffer(diff));
    }
    // As dA x dB matrices, psi1 = U psi2 for some unitary U; polar part of Psi1 Psi2^*.
    let m1 = CMatrix::from_vec(da, db, psi1.to_vec())?;
    let m2 = CMatrix::from_vec(da, db, psi2.to_vec())?;
    let overlap = m1.matmul(&m2.adjoint());
    let s = svd(&overlap)?;
    Ok(s.u.matmul(&s.v.adjoint()))
}

/// `|| (U (x) 1) psi2 - psi1 ||`
pub fn uhlmann_residual(u: &CMatrix, psi1: &[C64], psi2: &[C64], dims: (usize, usize)) -> f64 {
    let (da, db) = dims;
    let mut diff = vec![ZERO; da * db];
    for i in 0..da {
        for j in 0..db {
            let mut acc = ZERO;
            for k in 0..da {
                acc += u[(i, k)] * psi2[k * db + j];
            }
            diff[i * db + j] = acc - psi1[i * db + j];
        }
    }
    vec_norm(&diff)
}
