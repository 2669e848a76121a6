//! Dense complex linear algebra used throughout the crate.

mod eig;
mod matrix;
mod ops;
pub mod random;
pub mod real;

pub use eig::{canonical_phase, complete_orthonormal, hermitian_eig, operator_norm, svd, trace_norm, HermitianEig, Svd};
pub use matrix::{cvec_serde, inner, kron_vec, vec_norm, CMatrix, C64, I, ONE, ZERO};
pub use ops::{
    inv_sqrt_psd, is_psd, is_unitary, kron, kron_all, min_eigenvalue, partial_trace, reduced_from_vector, sqrt_psd,
    trace_distance, Side,
};

/// Paulis and a few standard gates.
pub mod paulis {
    use super::{CMatrix, C64};

    pub fn id2() -> CMatrix {
        CMatrix::identity(2)
    }
    pub fn x() -> CMatrix {
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }
    pub fn y() -> CMatrix {
        CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => C64::new(0.0, 0.0),
        })
    }
    pub fn z() -> CMatrix {
        CMatrix::diag_real(&[1.0, -1.0])
    }
    pub fn h() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_real_rows(&[&[s, s], &[s, -s]])
    }
}

#[cfg(test)]
mod tests;
