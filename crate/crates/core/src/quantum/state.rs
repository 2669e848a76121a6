use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cvec_serde, hermitian_eig, is_psd, kron_vec, vec_norm, CMatrix, C64, ONE, ZERO};

/// Unit vector in `C^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    #[serde(with = "cvec_serde")]
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let n = vec_norm(&amplitudes);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("state has norm {n}")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescale to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let n = vec_norm(&amplitudes);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidInput("cannot normalise a zero vector".into()));
        }
        Ok(Self { amplitudes: amplitudes.into_iter().map(|z| z / n).collect() })
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = vec![ZERO; dim];
        v[k] = ONE;
        Self { amplitudes: v }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        Self { amplitudes: crate::numerics::random::random_state(rng, dim) }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { amplitudes: kron_vec(&self.amplitudes, &other.amplitudes) }
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator { matrix: CMatrix::projector(&self.amplitudes) }
    }
}

/// Positive operator with trace at most one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub const TOL: f64 = 1e-9;

    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tol(matrix, Self::TOL)
    }

    pub fn with_tol(matrix: CMatrix, tol: f64) -> Result<Self> {
        let defect = matrix.hermiticity_defect();
        if defect > tol {
            return Err(Error::NotHermitian(defect));
        }
        let matrix = matrix.hermitian_part();
        let e = hermitian_eig(&matrix, tol)?;
        if let Some(&m) = e.values.last() {
            if m < -tol {
                return Err(Error::NotPsd(m));
            }
        }
        let t = matrix.trace().re;
        if t > 1.0 + tol {
            return Err(Error::InvalidInput(format!("density operator has trace {t}")));
        }
        Ok(Self { matrix })
    }

    /// Wrap without validation; callers guarantee the invariants.
    pub fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim).scale_real(1.0 / dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= Self::TOL
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        is_psd(&self.matrix, tol) && self.trace() <= 1.0 + tol
    }
}
