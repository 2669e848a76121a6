use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::state::DensityOperator;
use crate::error::{Error, Result};
use crate::numerics::{is_psd, CMatrix};

/// Positive operator-valued measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Povm {
    elements: Vec<CMatrix>,
}

/// Check that `elements` are PSD and sum to the identity.
pub fn validate_povm(elements: &[CMatrix], tol: f64) -> Result<()> {
    let Some(first) = elements.first() else {
        return Err(Error::InvalidInput("POVM with no outcomes".into()));
    };
    let d = first.rows();
    let mut sum = CMatrix::zeros(d, d);
    for (k, e) in elements.iter().enumerate() {
        if e.rows() != d || e.cols() != d {
            return Err(Error::DimensionMismatch(format!("POVM element {k} is {}x{}", e.rows(), e.cols())));
        }
        if !is_psd(e, tol) {
            return Err(Error::NotPsd(crate::numerics::min_eigenvalue(e).unwrap_or(f64::NAN)));
        }
        sum = &sum + e;
    }
    let dev = sum.max_abs_diff(&CMatrix::identity(d));
    if dev > tol {
        return Err(Error::InvalidInput(format!("POVM elements sum to identity only within {dev:.3e}")));
    }
    Ok(())
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        validate_povm(&elements, 1e-9)?;
        Ok(Self { elements })
    }

    pub fn with_tol(elements: Vec<CMatrix>, tol: f64) -> Result<Self> {
        validate_povm(&elements, tol)?;
        Ok(Self { elements })
    }

    /// Measurement in the standard basis of `C^dim`.
    pub fn computational(dim: usize) -> Self {
        let elements = (0..dim)
            .map(|k| {
                let mut m = CMatrix::zeros(dim, dim);
                m[(k, k)] = crate::numerics::ONE;
                m
            })
            .collect();
        Self { elements }
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<CMatrix> {
        self.elements
    }
}

/// `tr(M_a rho) / tr(rho)` for each outcome.
pub fn outcome_distribution(rho: &DensityOperator, m: &Povm) -> Result<Vec<f64>> {
    if rho.dim() != m.dim() {
        return Err(Error::DimensionMismatch(format!("state dim {} vs POVM dim {}", rho.dim(), m.dim())));
    }
    let t = rho.trace();
    if t <= 0.0 {
        return Err(Error::InvalidInput("state has zero trace".into()));
    }
    Ok(m.elements.iter().map(|e| (e.trace_product(rho.matrix()).re / t).max(0.0)).collect())
}

/// Sample an index from a (nearly) normalised distribution.
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

pub fn measure(rho: &DensityOperator, m: &Povm, seed: u64) -> Result<usize> {
    let probs = outcome_distribution(rho, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_index(&mut rng, &probs))
}

/// Kraus operators grouped by outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    branches: BTreeMap<usize, Vec<CMatrix>>,
}

impl Instrument {
    pub fn new(branches: BTreeMap<usize, Vec<CMatrix>>) -> Result<Self> {
        let inst = Self { branches };
        inst.validate(1e-9)?;
        Ok(inst)
    }

    fn validate(&self, tol: f64) -> Result<()> {
        let mut dim_in = None;
        let mut sum: Option<CMatrix> = None;
        for kraus in self.branches.values() {
            for k in kraus {
                match dim_in {
                    None => dim_in = Some(k.cols()),
                    Some(d) if d != k.cols() => {
                        return Err(Error::DimensionMismatch("Kraus operators act on different spaces".into()))
                    }
                    _ => {}
                }
                let kk = k.adjoint().matmul(k);
                sum = Some(match sum {
                    None => kk,
                    Some(s) => &s + &kk,
                });
            }
        }
        let sum = sum.ok_or_else(|| Error::InvalidInput("instrument without Kraus operators".into()))?;
        let dev = sum.max_abs_diff(&CMatrix::identity(sum.rows()));
        if dev > tol {
            return Err(Error::InvalidInput(format!("instrument is not trace preserving ({dev:.3e})")));
        }
        Ok(())
    }

    /// Projective measure-and-keep instrument.
    pub fn from_projective(povm: &Povm) -> Self {
        Self { branches: povm.elements().iter().cloned().enumerate().map(|(a, p)| (a, vec![p])).collect() }
    }

    pub fn branches(&self) -> &BTreeMap<usize, Vec<CMatrix>> {
        &self.branches
    }
}

/// Apply every branch: outcome `a` maps to `sum_k K rho K*`.
pub fn apply_instrument(rho: &DensityOperator, inst: &Instrument) -> Result<BTreeMap<usize, DensityOperator>> {
    let mut out = BTreeMap::new();
    for (&a, kraus) in &inst.branches {
        let mut acc: Option<CMatrix> = None;
        for k in kraus {
            if k.cols() != rho.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator has {} columns, state dim {}",
                    k.cols(),
                    rho.dim()
                )));
            }
            let term = k.matmul(rho.matrix()).matmul(&k.adjoint());
            acc = Some(match acc {
                None => term,
                Some(s) => &s + &term,
            });
        }
        if let Some(m) = acc {
            out.insert(a, DensityOperator::from_matrix_unchecked(m.hermitian_part()));
        }
    }
    Ok(out)
}
