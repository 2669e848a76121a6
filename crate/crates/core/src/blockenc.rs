//! Block encodings: a unitary `U` on `m` ancilla and `n` system qubits with
//! `(<0|^m (x) 1) U (|0>^m (x) 1) = M / t`.
//!
//! Ancilla qubits are the most significant wires, so the encoded block is the
//! top-left `2^n x 2^n` corner of `U`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{complete_orthonormal, is_unitary, kron, operator_norm, sqrt_psd, CMatrix, C64};
use crate::sequential::NCPolynomial;

const NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct BlockEncoding {
    pub u: CMatrix,
    pub ancillas: usize,
    pub system: usize,
    pub scale: f64,
}

fn log2_exact(d: usize) -> Result<usize> {
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(d));
    }
    Ok(d.trailing_zeros() as usize)
}

impl BlockEncoding {
    pub fn new(u: CMatrix, ancillas: usize, system: usize, scale: f64) -> Result<Self> {
        if u.rows() != 1 << (ancillas + system) || !u.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "unitary is {}x{}, expected side 2^{}",
                u.rows(),
                u.cols(),
                ancillas + system
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("scale factor {scale}")));
        }
        if !is_unitary(&u, 1e-9) {
            return Err(Error::InvalidInput("block encoding is not unitary".into()));
        }
        Ok(Self { u, ancillas, system, scale })
    }

    /// `U = 1` with no ancillas.
    pub fn identity(system: usize) -> Self {
        Self { u: CMatrix::identity(1 << system), ancillas: 0, system, scale: 1.0 }
    }

    pub fn system_dim(&self) -> usize {
        1 << self.system
    }

    /// `(<0| (x) 1) U (|0> (x) 1)`
    pub fn block(&self) -> CMatrix {
        self.u.submatrix(0, 0, self.system_dim(), self.system_dim())
    }

    /// The encoded operator `t * block`.
    pub fn extract(&self) -> CMatrix {
        self.block().scale_real(self.scale)
    }

    /// Same block with `k` extra ancillas in front.
    fn widen(&self, k: usize) -> Self {
        if k == 0 {
            return self.clone();
        }
        Self { u: kron(&CMatrix::identity(1 << k), &self.u), ancillas: self.ancillas + k, system: self.system, scale: self.scale }
    }
}

/// Unitary dilation `[[M, sqrt(1 - M M*)], [sqrt(1 - M* M), -M*]]` with one ancilla and `t = 1`.
pub fn encode_contraction(m: &CMatrix) -> Result<BlockEncoding> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", m.rows(), m.cols())));
    }
    let n = log2_exact(m.rows())?;
    let norm = operator_norm(m)?;
    if norm > 1.0 + NORM_TOL {
        return Err(Error::NormExceeded(norm));
    }
    let d = m.rows();
    let id = CMatrix::identity(d);
    let md = m.adjoint();
    let top = sqrt_psd(&(&id - &m.matmul(&md)).hermitian_part(), NORM_TOL)?;
    let bottom = sqrt_psd(&(&id - &md.matmul(m)).hermitian_part(), NORM_TOL)?;
    let mut u = CMatrix::zeros(2 * d, 2 * d);
    u.set_submatrix(0, 0, m);
    u.set_submatrix(0, d, &top);
    u.set_submatrix(d, 0, &bottom);
    u.set_submatrix(d, d, &md.scale_real(-1.0));
    Ok(BlockEncoding { u, ancillas: 1, system: n, scale: 1.0 })
}

/// As [`encode_contraction`] after zero-padding `m` to the next power of two.
pub fn encode_contraction_padded(m: &CMatrix) -> Result<BlockEncoding> {
    let d = m.rows().max(m.cols()).next_power_of_two();
    let mut p = CMatrix::zeros(d, d);
    p.set_submatrix(0, 0, m);
    encode_contraction(&p)
}

/// Encodes `extract(e1) extract(e2)`: ancillas `(a1, a2)` in front of the system, `t = t1 t2`.
pub fn product(e1: &BlockEncoding, e2: &BlockEncoding) -> Result<BlockEncoding> {
    if e1.system != e2.system {
        return Err(Error::DimensionMismatch(format!("system qubits {} vs {}", e1.system, e2.system)));
    }
    let s = e1.system_dim();
    let (a1, a2) = (1usize << e1.ancillas, 1usize << e2.ancillas);
    let d2 = a2 * s;
    let dim = a1 * d2;
    // U1 acting on (a1, system) with a2 idle
    let u1 = CMatrix::from_fn(dim, dim, |r, c| {
        let (i1, i2, is) = (r / d2, (r / s) % a2, r % s);
        let (j1, j2, js) = (c / d2, (c / s) % a2, c % s);
        if i2 == j2 {
            e1.u[(i1 * s + is, j1 * s + js)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    // multiply by 1_{a1} (x) U2 block by block
    let mut u = CMatrix::zeros(dim, dim);
    for blk in 0..a1 {
        let off = blk * d2;
        for r in 0..dim {
            let row = &u1.row(r)[off..off + d2];
            for c in 0..d2 {
                let mut acc = C64::new(0.0, 0.0);
                for (k, v) in row.iter().enumerate() {
                    acc += v * e2.u[(k, c)];
                }
                u[(r, off + c)] = acc;
            }
        }
    }
    Ok(BlockEncoding { u, ancillas: e1.ancillas + e2.ancillas, system: e1.system, scale: e1.scale * e2.scale })
}

/// `U*`, encoding `extract(e)*` with the same scale.
pub fn adjoint(e: &BlockEncoding) -> BlockEncoding {
    BlockEncoding { u: e.u.adjoint(), ..e.clone() }
}

/// Unitary whose first column is the unit vector `v`.
fn prep(v: Vec<C64>) -> CMatrix {
    let n = v.len();
    CMatrix::from_columns(n, &complete_orthonormal(vec![v], n))
}

/// Encodes `sum_i c_i extract(e_i)` with `t' = sum_i |c_i| t_i`, using a select register in front.
pub fn linear_combination(encodings: &[BlockEncoding], coefficients: &[C64]) -> Result<BlockEncoding> {
    let first = encodings.first().ok_or(Error::EmptyList)?;
    if encodings.len() != coefficients.len() {
        return Err(Error::DimensionMismatch(format!("{} encodings, {} coefficients", encodings.len(), coefficients.len())));
    }
    if let Some(e) = encodings.iter().find(|e| e.system != first.system) {
        return Err(Error::DimensionMismatch(format!("system qubits {} vs {}", e.system, first.system)));
    }
    let total: f64 = encodings.iter().zip(coefficients).map(|(e, c)| c.norm() * e.scale).sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("coefficients vanish".into()));
    }
    let m = encodings.iter().map(|e| e.ancillas).max().unwrap_or(0);
    let widened: Vec<BlockEncoding> = encodings.iter().map(|e| e.widen(m - e.ancillas)).collect();
    let k = encodings.len();
    let r = k.next_power_of_two().trailing_zeros() as usize;
    let kk = 1usize << r;
    let mut left = vec![C64::new(0.0, 0.0); kk];
    let mut right = vec![C64::new(0.0, 0.0); kk];
    for (i, (e, c)) in encodings.iter().zip(coefficients).enumerate() {
        let w = (c.norm() * e.scale / total).sqrt();
        left[i] = C64::new(w, 0.0);
        right[i] = if c.norm() > 0.0 { c / c.norm() * w } else { C64::new(0.0, 0.0) };
    }
    let pl = prep(left);
    let pr = prep(right);
    let inner = 1usize << (m + first.system);
    let dim = kk * inner;
    let mut u = CMatrix::zeros(dim, dim);
    // (PL* (x) 1) SELECT (PR (x) 1), entrywise over select indices
    for i in 0..kk {
        for j in 0..kk {
            let mut acc = CMatrix::zeros(inner, inner);
            let mut any = false;
            for q in 0..kk {
                let w = pl[(q, i)].conj() * pr[(q, j)];
                if w.norm() < 1e-300 {
                    continue;
                }
                any = true;
                let uq = if q < k { &widened[q].u } else { &CMatrix::identity(inner) };
                acc = &acc + &uq.scale(w);
            }
            if any {
                u.set_submatrix(i * inner, j * inner, &acc);
            }
        }
    }
    Ok(BlockEncoding { u, ancillas: r + m, system: first.system, scale: total })
}

/// `(M + M*) / 2` with the scale of `e`.
pub fn real_part(e: &BlockEncoding) -> Result<BlockEncoding> {
    let h = C64::new(0.5, 0.0);
    linear_combination(&[e.clone(), adjoint(e)], &[h, h])
}

/// `(M - M*) / 2i` with the scale of `e`.
pub fn imag_part(e: &BlockEncoding) -> Result<BlockEncoding> {
    linear_combination(&[e.clone(), adjoint(e)], &[C64::new(0.0, -0.5), C64::new(0.0, 0.5)])
}

/// Products of contraction encodings of the letters, combined linearly over the terms of `p`.
pub fn encode_polynomial(b: &[Vec<CMatrix>], p: &NCPolynomial) -> Result<BlockEncoding> {
    p.check(b)?;
    let dim = b.first().and_then(|f| f.first()).map(CMatrix::rows).ok_or(Error::EmptyList)?;
    let n = log2_exact(dim)?;
    let mut combined: BTreeMap<Vec<(usize, usize)>, C64> = BTreeMap::new();
    for (c, w) in &p.terms {
        *combined.entry(w.clone()).or_insert(C64::new(0.0, 0.0)) += c;
    }
    combined.retain(|_, c| c.norm() > 0.0);
    if combined.is_empty() {
        return Err(Error::InvalidInput("polynomial has no nonzero term".into()));
    }
    let mut letters: BTreeMap<(usize, usize), BlockEncoding> = BTreeMap::new();
    let mut terms = Vec::with_capacity(combined.len());
    let mut coefficients = Vec::with_capacity(combined.len());
    for (w, c) in combined {
        let mut enc = BlockEncoding::identity(n);
        for &(y, o) in &w {
            if !letters.contains_key(&(y, o)) {
                letters.insert((y, o), encode_contraction(&b[y][o])?);
            }
            enc = product(&enc, &letters[&(y, o)])?;
        }
        terms.push(enc);
        coefficients.push(c);
    }
    if terms.len() == 1 && (coefficients[0] - C64::new(1.0, 0.0)).norm() == 0.0 {
        return Ok(terms.pop().expect("one term"));
    }
    linear_combination(&terms, &coefficients)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::numerics::{random, I};
    use crate::sequential::monomials;

    fn random_contraction(rng: &mut ChaCha8Rng, d: usize, norm: f64) -> CMatrix {
        let g = CMatrix::from_fn(d, d, |_, _| random::gaussian_vector(rng, 1)[0]);
        g.scale_real(norm / operator_norm(&g).unwrap())
    }

    #[test]
    fn trivial_contractions() {
        let e = encode_contraction(&CMatrix::identity(4)).unwrap();
        assert!(e.extract().max_abs_diff(&CMatrix::identity(4)) < 1e-12);
        let e = encode_contraction(&CMatrix::zeros(2, 2)).unwrap();
        assert!(e.extract().max_abs() < 1e-12);
        assert!(is_unitary(&e.u, 1e-9));
    }

    #[test]
    fn contraction_errors() {
        assert!(matches!(encode_contraction(&CMatrix::identity(3)), Err(Error::NotPowerOfTwo(3))));
        assert!(matches!(encode_contraction(&CMatrix::identity(2).scale_real(1.5)), Err(Error::NormExceeded(_))));
        let e = encode_contraction_padded(&CMatrix::identity(3)).unwrap();
        let want = CMatrix::diag_real(&[1.0, 1.0, 1.0, 0.0]);
        assert!(e.extract().max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn random_contractions_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..100 {
            let d = [2, 4, 8, 16][i % 4];
            let m = random_contraction(&mut rng, d, 0.9);
            let e = encode_contraction(&m).unwrap();
            assert!(e.extract().max_abs_diff(&m) < 1e-9);
            assert!(is_unitary(&e.u, 1e-9));
        }
    }

    #[test]
    fn products() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random::random_projective_measurement(&mut rng, 4, 2);
        let q = random::random_projective_measurement(&mut rng, 4, 2);
        let (ep, eq) = (encode_contraction(&p[0]).unwrap(), encode_contraction(&q[1]).unwrap());
        let pq = product(&ep, &eq).unwrap();
        assert!(pq.extract().max_abs_diff(&p[0].matmul(&q[1])) < 1e-8);
        assert!(is_unitary(&pq.u, 1e-9));
        let id = BlockEncoding::identity(2);
        assert!(product(&ep, &id).unwrap().extract().max_abs_diff(&p[0]) < 1e-12);
        let er = encode_contraction(&random_contraction(&mut rng, 4, 0.7)).unwrap();
        let left = product(&product(&ep, &eq).unwrap(), &er).unwrap();
        let right = product(&ep, &product(&eq, &er).unwrap()).unwrap();
        assert!(left.extract().max_abs_diff(&right.extract()) < 1e-8);
        assert!(matches!(product(&ep, &encode_contraction(&CMatrix::identity(2)).unwrap()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn scale_bookkeeping_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = encode_contraction(&random_contraction(&mut rng, 2, 0.5)).unwrap();
        let lc = linear_combination(&[e.clone(), e.clone()], &[C64::new(2.0, 0.0), C64::new(0.0, -3.0)]).unwrap();
        assert_eq!(lc.scale, 5.0);
        let lc2 = linear_combination(&[lc.clone(), e.clone()], &[C64::new(0.5, 0.0), C64::new(-1.0, 0.0)]).unwrap();
        assert_eq!(lc2.scale, 3.5);
        assert_eq!(product(&lc, &lc2).unwrap().scale, 17.5);
    }

    #[test]
    fn combinations_and_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m1 = random_contraction(&mut rng, 4, 0.8);
        let m2 = random_contraction(&mut rng, 4, 0.6);
        let (e1, e2) = (encode_contraction(&m1).unwrap(), encode_contraction(&m2).unwrap());
        let single = linear_combination(&[e1.clone()], &[C64::new(1.0, 0.0)]).unwrap();
        assert!(single.extract().max_abs_diff(&m1) < 1e-9);
        let c = [C64::new(0.3, 0.4), C64::new(-1.0, 0.0)];
        let lc = linear_combination(&[e1.clone(), e2.clone()], &c).unwrap();
        let want = &m1.scale(c[0]) + &m2.scale(c[1]);
        assert!(lc.extract().max_abs_diff(&want) < 1e-8);
        assert!(is_unitary(&lc.u, 1e-9));
        let re = real_part(&e1).unwrap().extract();
        assert!(re.max_abs_diff(&(&m1 + &m1.adjoint()).scale_real(0.5)) < 1e-8);
        let im = imag_part(&e1).unwrap().extract();
        assert!(im.max_abs_diff(&(&m1 - &m1.adjoint()).scale(C64::new(0.0, -0.5))) < 1e-8);
        let herm = m1.hermitian_part().scale_real(0.9 / operator_norm(&m1.hermitian_part()).unwrap());
        assert!(real_part(&encode_contraction(&herm).unwrap()).unwrap().extract().max_abs_diff(&herm) < 1e-8);
        let ii = encode_contraction(&CMatrix::identity(2).scale(I)).unwrap();
        assert!(imag_part(&ii).unwrap().extract().max_abs_diff(&CMatrix::identity(2)) < 1e-8);
        assert!(matches!(linear_combination(&[], &[]), Err(Error::EmptyList)));
    }

    #[test]
    fn chsh_residual_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = vec![random::random_povm(&mut rng, 2, 2), random::random_povm(&mut rng, 2, 2)];
        let p = NCPolynomial::chsh_anticommutator_squared();
        let e = encode_polynomial(&b, &p).unwrap();
        assert!(e.extract().max_abs_diff(&p.evaluate(&b).unwrap()) < 1e-7);
        let single = encode_polynomial(&b, &NCPolynomial::monomial(vec![(0, 0)])).unwrap();
        assert!(single.extract().max_abs_diff(&b[0][0]) < 1e-12);
        let two = encode_polynomial(&b, &NCPolynomial::monomial(vec![(0, 0), (1, 1)])).unwrap();
        assert!(two.extract().max_abs_diff(&b[0][0].matmul(&b[1][1])) < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn monomials_match_direct_evaluation(seed in any::<u64>(), quart in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = if quart { 4 } else { 2 };
            let b = vec![random::random_povm(&mut rng, d, 2), random::random_povm(&mut rng, d, 2)];
            for w in monomials(&b, 3) {
                let p = NCPolynomial::monomial(w);
                let e = encode_polynomial(&b, &p).unwrap();
                prop_assert!(e.extract().max_abs_diff(&p.evaluate(&b).unwrap()) < 1e-7);
                prop_assert_eq!(e.scale, 1.0);
            }
        }
    }
}
