use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{CMatrix, C64};

/// Word over generators `B_yb`, written left to right.
pub type Word = Vec<(usize, usize)>;

/// `sum_i c_i W_i` in noncommuting variables `B_yb`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NCPolynomial {
    pub terms: Vec<(C64, Word)>,
}

impl NCPolynomial {
    pub fn monomial(word: Word) -> Self {
        Self { terms: vec![(C64::new(1.0, 0.0), word)] }
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, w)| w.len()).max().unwrap_or(0)
    }

    /// Reversed words with conjugated coefficients.
    pub fn adjoint(&self) -> Self {
        Self { terms: self.terms.iter().map(|(c, w)| (c.conj(), w.iter().rev().copied().collect())).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { terms: self.terms.iter().chain(&other.terms).cloned().collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::new();
        for (c, w) in &self.terms {
            for (d, v) in &other.terms {
                terms.push((c * d, w.iter().chain(v).copied().collect()));
            }
        }
        Self { terms }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { terms: self.terms.iter().map(|(c, w)| (c * s, w.clone())).collect() }
    }

    /// `{B_0, B_1}^2` with `B_y = B_y0 - B_y1`.
    pub fn chsh_anticommutator_squared() -> Self {
        let one = C64::new(1.0, 0.0);
        let obs = |y: usize| Self { terms: vec![(one, vec![(y, 0)]), (-one, vec![(y, 1)])] };
        let anti = obs(0).mul(&obs(1)).add(&obs(1).mul(&obs(0)));
        anti.mul(&anti)
    }

    pub fn check(&self, b: &[Vec<CMatrix>]) -> Result<()> {
        for (_, w) in &self.terms {
            for &(y, o) in w {
                if y >= b.len() || o >= b[y].len() {
                    return Err(Error::InvalidInput(format!("generator ({y},{o}) does not exist")));
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, b: &[Vec<CMatrix>]) -> Result<CMatrix> {
        self.check(b)?;
        let dim = b.first().and_then(|f| f.first()).map(CMatrix::rows).ok_or(Error::EmptyList)?;
        let mut acc = CMatrix::zeros(dim, dim);
        for (c, w) in &self.terms {
            let m = w.iter().fold(CMatrix::identity(dim), |m, &(y, o)| m.matmul(&b[y][o]));
            acc = &acc + &m.scale(*c);
        }
        Ok(acc)
    }
}

/// All words of length `1..=degree` over the generators of `b`.
pub fn monomials(b: &[Vec<CMatrix>], degree: usize) -> Vec<Word> {
    let letters: Vec<(usize, usize)> = b.iter().enumerate().flat_map(|(y, f)| (0..f.len()).map(move |o| (y, o))).collect();
    let mut out: Vec<Word> = Vec::new();
    let mut frontier: Vec<Word> = vec![Vec::new()];
    for _ in 0..degree {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &letters {
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
