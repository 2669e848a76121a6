//! NPA moment-matrix relaxation for the commuting-operator value.
//!
//! Measurements are modelled as projective. The SDP is posed over words in the
//! first `k - 1` outcomes of every setting (the last outcome is `1 - sum` of the
//! others), which keeps the moment matrix strictly feasible. The full moment
//! matrix over all outcomes is reconstructed for the certificate.

use std::collections::HashMap;
use std::fmt;

use serde::{Serialize, Serializer};

use super::sdp::{solve_sdp, Entry, SdpOptions, SdpProblem};
use super::strategy::CommutingStrategy;
use crate::error::{Error, Result};
use crate::games::Game;
use crate::numerics::real::RMatrix;
use crate::numerics::{inner, CMatrix, C64};

const MAX_SIZE: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    /// Alice projector `E_{x,a}`.
    A { x: usize, a: usize },
    /// Bob projector `F_{y,b}`.
    B { y: usize, b: usize },
}

impl Letter {
    fn is_alice(&self) -> bool {
        matches!(self, Letter::A { .. })
    }

    fn setting(&self) -> (bool, usize) {
        match *self {
            Letter::A { x, .. } => (true, x),
            Letter::B { y, .. } => (false, y),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::A { x, a } => write!(f, "E{x}.{a}"),
            Letter::B { y, b } => write!(f, "F{y}.{b}"),
        }
    }
}

pub type Word = Vec<Letter>;

pub fn word_to_string(w: &[Letter]) -> String {
    if w.is_empty() {
        "1".into()
    } else {
        w.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("*")
    }
}

fn reduce_part(part: &mut Vec<Letter>) -> bool {
    loop {
        let mut changed = false;
        let mut i = 0;
        while i + 1 < part.len() {
            let (l, r) = (part[i], part[i + 1]);
            if l == r {
                part.remove(i + 1);
                changed = true;
            } else if l.setting() == r.setting() {
                return false;
            } else {
                i += 1;
            }
        }
        if !changed {
            return true;
        }
    }
}

/// Normal form of a word, or `None` if it is the zero operator.
///
/// Alice letters move in front of Bob letters, repeated projectors collapse and
/// distinct outcomes of one setting annihilate.
pub fn canonicalize_word(w: &[Letter]) -> Option<Word> {
    let mut alice: Vec<Letter> = w.iter().copied().filter(Letter::is_alice).collect();
    let mut bob: Vec<Letter> = w.iter().copied().filter(|l| !l.is_alice()).collect();
    if !reduce_part(&mut alice) || !reduce_part(&mut bob) {
        return None;
    }
    alice.extend(bob);
    Some(alice)
}

pub fn adjoint_word(w: &[Letter]) -> Word {
    let mut r = w.to_vec();
    r.reverse();
    canonicalize_word(&r).expect("adjoint of a nonzero canonical word is nonzero")
}

/// Representative of the pair `{w, w*}`, whose moments share a real part.
fn representative(w: &[Letter]) -> Word {
    let adj = adjoint_word(w);
    if adj.as_slice() < w {
        adj
    } else {
        w.to_vec()
    }
}

fn product(u: &[Letter], v: &[Letter]) -> Option<Word> {
    let mut w: Word = u.iter().rev().copied().collect();
    w.extend_from_slice(v);
    canonicalize_word(&w)
}

fn generate_words(letters: &[Letter], level: usize) -> Result<Vec<Word>> {
    let mut words: Vec<Word> = vec![Vec::new()];
    let mut seen: HashMap<Word, usize> = HashMap::new();
    seen.insert(Vec::new(), 0);
    let mut frontier: Vec<Word> = vec![Vec::new()];
    for _ in 0..level {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in letters {
                let mut cand = w.clone();
                cand.push(l);
                if let Some(c) = canonicalize_word(&cand) {
                    if !seen.contains_key(&c) {
                        seen.insert(c.clone(), words.len());
                        words.push(c.clone());
                        next.push(c);
                    }
                }
            }
        }
        if words.len() > MAX_SIZE {
            return Err(Error::BudgetExceeded(format!("moment matrix side {} exceeds {MAX_SIZE}", words.len())));
        }
        frontier = next;
    }
    Ok(words)
}

fn all_letters(g: &Game, drop_last: bool) -> Vec<Letter> {
    let (n_a, n_b, k_a, k_b) = g.shape();
    let ka = if drop_last { k_a - 1 } else { k_a };
    let kb = if drop_last { k_b - 1 } else { k_b };
    let mut out = Vec::new();
    for x in 0..n_a {
        for a in 0..ka {
            out.push(Letter::A { x, a });
        }
    }
    for y in 0..n_b {
        for b in 0..kb {
            out.push(Letter::B { y, b });
        }
    }
    out
}

/// Moment-matrix structure over words in all outcomes.
#[derive(Clone, Debug)]
pub struct NpaProblem {
    pub level: usize,
    pub words: Vec<Word>,
    /// Representative word of each moment variable; index 0 is the identity.
    pub variables: Vec<Word>,
    /// `moment_index[i][j]` is the variable of `words[i]^* words[j]`, `None` for the zero operator.
    pub moment_index: Vec<Vec<Option<usize>>>,
    /// Winning probability as `sum coef * variable`.
    pub objective: Vec<(usize, f64)>,
    /// `(x, a)` and `(y, b)` answer counts, needed for completeness checks.
    pub shape: (usize, usize, usize, usize),
}

impl NpaProblem {
    pub fn build(g: &Game, level: usize) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidInput("NPA level must be at least 1".into()));
        }
        let words = generate_words(&all_letters(g, false), level)?;
        let mut var_of: HashMap<Word, usize> = HashMap::new();
        let mut variables: Vec<Word> = vec![Vec::new()];
        var_of.insert(Vec::new(), 0);
        let mut var_id = |w: Word, variables: &mut Vec<Word>| -> usize {
            let r = representative(&w);
            *var_of.entry(r.clone()).or_insert_with(|| {
                variables.push(r);
                variables.len() - 1
            })
        };
        let n = words.len();
        let mut moment_index = vec![vec![None; n]; n];
        for i in 0..n {
            for j in 0..n {
                if let Some(w) = product(&words[i], &words[j]) {
                    moment_index[i][j] = Some(var_id(w, &mut variables));
                }
            }
        }
        let (n_a, n_b, k_a, k_b) = g.shape();
        let mut objective = Vec::new();
        for x in 0..n_a {
            for y in 0..n_b {
                for a in 0..k_a {
                    for b in 0..k_b {
                        if g.v(x, y, a, b) && g.mu(x, y) != 0.0 {
                            let w = vec![Letter::A { x, a }, Letter::B { y, b }];
                            objective.push((var_id(w, &mut variables), g.mu(x, y)));
                        }
                    }
                }
            }
        }
        Ok(Self { level, words, variables, moment_index, objective, shape: g.shape() })
    }

    /// Largest violation of the moment constraints by the real moment matrix of `s`.
    ///
    /// Checks PSD-ness, normalisation, completeness and that every entry
    /// agrees with all others mapped to the same variable.
    pub fn check_feasible(&self, s: &CommutingStrategy) -> Result<f64> {
        let vecs: Vec<Vec<C64>> = self.words.iter().map(|w| apply_word(w, s)).collect();
        let n = self.words.len();
        let gamma = RMatrix::from_fn(n, n, |i, j| inner(&vecs[i], &vecs[j]).re);
        let mut worst = (gamma[(0, 0)] - 1.0).abs();
        let mut value: Vec<Option<f64>> = vec![None; self.variables.len()];
        for i in 0..n {
            for j in 0..n {
                match self.moment_index[i][j] {
                    None => worst = worst.max(gamma[(i, j)].abs()),
                    Some(v) => match value[v] {
                        None => value[v] = Some(gamma[(i, j)]),
                        Some(prev) => worst = worst.max((prev - gamma[(i, j)]).abs()),
                    },
                }
            }
        }
        let (vals, _) = gamma.symmetric_eig();
        worst = worst.max(-vals[0]);
        worst = worst.max(self.completeness_violation(&gamma));
        Ok(worst)
    }

    fn index_of(&self, w: &[Letter]) -> Option<usize> {
        self.words.iter().position(|u| u.as_slice() == w)
    }

    fn completeness_violation(&self, gamma: &RMatrix) -> f64 {
        let (n_a, n_b, k_a, k_b) = self.shape;
        let mut worst = 0.0f64;
        for x in 0..n_a {
            let s: f64 = (0..k_a).filter_map(|a| self.index_of(&[Letter::A { x, a }])).map(|i| gamma[(0, i)]).sum();
            worst = worst.max((s - 1.0).abs());
        }
        for y in 0..n_b {
            let s: f64 = (0..k_b).filter_map(|b| self.index_of(&[Letter::B { y, b }])).map(|i| gamma[(0, i)]).sum();
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }

    pub fn objective_value(&self, var_values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * var_values[v]).sum()
    }
}

fn apply_word(w: &[Letter], s: &CommutingStrategy) -> Vec<C64> {
    let mut v = s.psi.clone();
    for l in w.iter().rev() {
        let m: &CMatrix = match *l {
            Letter::A { x, a } => &s.m[x][a],
            Letter::B { y, b } => &s.n[y][b],
        };
        v = m.mul_vec(&v);
    }
    v
}

/// Expansion of a full-outcome word as a combination of reduced-outcome words.
fn expand(w: &[Letter], k_a: usize, k_b: usize) -> Vec<(Word, f64)> {
    let mut terms: Vec<(Word, f64)> = vec![(Vec::new(), 1.0)];
    for &l in w {
        let options: Vec<(Option<Letter>, f64)> = match l {
            Letter::A { x, a } if a == k_a - 1 => {
                let mut o = vec![(None, 1.0)];
                o.extend((0..k_a - 1).map(|a2| (Some(Letter::A { x, a: a2 }), -1.0)));
                o
            }
            Letter::B { y, b } if b == k_b - 1 => {
                let mut o = vec![(None, 1.0)];
                o.extend((0..k_b - 1).map(|b2| (Some(Letter::B { y, b: b2 }), -1.0)));
                o
            }
            _ => vec![(Some(l), 1.0)],
        };
        let mut next = Vec::new();
        for (t, c) in &terms {
            for (opt, c2) in &options {
                let mut nw = t.clone();
                if let Some(letter) = opt {
                    nw.push(*letter);
                }
                next.push((nw, c * c2));
            }
        }
        terms = next;
    }
    let mut merged: HashMap<Word, f64> = HashMap::new();
    for (t, c) in terms {
        if let Some(cw) = canonicalize_word(&t) {
            *merged.entry(cw).or_insert(0.0) += c;
        }
    }
    let mut out: Vec<(Word, f64)> = merged.into_iter().filter(|(_, c)| *c != 0.0).collect();
    out.sort_by(|p, q| p.0.cmp(&q.0));
    out
}

#[derive(Clone, Debug)]
pub struct NpaCertificate {
    pub problem: NpaProblem,
    /// Full moment matrix indexed by `problem.words`.
    pub moment_matrix: RMatrix,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
}

impl Serialize for NpaCertificate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let n = self.moment_matrix.n;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| self.moment_matrix[(i, j)]).collect()).collect();
        let words: Vec<String> = self.problem.words.iter().map(|w| word_to_string(w)).collect();
        let mut st = s.serialize_struct("NpaCertificate", 6)?;
        st.serialize_field("level", &self.problem.level)?;
        st.serialize_field("words", &words)?;
        st.serialize_field("moment_matrix", &rows)?;
        st.serialize_field("primal_objective", &self.primal_objective)?;
        st.serialize_field("dual_objective", &self.dual_objective)?;
        st.serialize_field("iterations", &self.iterations)?;
        st.end()
    }
}

/// Upper bound on the commuting-operator value from NPA level `level`.
pub fn npa_upper_bound(g: &Game, level: usize, tol: f64) -> Result<(f64, NpaCertificate)> {
    let problem = NpaProblem::build(g, level)?;
    let (_, _, k_a, k_b) = g.shape();
    let rwords = generate_words(&all_letters(g, true), level)?;
    let n = rwords.len();
    let mut var_of: HashMap<Word, usize> = HashMap::new();
    let mut c_entries: Vec<Entry> = Vec::new();
    let mut f_entries: Vec<Vec<Entry>> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let Some(w) = product(&rwords[i], &rwords[j]) else {
                continue;
            };
            if w.is_empty() {
                c_entries.push((0, i, j, 1.0));
                continue;
            }
            let r = representative(&w);
            let k = *var_of.entry(r).or_insert_with(|| {
                f_entries.push(Vec::new());
                f_entries.len() - 1
            });
            // dual form: Gamma = C - sum y_k A_k with A_k = -F_k
            f_entries[k].push((0, i, j, -1.0));
        }
    }
    let mut b = vec![0.0; f_entries.len()];
    let mut constant = 0.0;
    let (n_a, n_b, _, _) = g.shape();
    for x in 0..n_a {
        for y in 0..n_b {
            let mu = g.mu(x, y);
            for a in 0..k_a {
                for bb in 0..k_b {
                    if !g.v(x, y, a, bb) || mu == 0.0 {
                        continue;
                    }
                    for (w, c) in expand(&[Letter::A { x, a }, Letter::B { y, b: bb }], k_a, k_b) {
                        if w.is_empty() {
                            constant += mu * c;
                        } else {
                            let r = representative(&w);
                            let k = *var_of
                                .get(&r)
                                .ok_or_else(|| Error::SolverFailure(format!("objective word {} missing", word_to_string(&r))))?;
                            b[k] += mu * c;
                        }
                    }
                }
            }
        }
    }
    if f_entries.is_empty() {
        // single-outcome games: every moment is fixed
        let mm = RMatrix::from_fn(problem.words.len(), problem.words.len(), |_, _| 1.0);
        return Ok((
            constant,
            NpaCertificate { problem, moment_matrix: mm, primal_objective: 0.0, dual_objective: 0.0, iterations: 0 },
        ));
    }
    let sdp = SdpProblem { block_sizes: vec![n], c: c_entries, a: f_entries, b };
    let sol = solve_sdp(&sdp, SdpOptions { tol, max_iter: 200 })?;
    let gamma_r = &sol.z[0];
    // T maps reduced words to full words
    let rindex: HashMap<&Word, usize> = rwords.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let nf = problem.words.len();
    let mut t = RMatrix::zeros(nf, n);
    for (i, w) in problem.words.iter().enumerate() {
        for (rw, c) in expand(w, k_a, k_b) {
            if let Some(&j) = rindex.get(&rw) {
                t[(i, j)] += c;
            }
        }
    }
    let full = t.matmul(gamma_r).matmul(&t.transpose());
    let value = constant + sol.primal_objective.max(sol.dual_objective);
    let cert = NpaCertificate {
        problem,
        moment_matrix: full,
        primal_objective: constant + sol.primal_objective,
        dual_objective: constant + sol.dual_objective,
        iterations: sol.iterations,
    };
    Ok((value, cert))
}
