//! Nonlocal games, correlation tensors and the built-in catalog.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A two-player game with question distribution `mu` and predicate `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    pub name: String,
    pub n_a: usize,
    pub n_b: usize,
    pub k_a: usize,
    pub k_b: usize,
    mu: Vec<f64>,
    v: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct GameJson {
    name: String,
    #[serde(rename = "nA")]
    n_a: usize,
    #[serde(rename = "nB")]
    n_b: usize,
    #[serde(rename = "kA")]
    k_a: usize,
    #[serde(rename = "kB")]
    k_b: usize,
    mu: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    v: Vec<Vec<Vec<Vec<u8>>>>,
}

impl Game {
    /// Build a game from a distribution and predicate closure, validating `mu`.
    pub fn new(
        name: impl Into<String>,
        (n_a, n_b, k_a, k_b): (usize, usize, usize, usize),
        mu: impl Fn(usize, usize) -> f64,
        v: impl Fn(usize, usize, usize, usize) -> bool,
    ) -> Result<Self> {
        if n_a == 0 || n_b == 0 || k_a == 0 || k_b == 0 {
            return Err(Error::InvalidGame("empty question or answer set".into()));
        }
        let mut mus = Vec::with_capacity(n_a * n_b);
        let mut vs = Vec::with_capacity(n_a * n_b * k_a * k_b);
        for x in 0..n_a {
            for y in 0..n_b {
                mus.push(mu(x, y));
                for a in 0..k_a {
                    for b in 0..k_b {
                        vs.push(v(x, y, a, b));
                    }
                }
            }
        }
        let g = Self { name: name.into(), n_a, n_b, k_a, k_b, mu: mus, v: vs };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        if let Some(m) = self.mu.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidGame(format!("mu entry {m} is negative or not finite")));
        }
        let total: f64 = self.mu.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidGame(format!("mu sums to {total}")));
        }
        Ok(())
    }

    pub fn mu(&self, x: usize, y: usize) -> f64 {
        self.mu[x * self.n_b + y]
    }

    pub fn v(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        self.v[((x * self.n_b + y) * self.k_a + a) * self.k_b + b]
    }

    /// `(nA, nB, kA, kB)`
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.n_a, self.n_b, self.k_a, self.k_b)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: GameJson = serde_json::from_str(s)?;
        let (n_a, n_b, k_a, k_b) = (raw.n_a, raw.n_b, raw.k_a, raw.k_b);
        let bad = |what: &str| Error::InvalidGame(format!("{what} has the wrong shape"));
        if raw.mu.len() != n_a || raw.mu.iter().any(|r| r.len() != n_b) {
            return Err(bad("mu"));
        }
        if raw.v.len() != n_a
            || raw.v.iter().any(|r| r.len() != n_b || r.iter().any(|s| s.len() != k_a || s.iter().any(|t| t.len() != k_b)))
        {
            return Err(bad("V"));
        }
        if raw.v.iter().flatten().flatten().flatten().any(|&e| e > 1) {
            return Err(Error::InvalidGame("V entries must be 0 or 1".into()));
        }
        Self::new(raw.name, (n_a, n_b, k_a, k_b), |x, y| raw.mu[x][y], |x, y, a, b| raw.v[x][y][a][b] == 1)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let raw = GameJson {
            name: self.name.clone(),
            n_a: self.n_a,
            n_b: self.n_b,
            k_a: self.k_a,
            k_b: self.k_b,
            mu: (0..self.n_a).map(|x| (0..self.n_b).map(|y| self.mu(x, y)).collect()).collect(),
            v: (0..self.n_a)
                .map(|x| {
                    (0..self.n_b)
                        .map(|y| (0..self.k_a).map(|a| (0..self.k_b).map(|b| self.v(x, y, a, b) as u8).collect()).collect())
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string(&raw).expect("game serialization")
    }
}

/// Dense tensor `p(a,b|x,y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub n_a: usize,
    pub n_b: usize,
    pub k_a: usize,
    pub k_b: usize,
    p: Vec<f64>,
}

impl Correlation {
    pub fn zeros((n_a, n_b, k_a, k_b): (usize, usize, usize, usize)) -> Self {
        Self { n_a, n_b, k_a, k_b, p: vec![0.0; n_a * n_b * k_a * k_b] }
    }

    /// Build from a closure, checking positivity and normalisation.
    pub fn from_fn(shape: (usize, usize, usize, usize), f: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let c = Self::from_fn_unchecked(shape, f);
        c.validate(1e-9)?;
        Ok(c)
    }

    /// No normalisation check; used for subnormalized correlations carrying a reject mass.
    pub fn from_fn_unchecked(
        (n_a, n_b, k_a, k_b): (usize, usize, usize, usize),
        f: impl Fn(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut c = Self::zeros((n_a, n_b, k_a, k_b));
        for x in 0..n_a {
            for y in 0..n_b {
                for a in 0..k_a {
                    for b in 0..k_b {
                        c.set(x, y, a, b, f(x, y, a, b));
                    }
                }
            }
        }
        c
    }

    fn idx(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.n_b + y) * self.k_a + a) * self.k_b + b
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.p[self.idx(x, y, a, b)]
    }

    pub fn set(&mut self, x: usize, y: usize, a: usize, b: usize, value: f64) {
        let i = self.idx(x, y, a, b);
        self.p[i] = value;
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.n_a, self.n_b, self.k_a, self.k_b)
    }

    pub fn entries(&self) -> &[f64] {
        &self.p
    }

    /// `sum_{a,b} p(a,b|x,y)`
    pub fn mass(&self, x: usize, y: usize) -> f64 {
        let s = self.idx(x, y, 0, 0);
        self.p[s..s + self.k_a * self.k_b].iter().sum()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if let Some(v) = self.p.iter().find(|v| !v.is_finite() || **v < -tol.max(1e-12)) {
            return Err(Error::InvalidInput(format!("correlation entry {v}")));
        }
        for x in 0..self.n_a {
            for y in 0..self.n_b {
                let m = self.mass(x, y);
                if (m - 1.0).abs() > tol {
                    return Err(Error::InvalidInput(format!("p(.,.|{x},{y}) sums to {m}")));
                }
            }
        }
        Ok(())
    }

    /// Convex combination `alpha p + (1 - alpha) q`.
    pub fn mix(&self, other: &Self, alpha: f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch("correlation shapes differ".into()));
        }
        let mut out = self.clone();
        for (o, q) in out.p.iter_mut().zip(&other.p) {
            *o = alpha * *o + (1.0 - alpha) * q;
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.p.iter().zip(&other.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn alice_marginal(&self, x: usize, y: usize, a: usize) -> f64 {
        (0..self.k_b).map(|b| self.get(x, y, a, b)).sum()
    }

    pub fn bob_marginal(&self, x: usize, y: usize, b: usize) -> f64 {
        (0..self.k_a).map(|a| self.get(x, y, a, b)).sum()
    }
}

/// Maximal deviations from the two non-signaling conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonsignalingReport {
    /// Dependence of Alice's marginal on Bob's question.
    pub bob_to_alice_max_violation: f64,
    /// Dependence of Bob's marginal on Alice's question.
    pub alice_to_bob_max_violation: f64,
}

impl NonsignalingReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.bob_to_alice_max_violation <= tol && self.alice_to_bob_max_violation <= tol
    }
}

pub fn winning_probability(g: &Game, p: &Correlation) -> Result<f64> {
    if g.shape() != p.shape() {
        return Err(Error::DimensionMismatch(format!("game {:?} vs correlation {:?}", g.shape(), p.shape())));
    }
    let mut w = 0.0;
    for x in 0..g.n_a {
        for y in 0..g.n_b {
            let mu = g.mu(x, y);
            if mu == 0.0 {
                continue;
            }
            for a in 0..g.k_a {
                for b in 0..g.k_b {
                    if g.v(x, y, a, b) {
                        w += mu * p.get(x, y, a, b);
                    }
                }
            }
        }
    }
    Ok(w)
}

pub fn check_nonsignaling(p: &Correlation) -> NonsignalingReport {
    let (n_a, n_b, k_a, k_b) = p.shape();
    let mut b2a = 0.0f64;
    for x in 0..n_a {
        for a in 0..k_a {
            for y in 1..n_b {
                b2a = b2a.max((p.alice_marginal(x, y, a) - p.alice_marginal(x, 0, a)).abs());
            }
        }
    }
    let mut a2b = 0.0f64;
    for y in 0..n_b {
        for b in 0..k_b {
            for x in 1..n_a {
                a2b = a2b.max((p.bob_marginal(x, y, b) - p.bob_marginal(0, y, b)).abs());
            }
        }
    }
    NonsignalingReport { bob_to_alice_max_violation: b2a, alice_to_bob_max_violation: a2b }
}

pub fn chsh() -> Game {
    Game::new("chsh", (2, 2, 2, 2), |_, _| 0.25, |x, y, a, b| (a ^ b) == (x & y)).unwrap()
}

/// Bits of Alice's row triple (even parity) for answer `a`.
pub fn magic_row_bits(a: usize) -> [usize; 3] {
    let (b0, b1) = (a & 1, (a >> 1) & 1);
    [b0, b1, b0 ^ b1]
}

/// Bits of Bob's column triple (odd parity) for answer `b`.
pub fn magic_column_bits(b: usize) -> [usize; 3] {
    let (b0, b1) = (b & 1, (b >> 1) & 1);
    [b0, b1, 1 ^ b0 ^ b1]
}

pub fn magic_square() -> Game {
    Game::new("magic-square", (3, 3, 4, 4), |_, _| 1.0 / 9.0, |x, y, a, b| magic_row_bits(a)[y] == magic_column_bits(b)[x])
        .unwrap()
}

/// XOR game with uniform questions: win iff `a xor b = f(x,y)`.
pub fn xor_game(n_a: usize, n_b: usize, f: &[u8]) -> Result<Game> {
    if f.len() != n_a * n_b || f.iter().any(|&t| t > 1) {
        return Err(Error::InvalidGame(format!("xor table needs {} bits", n_a * n_b)));
    }
    let w = 1.0 / (n_a * n_b) as f64;
    let name = format!("xor:{n_a}x{n_b}:{}", f.iter().map(|t| char::from(b'0' + t)).collect::<String>());
    Game::new(name, (n_a, n_b, 2, 2), |_, _| w, |x, y, a, b| (a ^ b) as u8 == f[x * n_b + y])
}

/// Look up a built-in game: `chsh`, `magic-square`, or `xor:<nA>x<nB>:<bits>`.
pub fn catalog(name: &str) -> Result<Game> {
    match name {
        "chsh" => Ok(chsh()),
        "magic-square" => Ok(magic_square()),
        _ => {
            let rest = name.strip_prefix("xor:").ok_or_else(|| Error::UnknownGame(name.into()))?;
            let (dims, bits) = rest.split_once(':').ok_or_else(|| Error::UnknownGame(name.into()))?;
            let (na, nb) = dims.split_once('x').ok_or_else(|| Error::UnknownGame(name.into()))?;
            let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::UnknownGame(name.into()));
            let table: Vec<u8> = bits
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(Error::UnknownGame(name.into())),
                })
                .collect::<Result<_>>()?;
            xor_game(parse(na)?, parse(nb)?, &table)
        }
    }
}

/// Resolve a CLI game argument: an existing JSON file, else a catalog name
/// (a trailing `.json` is stripped so `chsh.json` also resolves).
pub fn load(spec: &str) -> Result<Game> {
    let path = Path::new(spec);
    if path.is_file() {
        return Game::from_json_file(path);
    }
    let stem = spec.strip_suffix(".json").unwrap_or(spec);
    let stem = Path::new(stem).file_name().and_then(|s| s.to_str()).unwrap_or(stem);
    match catalog(stem) {
        Ok(g) => Ok(g),
        Err(_) if spec.ends_with(".json") => {
            Err(Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("game file {spec} not found"))))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chsh_table() {
        let g = chsh();
        assert_eq!(g.mu(1, 0), 0.25);
        assert!(!g.v(1, 1, 0, 0));
        assert!(g.v(1, 1, 0, 1));
    }

    #[test]
    fn uniform_noise_wins_half_of_chsh() {
        let p = Correlation::from_fn((2, 2, 2, 2), |_, _, _, _| 0.25).unwrap();
        assert!((winning_probability(&chsh(), &p).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pr_box_is_nonsignaling() {
        let pr = Correlation::from_fn((2, 2, 2, 2), |x, y, a, b| if (a ^ b) == (x & y) { 0.5 } else { 0.0 }).unwrap();
        let r = check_nonsignaling(&pr);
        assert_eq!(r.bob_to_alice_max_violation, 0.0);
        assert_eq!(r.alice_to_bob_max_violation, 0.0);
        assert_eq!(winning_probability(&chsh(), &pr).unwrap(), 1.0);
    }

    #[test]
    fn signaling_to_bob_detected() {
        let p = Correlation::from_fn((2, 2, 2, 2), |x, _, a, b| if b == x && a == 0 { 1.0 } else { 0.0 }).unwrap();
        let r = check_nonsignaling(&p);
        assert_eq!(r.alice_to_bob_max_violation, 1.0);
        assert_eq!(r.bob_to_alice_max_violation, 0.0);
    }

    #[test]
    fn magic_square_predicate_matches_parity_rules() {
        let g = magic_square();
        for a in 0..4 {
            assert_eq!(magic_row_bits(a).iter().sum::<usize>() % 2, 0);
            assert_eq!(magic_column_bits(a).iter().sum::<usize>() % 2, 1);
        }
        // every (row, column) pair has exactly 8 winning answer pairs out of 16
        for x in 0..3 {
            for y in 0..3 {
                let wins = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).filter(|&(a, b)| g.v(x, y, a, b)).count();
                assert_eq!(wins, 8);
            }
        }
    }

    #[test]
    fn json_round_trip_and_rejections() {
        let g = magic_square();
        assert_eq!(Game::from_json_str(&g.to_json()).unwrap(), g);
        let missing = r#"{"name":"x","nA":1,"nB":1,"kA":1,"kB":1,"mu":[[1.0]]}"#;
        assert!(Game::from_json_str(missing).is_err());
        let negative = r#"{"name":"x","nA":1,"nB":2,"kA":1,"kB":1,"mu":[[1.5,-0.5]],"V":[[[[1]],[[1]]]]}"#;
        assert!(matches!(Game::from_json_str(negative), Err(Error::InvalidGame(_))));
        let unnormalized = r#"{"name":"x","nA":1,"nB":1,"kA":1,"kB":1,"mu":[[0.9]],"V":[[[[1]]]]}"#;
        assert!(matches!(Game::from_json_str(unnormalized), Err(Error::InvalidGame(_))));
    }

    #[test]
    fn catalog_names() {
        assert_eq!(catalog("chsh").unwrap(), chsh());
        assert_eq!(catalog("xor:2x2:0001").unwrap().v(1, 1, 0, 1), chsh().v(1, 1, 0, 1));
        assert!(matches!(catalog("tetris"), Err(Error::UnknownGame(_))));
        assert!(catalog("xor:2x2:01").is_err());
    }

    fn arb_corr() -> impl Strategy<Value = Correlation> {
        proptest::collection::vec(0.01f64..1.0, 16).prop_map(|w| {
            Correlation::from_fn_unchecked((2, 2, 2, 2), |x, y, a, b| {
                let base = (x * 2 + y) * 4;
                w[base + a * 2 + b] / w[base..base + 4].iter().sum::<f64>()
            })
        })
    }

    proptest! {
        #[test]
        fn winning_probability_is_affine(p in arb_corr(), q in arb_corr(), alpha in 0.0f64..1.0) {
            let g = chsh();
            let mixed = winning_probability(&g, &p.mix(&q, alpha).unwrap()).unwrap();
            let split = alpha * winning_probability(&g, &p).unwrap() + (1.0 - alpha) * winning_probability(&g, &q).unwrap();
            prop_assert!((mixed - split).abs() < 1e-12);
        }
    }
}
