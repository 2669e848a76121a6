//! Qubit circuits acting on `(C^2)^{(x) n} (x) C^rest`; wire 0 is the most significant qubit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{is_unitary, paulis, CMatrix, C64, ZERO};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    T(usize),
    Cnot {
        control: usize,
        target: usize,
    },
    Cz(usize, usize),
    Swap(usize, usize),
    /// Arbitrary unitary on the listed wires (first wire most significant).
    Unitary {
        wires: Vec<usize>,
        matrix: CMatrix,
    },
}

impl Gate {
    pub fn wires(&self) -> Vec<usize> {
        match self {
            Gate::H(w) | Gate::S(w) | Gate::Sdg(w) | Gate::X(w) | Gate::Y(w) | Gate::Z(w) | Gate::T(w) => vec![*w],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Cz(a, b) | Gate::Swap(a, b) => vec![*a, *b],
            Gate::Unitary { wires, .. } => wires.clone(),
        }
    }

    pub fn is_clifford(&self) -> bool {
        !matches!(self, Gate::T(_) | Gate::Unitary { .. })
    }

    pub fn matrix(&self) -> CMatrix {
        let c = |re: f64, im: f64| C64::new(re, im);
        match self {
            Gate::H(_) => paulis::h(),
            Gate::S(_) => CMatrix::from_vec(2, 2, vec![c(1.0, 0.0), ZERO, ZERO, c(0.0, 1.0)]).unwrap(),
            Gate::Sdg(_) => CMatrix::from_vec(2, 2, vec![c(1.0, 0.0), ZERO, ZERO, c(0.0, -1.0)]).unwrap(),
            Gate::X(_) => paulis::x(),
            Gate::Y(_) => paulis::y(),
            Gate::Z(_) => paulis::z(),
            Gate::T(_) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                CMatrix::from_vec(2, 2, vec![c(1.0, 0.0), ZERO, ZERO, c(s, s)]).unwrap()
            }
            Gate::Cnot { .. } => CMatrix::from_fn(4, 4, |i, j| {
                let target = if i < 2 { i } else { i ^ 1 };
                if target == j {
                    c(1.0, 0.0)
                } else {
                    ZERO
                }
            }),
            Gate::Cz(..) => CMatrix::diag_real(&[1.0, 1.0, 1.0, -1.0]),
            Gate::Swap(..) => CMatrix::from_fn(4, 4, |i, j| {
                let swapped = ((i & 1) << 1) | (i >> 1);
                if swapped == j {
                    c(1.0, 0.0)
                } else {
                    ZERO
                }
            }),
            Gate::Unitary { matrix, .. } => matrix.clone(),
        }
    }
}

/// Gate list over `qubits` wires with a trailing auxiliary system of dimension `rest`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub qubits: usize,
    pub rest: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize, rest: usize, gates: Vec<Gate>) -> Result<Self> {
        let c = Self { qubits, rest: rest.max(1), gates };
        c.validate()?;
        Ok(c)
    }

    pub fn identity(qubits: usize, rest: usize) -> Self {
        Self { qubits, rest: rest.max(1), gates: Vec::new() }
    }

    fn validate(&self) -> Result<()> {
        for g in &self.gates {
            let w = g.wires();
            if w.iter().any(|&q| q >= self.qubits) {
                return Err(Error::InvalidInput(format!("gate {g:?} touches a wire outside 0..{}", self.qubits)));
            }
            let mut sorted = w.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != w.len() {
                return Err(Error::InvalidInput(format!("gate {g:?} repeats a wire")));
            }
            if let Gate::Unitary { matrix, wires } = g {
                if matrix.rows() != 1 << wires.len() || !is_unitary(matrix, 1e-9) {
                    return Err(Error::InvalidInput("custom gate is not a unitary of matching size".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        (1usize << self.qubits) * self.rest
    }

    pub fn is_clifford(&self) -> bool {
        self.gates.iter().all(Gate::is_clifford)
    }

    /// Apply in place to a vector of length `dim()`.
    pub fn apply(&self, state: &mut [C64]) -> Result<()> {
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("state length {} vs circuit dim {}", state.len(), self.dim())));
        }
        for g in &self.gates {
            apply_gate(state, self.qubits, self.rest, &g.wires(), &g.matrix());
        }
        Ok(())
    }

    /// The full unitary, built column by column.
    pub fn unitary(&self) -> CMatrix {
        let d = self.dim();
        let mut cols = Vec::with_capacity(d);
        for k in 0..d {
            let mut v = vec![ZERO; d];
            v[k] = C64::new(1.0, 0.0);
            self.apply(&mut v).expect("dimension checked");
            cols.push(v);
        }
        CMatrix::from_columns(d, &cols)
    }
}

fn apply_gate(state: &mut [C64], qubits: usize, rest: usize, wires: &[usize], u: &CMatrix) {
    let k = wires.len();
    let shifts: Vec<usize> = wires.iter().map(|&w| qubits - 1 - w).collect();
    let mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
    let sub = 1usize << k;
    let mut buf = vec![ZERO; sub];
    let mut idx = vec![0usize; sub];
    for base in 0..(1usize << qubits) {
        if base & mask != 0 {
            continue;
        }
        for (j, slot) in idx.iter_mut().enumerate() {
            let mut q = base;
            for (bit, &s) in shifts.iter().enumerate() {
                if (j >> (k - 1 - bit)) & 1 == 1 {
                    q |= 1 << s;
                }
            }
            *slot = q;
        }
        for r in 0..rest {
            for j in 0..sub {
                buf[j] = state[idx[j] * rest + r];
            }
            for i in 0..sub {
                let mut acc = ZERO;
                for j in 0..sub {
                    acc += u[(i, j)] * buf[j];
                }
                state[idx[i] * rest + r] = acc;
            }
        }
    }
}
