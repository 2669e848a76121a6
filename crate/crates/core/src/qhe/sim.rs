//! Plaintext execution of an [`EvalCircuit`] on `|m> (x) A (x) B`.

use rand::{Rng, RngCore};

use super::{from_bits, to_bits, EvalCircuit};
use crate::error::{Error, Result};
use crate::numerics::{vec_norm, CMatrix, C64};
use crate::quantum::StateVector;

const NEGLIGIBLE: f64 = 1e-15;

fn check_aux(c: &EvalCircuit, len: usize, b_dim: usize) -> Result<()> {
    let want = (1usize << c.aux_qubits) * b_dim.max(1);
    if len != want {
        return Err(Error::DimensionMismatch(format!("auxiliary state has dimension {len}, expected {want}")));
    }
    Ok(())
}

fn run(input: &[bool], c: &EvalCircuit, aux: &[C64], b_dim: usize) -> Result<Vec<C64>> {
    check_aux(c, aux.len(), b_dim)?;
    let block = aux.len();
    let mut state = vec![C64::new(0.0, 0.0); block << c.message_bits];
    let m = from_bits(input);
    state[m * block..(m + 1) * block].copy_from_slice(aux);
    c.circuit(b_dim).apply(&mut state)?;
    Ok(state)
}

/// `(o, rho_B(o))` for every output string of non-negligible weight; the `A` qubits are traced out.
pub(crate) fn branches(
    input: &[bool],
    c: &EvalCircuit,
    aux: &[(f64, Vec<C64>)],
    b_dim: usize,
) -> Result<Vec<(Vec<bool>, CMatrix)>> {
    let b_dim = b_dim.max(1);
    let rows = 1usize << c.aux_qubits;
    let mut acc = vec![CMatrix::zeros(b_dim, b_dim); 1 << c.message_bits];
    for (w, phi) in aux {
        let state = run(input, c, phi, b_dim)?;
        for (o, rho) in acc.iter_mut().enumerate() {
            let slice = &state[o * rows * b_dim..(o + 1) * rows * b_dim];
            for r in 0..rows {
                let v = &slice[r * b_dim..(r + 1) * b_dim];
                for i in 0..b_dim {
                    for j in 0..b_dim {
                        rho[(i, j)] += v[i] * v[j].conj() * *w;
                    }
                }
            }
        }
    }
    Ok(acc
        .into_iter()
        .enumerate()
        .filter(|(_, r)| r.trace().re > NEGLIGIBLE)
        .map(|(o, r)| (to_bits(o, c.message_bits), r))
        .collect())
}

/// Measures the output wires and `A`, returning the output string and the normalised state of `B`.
pub(crate) fn sample(
    input: &[bool],
    c: &EvalCircuit,
    aux: &StateVector,
    b_dim: usize,
    rng: &mut dyn RngCore,
) -> Result<(Vec<bool>, StateVector)> {
    let b_dim = b_dim.max(1);
    let state = run(input, c, aux.amplitudes(), b_dim)?;
    let weights: Vec<f64> = state.chunks(b_dim).map(|v| vec_norm(v).powi(2)).collect();
    let total: f64 = weights.iter().sum();
    let mut r = rng.gen::<f64>() * total;
    let mut pick = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            pick = i;
            break;
        }
        r -= w;
    }
    let o = pick >> c.aux_qubits;
    let v = state[pick * b_dim..(pick + 1) * b_dim].to_vec();
    Ok((to_bits(o, c.message_bits), StateVector::normalized(v)?))
}
