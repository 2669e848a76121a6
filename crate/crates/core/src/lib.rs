//! Two-player nonlocal games, their compiled single-prover protocol over
//! pluggable quantum homomorphic encryption backends, and sequential
//! strategies.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: dense complex matrices, Jacobi eigensolver, SVD.
//! * [`games`]: games, correlations, the built-in catalog.
//! * [`values`]: classical, non-signaling, see-saw and NPA values.
//! * [`quantum`]: states, POVMs, instruments, purification, circuits.
//! * [`qhe`]: the encryption interface with an ideal and a Clifford backend.
//! * [`compiled`]: the verifier/prover protocol and its exact evaluation.
//! * [`sequential`]: sequential strategies, strong non-signaling, conversions.
//! * [`blockenc`]: block encodings of contractions and polynomials.
//! * [`cli`]: the command-line front end.

pub mod blockenc;
pub mod cli;
pub mod compiled;
pub mod error;
pub mod games;
pub mod numerics;
pub mod qhe;
pub mod quantum;
pub mod sequential;
pub mod values;

pub use error::{Error, Result};
pub use numerics::{CMatrix, C64};
