//! Statevectors, density operators, POVMs, instruments, purification and qubit circuits.

pub mod circuit;
mod measure;
mod purify;
mod state;

pub use circuit::{Circuit, Gate};
pub use measure::{apply_instrument, measure, outcome_distribution, sample_index, validate_povm, Instrument, Povm};
pub use purify::{purify, purify_amplitudes, uhlmann_residual, uhlmann_unitary, uhlmann_unitary_with_tol};
pub use state::{DensityOperator, StateVector};
