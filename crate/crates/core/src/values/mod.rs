//! Classical, non-signaling, see-saw and NPA values of a game.

mod classical;
pub mod lp;
pub mod npa;
pub mod sdp;
mod strategy;

pub use classical::{classical_value, nonsignaling_value};
pub use npa::{canonicalize_word, npa_upper_bound, Letter, NpaCertificate, NpaProblem, Word};
pub use sdp::{solve_sdp, SdpOptions, SdpProblem, SdpSolution};
pub use strategy::{ClassicalStrategy, CommutingStrategy, QuantumStrategy};
pub mod seesaw;
pub use seesaw::{seesaw_lower_bound, SeesawResult};
