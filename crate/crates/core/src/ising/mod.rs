//! Exact finite-lattice Ising machinery on `Λ_L = {-L, ..., L}`.
//!
//! Conventions: the Gibbs weight of a configuration is `exp(-E)` with
//! `E(σ) = -Σ_A J(A) σ_A` (inverse temperature absorbed into `J`), and
//! correlation utilities return 0 whenever a requested site lies outside
//! the lattice.

mod coupling;
mod enumerate;
mod lattice;
mod nearest;
mod transfer;

pub use coupling::{pair_interaction, InteractionMap, PairCoupling};
pub use enumerate::{
    energy, expectation_exact, expectation_exact_with, partition_exact, partition_exact_with, ExactOptions,
    GibbsTable, LogValue, DEFAULT_MAX_SITES,
};
pub use lattice::{Lattice, SpinConfiguration};
pub use nearest::{nn_correlation_closed, nn_flip_probability, nn_partition_closed, sample_nn_chain};
pub use transfer::{transfer_matrix_correlation, TransferChain, DEFAULT_MAX_RANGE};

pub(crate) use enumerate::Enumerator;
pub(crate) use nearest::{fill_nn_chain, tanh_power};

use serde::Serialize;

/// Serializable record of an exact computation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactRecord {
    pub operation: String,
    pub inputs: serde_json::Value,
    pub value: f64,
    pub log_value: Option<f64>,
}

/// Anything that can answer two-point queries `<σ_i σ_j>` on a fixed
/// lattice, returning 0 when either site is outside it.
pub trait TwoPoint {
    fn lattice(&self) -> Lattice;
    fn two_point(&self, i: i64, j: i64) -> f64;
}
