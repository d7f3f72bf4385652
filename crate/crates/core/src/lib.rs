//! Simulation and verification toolkit for the one-dimensional long-range
//! Ising model and its continuum limit, the Poisson-driven jump process
//! `X(t) = B (-1)^{N(t)}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`ising`]: finite lattices, ferromagnetic couplings, exact enumeration,
//!   nearest-neighbour closed forms, an exact nearest-neighbour sampler and a
//!   transfer-matrix engine for finite-range pair couplings.
//! * [`inequalities`]: executable GKS / Thompson correlation inequalities,
//!   the recursive two-point bound and the correlation-sum bound, plus a
//!   randomized suite runner.
//! * [`kernels`]: even, nonnegative, integrable interaction functions `W`.
//! * [`jump`]: exact path sampling, path integrals and Monte Carlo
//!   estimators for partition functions and the magnetic susceptibility.
//! * [`continuum`]: lattice-spacing scaling maps and convergence studies
//!   from the discrete chain to the jump process.
//!
//! All Monte Carlo work is split into shards with independent counter-based
//! random streams (see [`exec`]); results are bit-identical for a fixed
//! `(seed, shards)` pair whether shards run on the rayon pool or sequentially.

pub mod continuum;
pub mod error;
pub mod exec;
pub mod inequalities;
pub mod ising;
pub mod jump;
pub mod kernels;
pub mod quadrature;
pub mod stats;

pub use error::{Error, Result};
pub use exec::{Execution, McConfig};
pub use kernels::Kernel;
pub use stats::Estimate;
