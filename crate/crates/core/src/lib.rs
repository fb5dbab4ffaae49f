//! Asynchronous averaging dynamics on graphs.
//!
//! Two processes are simulated and analysed here. In the *Node Model* a
//! uniformly random node pulls `k` distinct random neighbours and moves to
//! `alpha * own + (1 - alpha) * mean(pulled)`. In the *Edge Model* a random
//! directed edge `(u, v)` is chosen and `u` moves to
//! `alpha * own + (1 - alpha) * v`.
//!
//! Besides the forward simulation the crate carries the machinery used to
//! reason about the common limit value `F`:
//!
//! * [`duality`]: the time-reversed diffusion of unit commodities and the
//!   correlated random walks driven by the same selection events,
//! * [`qchain`]: the Markov chain of an ordered pair of correlated walks with
//!   its three-valued stationary distribution on regular graphs,
//! * [`analysis`]: variance predictions for `F`, Monte Carlo estimators and
//!   convergence-time scaling experiments.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel trial drivers live in the `avgdyn` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod duality;
pub mod dynamics;
mod error;
pub mod graph;
pub mod qchain;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{Family, Graph};
