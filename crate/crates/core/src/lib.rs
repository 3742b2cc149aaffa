//! Optimal control of continuous families of quantum gates.
//!
//! A fully connected network maps target parameters (and time) to bounded
//! control amplitudes for an n-qubit Hamiltonian with pairwise XX couplings
//! and single-qubit Y/Z drives. Training by stochastic gradient descent
//! minimizes the average gate infidelity over the whole family, optionally
//! together with the gate durations. A gate-decomposition baseline converts
//! compiled circuits into minimal implementation times for speedup ratios.
//!
//! Gradients are exact for the discretized dynamics: the propagator is a
//! product of step exponentials and the reverse pass contracts Fréchet
//! derivatives of each step with the loss cotangent, so analytic gradients
//! match finite differences to machine-level accuracy.

pub mod baseline;
pub mod error;
pub mod hamiltonian;
pub mod hpsearch;
pub mod linalg;
pub mod nn;
pub mod objective;
pub mod propagate;
pub mod rng;
pub mod targets;
pub mod training;

pub use error::{Error, Result};
pub use linalg::CMat;
