//! Binary paint shop instances mapped to Ising graphs and attacked with
//! classical heuristics, QAOA and recursive QAOA on dense and
//! matrix-product-state simulators.

pub mod bpsp;
pub mod circuit;
pub mod error;
pub mod exec;
pub mod ising;
pub mod mps;
pub mod qaoa;
pub mod rng;
pub mod rqaoa;
pub mod statevector;

pub use bpsp::{colour_changes, greedy_solve, recursive_greedy_solve, BpspInstance, Colour, Colouring};
pub use error::{Error, Result};
pub use ising::{map_bpsp, Energy, IsingGraph, Spin, SpinConfig};
pub use qaoa::{fixed_params, EvalMode, ParamSource, QaoaParams};
