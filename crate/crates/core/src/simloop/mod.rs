//! Closed-loop simulation and invariance verdicts.

pub mod trace;
pub mod verdict;

pub use trace::{run_closed_loop, SimulationTrace, SymbolEvent, TraceFault};
pub use verdict::{check_robust_weak_invariance, check_weak_invariance, sweep_points, Counterexample, InvarianceVerdict};
