//! Invariance tuples and entropy estimates.

pub mod brute;
pub mod construct;
pub mod estimate;
pub mod refine;
pub mod tuple;

pub use brute::{necessity_bruteforce, BruteForceLimits, BruteForceVerdict, ExhaustionCertificate, PartitionCell};
pub use construct::{build_feasible_tuple, build_feasible_tuple_with, construct, ConstructionParams, Construction};
pub use estimate::{
    estimate_rwtfe, estimate_wtfe, volume_bound_n, volume_rate, CandidateOutcome, EntropyEstimate, EstimateBudget,
    LowerBound, LowerBoundSource,
};
pub use refine::{
    fekete_diagnostics, refinement_covers, subadditivity_violations, FeketeDiagnostics, RefinementDiagnostics,
};
pub use tuple::InvarianceTuple;
