//! Plant models, trajectories and observability.

pub mod dynamics;
pub mod fixtures;
pub mod model;
pub mod observe;

pub use dynamics::{AffineMap, Dynamics};
pub use model::{EvaluationDomain, InputSequence, LipschitzBound, OutputMap, PlantModel};
pub use observe::{check_observability, ObservabilityMethod, ObservabilityReport};
