//! Certified images, the feasibility constraints and steering.

pub mod constraint;
pub mod image;
pub mod observed;
pub mod steer;

pub use constraint::{verify_constraint_c, verify_constraint_rc, ConstraintReport};
pub use image::{certify, image_overapprox, k_margin, ReachCertificate, DEFAULT_DELTA_K};
pub use observed::ObservedMap;
pub use steer::{
    robust_ball, steer_ball, steering_separation, synthesize_steering, SeparationCertificate, Steerer, Steering,
    SteeringOptions,
};
