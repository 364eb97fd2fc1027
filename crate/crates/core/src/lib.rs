//! Deterministic simulation core for adversarial combinatorial bandits with
//! per-arm switching costs.
//!
//! The crate provides the domain model (arms, losses, switching metric,
//! batch schedules, regret accounting), the multi-scale random-walk noise
//! tree, the lower-bound trace adversaries, and the batched learners for
//! bandit and semi-bandit feedback. Everything is seedable: a loss sequence
//! is a pure function of its configuration and seed, and policies draw from
//! caller-supplied generators, so replicate runs are bit-reproducible.

// Range checks are written in negated form (`!(x > 0.0)`) so NaN inputs
// fall into the rejection branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod bandit;
pub mod hull;
pub mod linalg;
pub mod model;
pub mod policy;
pub mod rng;
pub mod semibandit;
pub mod tree;

pub use adversary::{
    extract_feedback, Adversary, AdversaryConfig, AdversaryError, AdversaryKind, Feedback,
};
pub use model::{
    batch_schedule_broad, batch_schedule_exp2, batch_schedule_experiment, batch_schedule_fixed,
    switch_distance, BatchSchedule, CombinatorialArm, FeedbackMode, LossVector, ModelError,
    ProblemSpec, RegretLedger,
};
pub use policy::{Policy, PolicyError};
