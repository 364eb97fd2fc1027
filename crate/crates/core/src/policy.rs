//! Common interface for batched learners.
//!
//! The harness drives one `select` per batch, replays the chosen arm for the
//! whole batch, and delivers the accumulated feedback through one `observe`.

use crate::adversary::Feedback;
use crate::model::{CombinatorialArm, FeedbackMode};
use rand::RngCore;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy misconfigured: {0}")]
    Misconfigured(String),

    #[error("action set too large to enumerate: C({k}, {i}) > {limit}")]
    ActionSetTooLarge { k: usize, i: usize, limit: u128 },

    #[error("loss estimator is not finite: {0}")]
    EstimatorNotFinite(String),

    #[error("played arm has zero sampling probability")]
    ZeroProbabilityPlay,

    #[error("policy requires {required:?} feedback but received {got:?}")]
    FeedbackMismatch {
        required: FeedbackMode,
        got: FeedbackMode,
    },

    #[error("observe called before select")]
    ObserveBeforeSelect,

    #[error("dual root-finder failed: {0}")]
    SolverFailure(String),

    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

pub trait Policy: Send {
    /// Short identifier used in output records.
    fn label(&self) -> &'static str;

    /// The feedback the policy needs. A policy needing only bandit feedback
    /// also runs under semi-bandit observations (it reads the total).
    fn required_feedback(&self) -> FeedbackMode;

    /// Chooses the arm to play for the next batch.
    fn select(&mut self, rng: &mut dyn RngCore) -> Result<CombinatorialArm, PolicyError>;

    /// Consumes the batch feedback for the previously selected arm.
    fn observe(
        &mut self,
        played: &CombinatorialArm,
        feedback: &Feedback,
    ) -> Result<(), PolicyError>;

    /// One-line parameter summary for run metadata.
    fn metadata(&self) -> String;
}

/// Uniform f64 in [0, 1) from a dyn RNG.
#[inline]
pub(crate) fn uniform_draw(rng: &mut dyn RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Samples an index from an unnormalized weight vector.
pub(crate) fn sample_index(weights: &[f64], rng: &mut dyn RngCore) -> usize {
    let total: f64 = weights.iter().sum();
    let target = uniform_draw(rng) * total;
    let mut acc = 0.0;
    for (idx, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return idx;
        }
    }
    weights.len() - 1
}
