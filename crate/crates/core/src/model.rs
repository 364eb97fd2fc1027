//! Domain model: problem parameters, combinatorial arms, loss vectors,
//! batch schedules, and exact switching-regret accounting.
//!
//! A combinatorial arm is a subset of exactly `combo_size` of the
//! `num_base_arms` base arms, encoded as a binary incidence vector. Between
//! consecutive rounds the player pays `switch_cost` per changed base arm,
//! where the change count is half the size of the symmetric difference. The
//! game starts from the empty allocation, so the first action always pays
//! for acquiring all of its arms.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid problem parameters: {0}")]
    InvalidSpec(String),

    #[error("arm has {ones} selected base arms, expected {expected}")]
    WrongArmSize { ones: usize, expected: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("loss value {value} outside [{lo}, {hi}] at coordinate {index}")]
    LossOutOfRange {
        value: f64,
        lo: f64,
        hi: f64,
        index: usize,
    },

    #[error("ledger has no recorded rounds")]
    EmptyLedger,

    #[error("batch length must be positive")]
    ZeroBatch,
}

/// Game parameters: base-arm count, combinatorial arm size, horizon, and
/// per-arm switching cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub num_base_arms: usize,
    pub combo_size: usize,
    pub horizon: usize,
    pub switch_cost: f64,
}

impl ProblemSpec {
    pub fn new(
        num_base_arms: usize,
        combo_size: usize,
        horizon: usize,
        switch_cost: f64,
    ) -> Result<Self, ModelError> {
        if num_base_arms == 0 {
            return Err(ModelError::InvalidSpec("num_base_arms must be >= 1".into()));
        }
        if combo_size == 0 || combo_size > num_base_arms {
            return Err(ModelError::InvalidSpec(format!(
                "combo_size must be in 1..={num_base_arms}, got {combo_size}"
            )));
        }
        if horizon == 0 {
            return Err(ModelError::InvalidSpec("horizon must be >= 1".into()));
        }
        if !(switch_cost >= 0.0) || !switch_cost.is_finite() {
            return Err(ModelError::InvalidSpec(format!(
                "switch_cost must be finite and >= 0, got {switch_cost}"
            )));
        }
        Ok(Self {
            num_base_arms,
            combo_size,
            horizon,
            switch_cost,
        })
    }
}

/// Incidence vector of a combinatorial arm: exactly `combo_size` ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CombinatorialArm {
    bits: Vec<bool>,
}

impl CombinatorialArm {
    pub fn from_bits(bits: Vec<bool>, combo_size: usize) -> Result<Self, ModelError> {
        let ones = bits.iter().filter(|&&b| b).count();
        if ones != combo_size {
            return Err(ModelError::WrongArmSize {
                ones,
                expected: combo_size,
            });
        }
        Ok(Self { bits })
    }

    pub fn from_indices(
        num_base_arms: usize,
        indices: &[usize],
        combo_size: usize,
    ) -> Result<Self, ModelError> {
        let mut bits = vec![false; num_base_arms];
        for &i in indices {
            if i >= num_base_arms {
                return Err(ModelError::DimensionMismatch {
                    expected: num_base_arms,
                    actual: i + 1,
                });
            }
            bits[i] = true;
        }
        Self::from_bits(bits, combo_size)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Indices of the selected base arms, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    pub fn combo_size(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Total loss of this arm under the given per-coordinate losses.
    pub fn dot(&self, values: &[f64]) -> f64 {
        self.ones().map(|i| values[i]).sum()
    }
}

/// Number of base arms changed between two allocations: half the symmetric
/// difference. Against the initial empty allocation (`prev = None`) the
/// whole arm is acquired and the distance is its full size.
pub fn switch_distance(
    arm: &CombinatorialArm,
    prev: Option<&CombinatorialArm>,
) -> Result<f64, ModelError> {
    match prev {
        None => Ok(arm.combo_size() as f64),
        Some(p) => {
            if p.len() != arm.len() {
                return Err(ModelError::DimensionMismatch {
                    expected: arm.len(),
                    actual: p.len(),
                });
            }
            let differing = arm.bits.iter().zip(&p.bits).filter(|(a, b)| a != b).count();
            Ok(differing as f64 / 2.0)
        }
    }
}

/// Per-coordinate losses with inclusive bounds; `[0, 1]` per round or
/// `[0, batch_len]` for batch-accumulated vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector {
    values: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl LossVector {
    pub fn per_round(values: Vec<f64>) -> Result<Self, ModelError> {
        Self::bounded(values, 0.0, 1.0)
    }

    pub fn accumulated(values: Vec<f64>, batch_len: usize) -> Result<Self, ModelError> {
        Self::bounded(values, 0.0, batch_len as f64)
    }

    pub fn bounded(values: Vec<f64>, lo: f64, hi: f64) -> Result<Self, ModelError> {
        for (index, &value) in values.iter().enumerate() {
            if !(value >= lo && value <= hi) {
                return Err(ModelError::LossOutOfRange {
                    value,
                    lo,
                    hi,
                    index,
                });
            }
        }
        Ok(Self { values, lo, hi })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

/// Partition of the horizon into batch lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchSchedule {
    lengths: Vec<usize>,
}

impl BatchSchedule {
    pub fn from_lengths(lengths: Vec<usize>) -> Result<Self, ModelError> {
        if lengths.is_empty() || lengths.contains(&0) {
            return Err(ModelError::ZeroBatch);
        }
        Ok(Self { lengths })
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn num_batches(&self) -> usize {
        self.lengths.len()
    }

    /// Nominal batch length: the common length of all but the last batch.
    pub fn nominal_len(&self) -> usize {
        self.lengths[0]
    }

    pub fn total_rounds(&self) -> usize {
        self.lengths.iter().sum()
    }
}

/// Ceiling with a tolerance nudge so values within 1e-12 above an integer do
/// not get bumped to the next one by rounding noise.
pub(crate) fn ceil_stable(x: f64) -> f64 {
    (x - 1e-12).ceil()
}

/// Floor with the mirrored nudge.
pub(crate) fn floor_stable(x: f64) -> f64 {
    (x + 1e-12).floor()
}

fn uniform_schedule(horizon: usize, batch_len: f64) -> BatchSchedule {
    // Degenerate parameter settings (e.g. zero switch cost) clamp to
    // unbatched play.
    let b = (batch_len.max(1.0) as usize).max(1);
    let full = horizon / b;
    let rem = horizon - full * b;
    let mut lengths = vec![b; full];
    if rem > 0 {
        lengths.push(rem);
    }
    BatchSchedule { lengths }
}

/// Batch schedule with the bandit-feedback theoretical length
/// `B = ceil(lambda^(2/3) K^(-1/3) T^(1/3) I^(-1/3))`.
pub fn batch_schedule_exp2(spec: &ProblemSpec) -> BatchSchedule {
    let b = ceil_stable(
        spec.switch_cost.powf(2.0 / 3.0)
            * (spec.num_base_arms as f64).powf(-1.0 / 3.0)
            * (spec.horizon as f64).powf(1.0 / 3.0)
            * (spec.combo_size as f64).powf(-1.0 / 3.0),
    );
    uniform_schedule(spec.horizon, b)
}

/// Batch schedule with the semi-bandit theoretical length
/// `B = floor((T I)^(1/3) lambda^(2/3) K^(-1/3) + 1)`.
pub fn batch_schedule_broad(spec: &ProblemSpec) -> BatchSchedule {
    let b = floor_stable(
        ((spec.horizon * spec.combo_size) as f64).powf(1.0 / 3.0)
            * spec.switch_cost.powf(2.0 / 3.0)
            * (spec.num_base_arms as f64).powf(-1.0 / 3.0)
            + 1.0,
    );
    uniform_schedule(spec.horizon, b)
}

/// Feedback regimes: either only the played arm's total loss is observed, or
/// the per-coordinate losses of the played base arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackMode {
    Bandit,
    SemiBandit,
}

/// Batch schedule with the experiment-protocol lengths:
/// `B = ceil(3 lambda^(2/3) K^(-1/3) (T I)^(1/3))` under bandit feedback and
/// `B = ceil(3 lambda^(2/3) K^(-1/3) T^(1/3) I^(2/3))` under semi-bandit
/// feedback.
pub fn batch_schedule_experiment(spec: &ProblemSpec, feedback: FeedbackMode) -> BatchSchedule {
    let common = 3.0
        * spec.switch_cost.powf(2.0 / 3.0)
        * (spec.num_base_arms as f64).powf(-1.0 / 3.0)
        * (spec.horizon as f64).powf(1.0 / 3.0);
    let b = match feedback {
        FeedbackMode::Bandit => common * (spec.combo_size as f64).powf(1.0 / 3.0),
        FeedbackMode::SemiBandit => common * (spec.combo_size as f64).powf(2.0 / 3.0),
    };
    uniform_schedule(spec.horizon, ceil_stable(b))
}

/// Fixed-length batches.
pub fn batch_schedule_fixed(
    spec: &ProblemSpec,
    batch_len: usize,
) -> Result<BatchSchedule, ModelError> {
    if batch_len == 0 {
        return Err(ModelError::ZeroBatch);
    }
    Ok(uniform_schedule(spec.horizon, batch_len as f64))
}

/// Running totals of play loss, switching cost, and the per-coordinate
/// cumulative losses needed for the hindsight comparator.
#[derive(Debug, Clone)]
pub struct RegretLedger {
    cum_play_loss: f64,
    cum_switch_cost: f64,
    per_arm_cum_loss: Vec<f64>,
    prev_arm: Option<CombinatorialArm>,
    rounds: usize,
}

impl RegretLedger {
    pub fn new(num_base_arms: usize) -> Self {
        Self {
            cum_play_loss: 0.0,
            cum_switch_cost: 0.0,
            per_arm_cum_loss: vec![0.0; num_base_arms],
            prev_arm: None,
            rounds: 0,
        }
    }

    pub fn cum_play_loss(&self) -> f64 {
        self.cum_play_loss
    }

    pub fn cum_switch_cost(&self) -> f64 {
        self.cum_switch_cost
    }

    pub fn per_arm_cum_loss(&self) -> &[f64] {
        &self.per_arm_cum_loss
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn prev_arm(&self) -> Option<&CombinatorialArm> {
        self.prev_arm.as_ref()
    }

    /// Records one round: adds the played arm's loss, the switching cost
    /// against the previous action, and the full loss vector for the
    /// comparator.
    pub fn record_round(
        &mut self,
        action: &CombinatorialArm,
        loss: &LossVector,
        switch_cost: f64,
    ) -> Result<f64, ModelError> {
        if loss.len() != self.per_arm_cum_loss.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.per_arm_cum_loss.len(),
                actual: loss.len(),
            });
        }
        if action.len() != self.per_arm_cum_loss.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.per_arm_cum_loss.len(),
                actual: action.len(),
            });
        }
        let distance = switch_distance(action, self.prev_arm.as_ref())?;
        self.cum_play_loss += action.dot(loss.values());
        self.cum_switch_cost += switch_cost * distance;
        for (acc, &v) in self.per_arm_cum_loss.iter_mut().zip(loss.values()) {
            *acc += v;
        }
        self.prev_arm = Some(action.clone());
        self.rounds += 1;
        Ok(distance)
    }

    /// The best fixed arm in hindsight and its cumulative loss. Because the
    /// action set is all size-`combo_size` subsets, the minimum decomposes
    /// coordinatewise: pick the `combo_size` smallest cumulative losses,
    /// ties broken by lowest index.
    pub fn hindsight_best(&self, combo_size: usize) -> Result<(CombinatorialArm, f64), ModelError> {
        if self.rounds == 0 {
            return Err(ModelError::EmptyLedger);
        }
        let k = self.per_arm_cum_loss.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            self.per_arm_cum_loss[a]
                .partial_cmp(&self.per_arm_cum_loss[b])
                .unwrap()
                .then(a.cmp(&b))
        });
        let chosen = &order[..combo_size];
        let value = chosen.iter().map(|&i| self.per_arm_cum_loss[i]).sum();
        let arm = CombinatorialArm::from_indices(k, chosen, combo_size)?;
        Ok((arm, value))
    }

    /// Cumulative play loss plus switching cost minus the hindsight-best
    /// comparator.
    pub fn switching_regret(&self, combo_size: usize) -> Result<f64, ModelError> {
        let (_, best) = self.hindsight_best(combo_size)?;
        Ok(self.cum_play_loss + self.cum_switch_cost - best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arm(k: usize, idx: &[usize]) -> CombinatorialArm {
        CombinatorialArm::from_indices(k, idx, idx.len()).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(ProblemSpec::new(10, 3, 100, 1.0).is_ok());
        assert!(ProblemSpec::new(10, 0, 100, 1.0).is_err());
        assert!(ProblemSpec::new(10, 11, 100, 1.0).is_err());
        assert!(ProblemSpec::new(10, 3, 0, 1.0).is_err());
        assert!(ProblemSpec::new(10, 3, 100, -0.5).is_err());
        assert!(ProblemSpec::new(10, 3, 100, f64::NAN).is_err());
    }

    #[test]
    fn switch_distance_examples() {
        let a = arm(3, &[0, 1]);
        assert_eq!(switch_distance(&a, Some(&a)).unwrap(), 0.0);

        // One arm swapped: symmetric difference of size two, halved.
        let b = arm(3, &[0, 2]);
        assert_eq!(switch_distance(&a, Some(&b)).unwrap(), 1.0);

        // First action acquires the whole arm.
        let c = arm(4, &[0, 2]);
        assert_eq!(switch_distance(&c, None).unwrap(), 2.0);

        let short = arm(2, &[0]);
        assert!(matches!(
            switch_distance(&a, Some(&short)),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn record_round_first_action_pays_full_acquisition() {
        let mut ledger = RegretLedger::new(5);
        let a = arm(5, &[0, 1, 2]);
        let loss = LossVector::per_round(vec![0.5; 5]).unwrap();
        ledger.record_round(&a, &loss, 1.0).unwrap();
        assert_eq!(ledger.cum_switch_cost(), 3.0);

        // Repeating the same action adds nothing to the switch cost.
        ledger.record_round(&a, &loss, 1.0).unwrap();
        assert_eq!(ledger.cum_switch_cost(), 3.0);
    }

    #[test]
    fn record_round_zero_loss_leaves_play_loss_unchanged() {
        let mut ledger = RegretLedger::new(4);
        let a = arm(4, &[1, 3]);
        let zero = LossVector::per_round(vec![0.0; 4]).unwrap();
        ledger.record_round(&a, &zero, 2.0).unwrap();
        assert_eq!(ledger.cum_play_loss(), 0.0);
        assert_eq!(ledger.cum_switch_cost(), 4.0);
    }

    #[test]
    fn hindsight_best_matches_hand_case() {
        let mut ledger = RegretLedger::new(4);
        let a = arm(4, &[0, 1]);
        let loss = LossVector::bounded(vec![3.0, 1.0, 2.0, 5.0], 0.0, 5.0).unwrap();
        ledger.record_round(&a, &loss, 0.0).unwrap();
        let (best, value) = ledger.hindsight_best(2).unwrap();
        assert_eq!(best, arm(4, &[1, 2]));
        assert_eq!(value, 3.0);
    }

    #[test]
    fn hindsight_best_brute_force_oracle() {
        // Exhaustive comparison against minimization over all subsets.
        fn subsets(k: usize, i: usize) -> Vec<Vec<usize>> {
            let mut out = Vec::new();
            let mut cur = Vec::new();
            fn rec(
                start: usize,
                k: usize,
                i: usize,
                cur: &mut Vec<usize>,
                out: &mut Vec<Vec<usize>>,
            ) {
                if cur.len() == i {
                    out.push(cur.clone());
                    return;
                }
                for j in start..k {
                    cur.push(j);
                    rec(j + 1, k, i, cur, out);
                    cur.pop();
                }
            }
            rec(0, k, i, &mut cur, &mut out);
            out
        }

        let mut state = 0xdead_beefu64;
        let mut next = move || {
            state = crate::rng::mix64(state);
            crate::rng::unit_open(state)
        };
        for k in 1..=8usize {
            for i in 1..=k {
                let mut ledger = RegretLedger::new(k);
                let losses: Vec<f64> = (0..k).map(|_| next()).collect();
                let play = arm(k, &(0..i).collect::<Vec<_>>());
                let loss = LossVector::per_round(losses.clone()).unwrap();
                ledger.record_round(&play, &loss, 0.0).unwrap();

                let (_, got) = ledger.hindsight_best(i).unwrap();
                let want = subsets(k, i)
                    .iter()
                    .map(|s| s.iter().map(|&j| losses[j]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                assert!((got - want).abs() < 1e-12, "K={k} I={i}");
            }
        }
    }

    #[test]
    fn hindsight_best_ties_and_full_arm() {
        let mut ledger = RegretLedger::new(3);
        let a = arm(3, &[0]);
        let loss = LossVector::per_round(vec![0.25; 3]).unwrap();
        ledger.record_round(&a, &loss, 0.0).unwrap();

        // All equal: lowest indices win.
        let (best, value) = ledger.hindsight_best(2).unwrap();
        assert_eq!(best, arm(3, &[0, 1]));
        assert!((value - 0.5).abs() < 1e-15);

        // I = K: the single feasible arm.
        let (best, value) = ledger.hindsight_best(3).unwrap();
        assert_eq!(best, arm(3, &[0, 1, 2]));
        assert!((value - 0.75).abs() < 1e-15);
    }

    #[test]
    fn switching_regret_examples() {
        // Playing the comparator with zero switch cost gives zero regret.
        let mut ledger = RegretLedger::new(3);
        let best = arm(3, &[0, 1]);
        let loss = LossVector::per_round(vec![0.1, 0.2, 0.9]).unwrap();
        ledger.record_round(&best, &loss, 0.0).unwrap();
        assert!(ledger.switching_regret(2).unwrap().abs() < 1e-15);

        // Same play with unit switch cost leaves only the forced first
        // acquisition.
        let mut ledger = RegretLedger::new(3);
        ledger.record_round(&best, &loss, 1.0).unwrap();
        assert!((ledger.switching_regret(2).unwrap() - 2.0).abs() < 1e-15);

        // Two rounds alternating disjoint arms with equal losses: the play
        // loss matches the comparator, so only 2 * lambda * I remains.
        let mut ledger = RegretLedger::new(4);
        let zeros = LossVector::per_round(vec![0.0; 4]).unwrap();
        ledger.record_round(&arm(4, &[0, 1]), &zeros, 1.0).unwrap();
        ledger.record_round(&arm(4, &[2, 3]), &zeros, 1.0).unwrap();
        assert!((ledger.switching_regret(2).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn empty_ledger_is_rejected() {
        let ledger = RegretLedger::new(3);
        assert_eq!(
            ledger.hindsight_best(1).unwrap_err(),
            ModelError::EmptyLedger
        );
        assert_eq!(
            ledger.switching_regret(1).unwrap_err(),
            ModelError::EmptyLedger
        );
    }

    #[test]
    fn theorem_exp2_schedule_example() {
        let spec = ProblemSpec::new(10, 3, 1000, 1.0).unwrap();
        let schedule = batch_schedule_exp2(&spec);
        // ceil(10 * 10^(-1/3) * 3^(-1/3)) = ceil(3.219) = 4.
        assert_eq!(schedule.nominal_len(), 4);
        assert_eq!(schedule.total_rounds(), 1000);
        // 4 divides 1000, so the empty trailing batch is dropped.
        assert_eq!(schedule.num_batches(), 250);
    }

    #[test]
    fn zero_switch_cost_clamps_to_unbatched_play() {
        let spec = ProblemSpec::new(10, 3, 100, 0.0).unwrap();
        for schedule in [
            batch_schedule_exp2(&spec),
            batch_schedule_broad(&spec),
            batch_schedule_experiment(&spec, FeedbackMode::Bandit),
        ] {
            assert_eq!(schedule.nominal_len(), 1);
            assert_eq!(schedule.num_batches(), 100);
        }
    }

    #[test]
    fn experiment_bandit_schedule_example() {
        let spec = ProblemSpec::new(10, 3, 10_000, 1.0).unwrap();
        let schedule = batch_schedule_experiment(&spec, FeedbackMode::Bandit);
        // ceil(3 * 10^(-1/3) * 30000^(1/3)) = ceil(43.27) = 44.
        assert_eq!(schedule.nominal_len(), 44);
        assert_eq!(schedule.total_rounds(), 10_000);
    }

    #[test]
    fn broad_schedule_formula() {
        let spec = ProblemSpec::new(10, 3, 10_000, 1.0).unwrap();
        let schedule = batch_schedule_broad(&spec);
        // floor((30000)^(1/3) * 10^(-1/3) + 1) = floor(15.42) = 15.
        let expected = (((30_000f64).powf(1.0 / 3.0) * 10f64.powf(-1.0 / 3.0)) + 1.0).floor();
        assert_eq!(schedule.nominal_len(), expected as usize);
    }

    #[test]
    fn loss_vector_bounds_are_enforced() {
        assert!(LossVector::per_round(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(matches!(
            LossVector::per_round(vec![1.2]),
            Err(ModelError::LossOutOfRange { .. })
        ));
        assert!(LossVector::accumulated(vec![3.5], 4).is_ok());
        assert!(LossVector::accumulated(vec![4.5], 4).is_err());
        assert!(LossVector::bounded(vec![f64::NAN], 0.0, 1.0).is_err());
    }
}
