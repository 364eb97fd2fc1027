//! Oblivious loss-sequence generators.
//!
//! Two lower-bound trace constructions share the multi-scale walk from
//! [`crate::tree`]: the identical-noise sequence (one walk drives every
//! coordinate, and a hidden best subset sits lower by a margin `epsilon`
//! before clipping) and the diverse-noise sequence (each coordinate gets an
//! independent walk). A stochastically-constrained Bernoulli adversary
//! alternates good and bad phases with geometrically growing lengths, and a
//! replay adversary serves losses from a CSV file.
//!
//! Every generator is a pure function of `(config, seed, round)`; repeated
//! evaluation is bit-identical and independent of query order.

use crate::model::{CombinatorialArm, FeedbackMode, LossVector, ModelError, ProblemSpec};
use crate::rng;
use crate::tree::Walk;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("invalid adversary configuration: {0}")]
    InvalidConfig(String),

    #[error("margin epsilon = {0} >= 1/2 after scaling; losses would saturate")]
    EpsilonTooLarge(f64),

    #[error("round {t} outside 1..={horizon}")]
    RoundOutOfRange { t: usize, horizon: usize },

    #[error("phase horizon overflow: round {0} beyond supported phase table")]
    PhaseOverflow(usize),

    #[error("replay file {path}: {reason}")]
    Replay { path: PathBuf, reason: String },

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// What the player observes after a pull.
#[derive(Debug, Clone, PartialEq)]
pub enum Feedback {
    /// Total loss of the played arm.
    Bandit { total: f64 },
    /// Per-coordinate losses of the played base arms, zero elsewhere.
    SemiBandit { observed: Vec<f64> },
}

impl Feedback {
    pub fn total(&self) -> f64 {
        match self {
            Feedback::Bandit { total } => *total,
            Feedback::SemiBandit { observed } => observed.iter().sum(),
        }
    }

    pub fn mode(&self) -> FeedbackMode {
        match self {
            Feedback::Bandit { .. } => FeedbackMode::Bandit,
            Feedback::SemiBandit { .. } => FeedbackMode::SemiBandit,
        }
    }
}

/// Restricts a loss vector to what the configured feedback mode reveals.
pub fn extract_feedback(
    action: &CombinatorialArm,
    loss: &LossVector,
    mode: FeedbackMode,
) -> Result<Feedback, ModelError> {
    if action.len() != loss.len() {
        return Err(ModelError::DimensionMismatch {
            expected: action.len(),
            actual: loss.len(),
        });
    }
    match mode {
        FeedbackMode::Bandit => Ok(Feedback::Bandit {
            total: action.dot(loss.values()),
        }),
        FeedbackMode::SemiBandit => {
            let observed = loss
                .values()
                .iter()
                .enumerate()
                .map(|(i, &v)| if action.contains(i) { v } else { 0.0 })
                .collect();
            Ok(Feedback::SemiBandit { observed })
        }
    }
}

/// An oblivious loss sequence over rounds `1..=horizon`.
pub trait Adversary: Send + Sync {
    fn round_loss(&self, t: usize) -> Result<LossVector, AdversaryError>;
    fn horizon(&self) -> usize;
    fn label(&self) -> &'static str;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryKind {
    Cin,
    Cdn,
    Sc,
    Replay,
}

impl AdversaryKind {
    pub fn label(&self) -> &'static str {
        match self {
            AdversaryKind::Cin => "cin",
            AdversaryKind::Cdn => "cdn",
            AdversaryKind::Sc => "sc",
            AdversaryKind::Replay => "replay",
        }
    }
}

/// Configuration for one adversary instance. `scale` multiplies the margin
/// and noise level (1 for the theoretical values, 10 for the experiment
/// protocol); `chi` fixes the hidden best subset, drawn uniformly from the
/// run seed when absent.
#[derive(Debug, Clone)]
pub struct AdversaryConfig {
    pub kind: AdversaryKind,
    pub spec: ProblemSpec,
    pub scale: f64,
    pub alpha_check: f64,
    pub seed: u64,
    pub chi: Option<CombinatorialArm>,
    pub replay_path: Option<PathBuf>,
}

impl AdversaryConfig {
    pub fn new(kind: AdversaryKind, spec: ProblemSpec, seed: u64) -> Self {
        Self {
            kind,
            spec,
            scale: 1.0,
            alpha_check: 0.01,
            seed,
            chi: None,
            replay_path: None,
        }
    }

    pub fn validate(&self) -> Result<(), AdversaryError> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(AdversaryError::InvalidConfig(format!(
                "scale must be positive and finite, got {}",
                self.scale
            )));
        }
        if let Some(chi) = &self.chi {
            if chi.len() != self.spec.num_base_arms || chi.combo_size() != self.spec.combo_size {
                return Err(AdversaryError::InvalidConfig(
                    "chi does not match the problem dimensions".into(),
                ));
            }
        }
        if self.kind == AdversaryKind::Sc {
            if !(self.alpha_check > 0.0) {
                return Err(AdversaryError::InvalidConfig(
                    "alpha_check must be positive".into(),
                ));
            }
            if self.alpha_check * self.spec.switch_cost > 1.0 {
                return Err(AdversaryError::InvalidConfig(format!(
                    "alpha_check * switch_cost = {} > 1; Bernoulli means leave [0, 1]",
                    self.alpha_check * self.spec.switch_cost
                )));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn Adversary>, AdversaryError> {
        self.validate()?;
        match self.kind {
            AdversaryKind::Cin => Ok(Box::new(CinAdversary::new(self)?)),
            AdversaryKind::Cdn => Ok(Box::new(CdnAdversary::new(self)?)),
            AdversaryKind::Sc => Ok(Box::new(ScAdversary::new(self)?)),
            AdversaryKind::Replay => {
                let path = self.replay_path.as_ref().ok_or_else(|| {
                    AdversaryError::InvalidConfig("replay adversary needs replay_path".into())
                })?;
                Ok(Box::new(ReplayAdversary::from_path(
                    path,
                    self.spec.num_base_arms,
                )?))
            }
        }
    }
}

/// Uniformly random size-`combo_size` subset derived from the seed.
pub fn draw_chi(spec: &ProblemSpec, seed: u64) -> CombinatorialArm {
    let k = spec.num_base_arms;
    let mut pool: Vec<usize> = (0..k).collect();
    for j in 0..spec.combo_size {
        let word = rng::derive(seed, rng::stream::CHI_DRAW, j as u64, 0);
        let offset = rng::bounded(word, (k - j) as u64) as usize;
        pool.swap(j, j + offset);
    }
    let mut chosen = pool[..spec.combo_size].to_vec();
    chosen.sort_unstable();
    CombinatorialArm::from_indices(k, &chosen, spec.combo_size)
        .expect("subset construction is in range")
}

fn log2_horizon(spec: &ProblemSpec) -> Result<f64, AdversaryError> {
    if spec.horizon < 2 {
        return Err(AdversaryError::InvalidConfig(
            "lower-bound traces need horizon >= 2".into(),
        ));
    }
    Ok((spec.horizon as f64).log2())
}

/// Margin and noise level of the identical-noise sequence:
/// `epsilon = scale * (lambda K)^(1/3) (I T)^(-1/3) / (9 log2 T)` and
/// `sigma = scale / (6 sqrt(log2 T * log2(4 T (lambda + epsilon) / epsilon)))`.
pub fn cin_parameters(spec: &ProblemSpec, scale: f64) -> Result<(f64, f64), AdversaryError> {
    let log2t = log2_horizon(spec)?;
    if !(spec.switch_cost > 0.0) {
        return Err(AdversaryError::InvalidConfig(
            "identical-noise trace needs a positive switch cost (sigma is undefined at epsilon = 0)"
                .into(),
        ));
    }
    let base = (spec.switch_cost * spec.num_base_arms as f64).powf(1.0 / 3.0)
        * ((spec.combo_size * spec.horizon) as f64).powf(-1.0 / 3.0)
        / (9.0 * log2t);
    let epsilon = scale * base;
    if epsilon >= 0.5 {
        return Err(AdversaryError::EpsilonTooLarge(epsilon));
    }
    let inner = (4.0 * spec.horizon as f64 * (spec.switch_cost + epsilon) / epsilon).log2();
    let sigma = scale / (6.0 * (log2t * inner).sqrt());
    Ok((epsilon, sigma))
}

/// Margin and noise level of the diverse-noise sequence:
/// `epsilon = scale * (lambda K)^(1/3) I^(-2/3) T^(-1/3) / (9 log2 T)` and
/// `sigma = scale / (9 log2 T)`.
pub fn cdn_parameters(spec: &ProblemSpec, scale: f64) -> Result<(f64, f64), AdversaryError> {
    let log2t = log2_horizon(spec)?;
    let epsilon = scale
        * (spec.switch_cost * spec.num_base_arms as f64).powf(1.0 / 3.0)
        * (spec.combo_size as f64).powf(-2.0 / 3.0)
        * (spec.horizon as f64).powf(-1.0 / 3.0)
        / (9.0 * log2t);
    if epsilon >= 0.5 {
        return Err(AdversaryError::EpsilonTooLarge(epsilon));
    }
    let sigma = scale / (9.0 * log2t);
    Ok((epsilon, sigma))
}

#[inline]
fn clip(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Identical-noise lower-bound trace: one shared walk, hidden best subset
/// lower by `epsilon` before clipping.
pub struct CinAdversary {
    spec: ProblemSpec,
    chi: CombinatorialArm,
    epsilon: f64,
    walk: Walk,
}

impl CinAdversary {
    pub fn new(config: &AdversaryConfig) -> Result<Self, AdversaryError> {
        config.validate()?;
        let (epsilon, sigma) = cin_parameters(&config.spec, config.scale)?;
        let chi = config
            .chi
            .clone()
            .unwrap_or_else(|| draw_chi(&config.spec, config.seed));
        Ok(Self {
            spec: config.spec,
            chi,
            epsilon,
            walk: Walk::shared(config.seed, sigma, config.spec.horizon),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma(&self) -> f64 {
        self.walk.sigma()
    }

    pub fn chi(&self) -> &CombinatorialArm {
        &self.chi
    }

    pub fn walk(&self) -> &Walk {
        &self.walk
    }

    fn check_round(&self, t: usize) -> Result<(), AdversaryError> {
        if t == 0 || t > self.spec.horizon {
            return Err(AdversaryError::RoundOutOfRange {
                t,
                horizon: self.spec.horizon,
            });
        }
        Ok(())
    }

    /// Pre-clip loss values at round `t`.
    pub fn pre_clip_loss(&self, t: usize) -> Result<Vec<f64>, AdversaryError> {
        self.check_round(t)?;
        let w = self.walk.value(t);
        Ok((0..self.spec.num_base_arms)
            .map(|x| {
                w + 0.5
                    - if self.chi.contains(x) {
                        self.epsilon
                    } else {
                        0.0
                    }
            })
            .collect())
    }
}

impl Adversary for CinAdversary {
    fn round_loss(&self, t: usize) -> Result<LossVector, AdversaryError> {
        let values = self.pre_clip_loss(t)?.into_iter().map(clip).collect();
        Ok(LossVector::per_round(values)?)
    }

    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn label(&self) -> &'static str {
        "cin"
    }
}

/// Diverse-noise lower-bound trace: independent walk per coordinate.
pub struct CdnAdversary {
    spec: ProblemSpec,
    chi: CombinatorialArm,
    epsilon: f64,
    walks: Vec<Walk>,
}

impl CdnAdversary {
    pub fn new(config: &AdversaryConfig) -> Result<Self, AdversaryError> {
        config.validate()?;
        let (epsilon, sigma) = cdn_parameters(&config.spec, config.scale)?;
        let chi = config
            .chi
            .clone()
            .unwrap_or_else(|| draw_chi(&config.spec, config.seed));
        let walks = (0..config.spec.num_base_arms)
            .map(|arm| Walk::per_arm(config.seed, sigma, config.spec.horizon, arm))
            .collect();
        Ok(Self {
            spec: config.spec,
            chi,
            epsilon,
            walks,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma(&self) -> f64 {
        self.walks[0].sigma()
    }

    pub fn chi(&self) -> &CombinatorialArm {
        &self.chi
    }

    pub fn arm_walk(&self, arm: usize) -> &Walk {
        &self.walks[arm]
    }

    fn check_round(&self, t: usize) -> Result<(), AdversaryError> {
        if t == 0 || t > self.spec.horizon {
            return Err(AdversaryError::RoundOutOfRange {
                t,
                horizon: self.spec.horizon,
            });
        }
        Ok(())
    }

    pub fn pre_clip_loss(&self, t: usize) -> Result<Vec<f64>, AdversaryError> {
        self.check_round(t)?;
        Ok((0..self.spec.num_base_arms)
            .map(|x| {
                self.walks[x].value(t) + 0.5
                    - if self.chi.contains(x) {
                        self.epsilon
                    } else {
                        0.0
                    }
            })
            .collect())
    }
}

impl Adversary for CdnAdversary {
    fn round_loss(&self, t: usize) -> Result<LossVector, AdversaryError> {
        let values = self.pre_clip_loss(t)?.into_iter().map(clip).collect();
        Ok(LossVector::per_round(values)?)
    }

    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn label(&self) -> &'static str {
        "cdn"
    }
}

/// Exact phase length `floor(1.6^i) = floor(8^i / 5^i)` computed in integer
/// arithmetic; `8^i` fits u128 up to `i = 42`, far beyond any usable
/// horizon (the cumulative length at 42 already exceeds 1e9 rounds).
fn sc_phase_len(i: u32) -> Option<u128> {
    if i > 42 {
        return None;
    }
    Some(8u128.pow(i) / 5u128.pow(i))
}

/// Stochastically-constrained Bernoulli adversary with geometrically
/// growing alternating phases.
pub struct ScAdversary {
    spec: ProblemSpec,
    alpha: f64,
    seed: u64,
    /// End round (inclusive) of each phase, 1-based; `boundaries[p]` is the
    /// last round of phase `p + 1`.
    boundaries: Vec<usize>,
}

impl ScAdversary {
    pub fn new(config: &AdversaryConfig) -> Result<Self, AdversaryError> {
        config.validate()?;
        let mut boundaries = Vec::new();
        let mut cum: u128 = 0;
        let mut i = 1u32;
        while cum < config.spec.horizon as u128 {
            let len = sc_phase_len(i).ok_or(AdversaryError::PhaseOverflow(config.spec.horizon))?;
            cum += len;
            boundaries.push(cum.min(usize::MAX as u128) as usize);
            i += 1;
        }
        Ok(Self {
            spec: config.spec,
            alpha: config.alpha_check,
            seed: config.seed,
            boundaries,
        })
    }

    /// 1-based phase index containing round `t`.
    pub fn phase_of(&self, t: usize) -> Result<usize, AdversaryError> {
        if t == 0 || t > self.spec.horizon {
            return Err(AdversaryError::RoundOutOfRange {
                t,
                horizon: self.spec.horizon,
            });
        }
        let idx = self.boundaries.partition_point(|&end| end < t);
        Ok(idx + 1)
    }

    /// Bernoulli mean of coordinate `x` (0-based) at round `t`.
    pub fn mean(&self, t: usize, x: usize) -> Result<f64, AdversaryError> {
        let phase = self.phase_of(t)?;
        let in_best = x < self.spec.combo_size;
        let gap = self.alpha * self.spec.switch_cost;
        Ok(if phase % 2 == 1 {
            if in_best {
                1.0 - gap
            } else {
                1.0
            }
        } else if in_best {
            0.0
        } else {
            gap
        })
    }
}

impl Adversary for ScAdversary {
    fn round_loss(&self, t: usize) -> Result<LossVector, AdversaryError> {
        let values = (0..self.spec.num_base_arms)
            .map(|x| {
                let mean = self.mean(t, x)?;
                let u = rng::uniform(self.seed, rng::stream::SC_BERNOULLI, t as u64, x as u64);
                Ok(if u < mean { 1.0 } else { 0.0 })
            })
            .collect::<Result<Vec<f64>, AdversaryError>>()?;
        Ok(LossVector::per_round(values)?)
    }

    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn label(&self) -> &'static str {
        "sc"
    }
}

/// Replays losses from a headerless CSV file: one row per round with
/// `num_base_arms` comma-separated values in `[0, 1]`.
pub struct ReplayAdversary {
    rows: Vec<Vec<f64>>,
    label_path: PathBuf,
}

impl ReplayAdversary {
    pub fn from_path(path: &Path, num_base_arms: usize) -> Result<Self, AdversaryError> {
        let file = std::fs::File::open(path).map_err(|e| AdversaryError::Replay {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_reader(std::io::BufReader::new(file), num_base_arms, path)
    }

    pub fn from_reader<R: BufRead>(
        reader: R,
        num_base_arms: usize,
        path: &Path,
    ) -> Result<Self, AdversaryError> {
        let fail = |reason: String| AdversaryError::Replay {
            path: path.to_path_buf(),
            reason,
        };
        let mut rows = Vec::new();
        for (line_no, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| fail(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let values = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| fail(format!("line {}: {e}", line_no + 1)))?;
            if values.len() != num_base_arms {
                return Err(fail(format!(
                    "line {}: expected {} values, got {}",
                    line_no + 1,
                    num_base_arms,
                    values.len()
                )));
            }
            if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(fail(format!(
                    "line {}: value {bad} outside [0, 1]",
                    line_no + 1
                )));
            }
            rows.push(values);
        }
        if rows.is_empty() {
            return Err(fail("file contains no loss rows".into()));
        }
        Ok(Self {
            rows,
            label_path: path.to_path_buf(),
        })
    }

    pub fn num_rounds(&self) -> usize {
        self.rows.len()
    }

    pub fn path(&self) -> &Path {
        &self.label_path
    }
}

impl Adversary for ReplayAdversary {
    fn round_loss(&self, t: usize) -> Result<LossVector, AdversaryError> {
        if t == 0 || t > self.rows.len() {
            return Err(AdversaryError::RoundOutOfRange {
                t,
                horizon: self.rows.len(),
            });
        }
        Ok(LossVector::per_round(self.rows[t - 1].clone())?)
    }

    fn horizon(&self) -> usize {
        self.rows.len()
    }

    fn label(&self) -> &'static str {
        "replay"
    }
}
