//! Experiment configuration and the flat key-value config file format.
//!
//! A config file is UTF-8 text with one `key = value` pair per line and `#`
//! comments. See the repository README for the full schema; the essentials:
//!
//! ```text
//! K = 10
//! I = 3
//! T = 10000
//! lambda = 1.0
//! adversary = cin            # cin | cdn | sc | replay
//! scale = 10                 # cin/cdn noise-and-margin multiplier
//! feedback = bandit          # bandit | semibandit
//! policies = exp2, exp3      # exp2 | exp3 | broad | hybrid | negentropy
//! schedule = experiment_bandit
//! seeds = 0..20
//! granularity = batch        # round | batch
//! ```

use combat_core::model::{FeedbackMode, ModelError, ProblemSpec};
use combat_core::semibandit::EpochReset;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("missing config field `{0}`")]
    MissingField(&'static str),

    #[error("config field `{field}`: {reason}")]
    InvalidValue { field: String, reason: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("config line {0}: expected `key = value`")]
    MalformedLine(usize),

    #[error("cannot read config file {path}: {reason}")]
    Io { path: PathBuf, reason: String },

    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleSpec {
    TheoremExp2,
    TheoremBroad,
    ExperimentBandit,
    ExperimentSemiBandit,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecordGranularity {
    Round,
    #[default]
    Batch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyId {
    Exp2,
    Exp3,
    Broad,
    Hybrid,
    NegEntropy,
}

impl PolicyId {
    pub fn label(&self) -> &'static str {
        match self {
            PolicyId::Exp2 => "exp2",
            PolicyId::Exp3 => "exp3",
            PolicyId::Broad => "broad",
            PolicyId::Hybrid => "hybrid",
            PolicyId::NegEntropy => "negentropy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exp2" => Some(PolicyId::Exp2),
            "exp3" => Some(PolicyId::Exp3),
            "broad" => Some(PolicyId::Broad),
            "hybrid" => Some(PolicyId::Hybrid),
            "negentropy" => Some(PolicyId::NegEntropy),
            _ => None,
        }
    }

    pub fn required_feedback(&self) -> FeedbackMode {
        match self {
            PolicyId::Exp2 | PolicyId::Exp3 => FeedbackMode::Bandit,
            _ => FeedbackMode::SemiBandit,
        }
    }
}

/// A policy to run, with optional tuning overrides (defaults come from the
/// theorem formulas).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub id: PolicyId,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub eta0: Option<f64>,
    pub epoch_reset: EpochReset,
    pub hybrid_gamma: f64,
}

impl PolicySpec {
    pub fn new(id: PolicyId) -> Self {
        Self {
            id,
            eta: None,
            gamma: None,
            eta0: None,
            epoch_reset: EpochReset::default(),
            hybrid_gamma: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryChoice {
    Cin,
    Cdn,
    Sc,
    Replay,
}

impl AdversaryChoice {
    pub fn label(&self) -> &'static str {
        match self {
            AdversaryChoice::Cin => "cin",
            AdversaryChoice::Cdn => "cdn",
            AdversaryChoice::Sc => "sc",
            AdversaryChoice::Replay => "replay",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub adversary: AdversaryChoice,
    pub scale: f64,
    pub alpha_check: f64,
    pub chi: Option<Vec<usize>>,
    pub replay_path: Option<PathBuf>,
    pub feedback: FeedbackMode,
    pub policies: Vec<PolicySpec>,
    pub schedule: ScheduleSpec,
    pub seeds: Vec<u64>,
    pub output_path: Option<PathBuf>,
    pub granularity: RecordGranularity,
}

impl ExperimentConfig {
    /// A minimal config with required pieces; fields can be adjusted before
    /// validation.
    pub fn new(
        problem: ProblemSpec,
        adversary: AdversaryChoice,
        feedback: FeedbackMode,
        policies: Vec<PolicySpec>,
        schedule: ScheduleSpec,
        seeds: Vec<u64>,
    ) -> Self {
        Self {
            problem,
            adversary,
            scale: 1.0,
            alpha_check: 0.01,
            chi: None,
            replay_path: None,
            feedback,
            policies,
            schedule,
            seeds,
            output_path: None,
            granularity: RecordGranularity::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds.is_empty() {
            return Err(ConfigError::InvalidValue {
                field: "seeds".into(),
                reason: "at least one seed is required".into(),
            });
        }
        if self.policies.is_empty() {
            return Err(ConfigError::InvalidValue {
                field: "policies".into(),
                reason: "at least one policy is required".into(),
            });
        }
        for policy in &self.policies {
            if policy.id.required_feedback() == FeedbackMode::SemiBandit
                && self.feedback == FeedbackMode::Bandit
            {
                return Err(ConfigError::InvalidValue {
                    field: "policies".into(),
                    reason: format!(
                        "policy `{}` needs semi-bandit feedback but the experiment is bandit",
                        policy.id.label()
                    ),
                });
            }
        }
        if self.adversary == AdversaryChoice::Replay && self.replay_path.is_none() {
            return Err(ConfigError::MissingField("replay_path"));
        }
        if self.adversary == AdversaryChoice::Sc
            && self.alpha_check * self.problem.switch_cost > 1.0
        {
            return Err(ConfigError::InvalidValue {
                field: "alpha_check".into(),
                reason: format!(
                    "alpha_check * lambda = {} > 1",
                    self.alpha_check * self.problem.switch_cost
                ),
            });
        }
        if let Some(chi) = &self.chi {
            if chi.len() != self.problem.combo_size
                || chi.iter().any(|&i| i >= self.problem.num_base_arms)
            {
                return Err(ConfigError::InvalidValue {
                    field: "chi".into(),
                    reason: "chi must list combo_size distinct base-arm indices".into(),
                });
            }
        }
        Ok(())
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| ConfigError::InvalidValue {
        field: field.to_string(),
        reason: format!("{e}"),
    })
}

/// Parses `0..20` (half-open), `0..=19`, or a comma list of integers.
pub fn parse_seed_list(value: &str) -> Result<Vec<u64>, ConfigError> {
    let bad = |reason: &str| ConfigError::InvalidValue {
        field: "seeds".into(),
        reason: reason.into(),
    };
    let value = value.trim();
    if let Some((lo, hi)) = value.split_once("..=") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad("bad range start"))?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad("bad range end"))?;
        if hi < lo {
            return Err(bad("range end before start"));
        }
        return Ok((lo..=hi).collect());
    }
    if let Some((lo, hi)) = value.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad("bad range start"))?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad("bad range end"))?;
        if hi < lo {
            return Err(bad("range end before start"));
        }
        return Ok((lo..hi).collect());
    }
    value
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| bad("bad seed value")))
        .collect()
}

/// Parses the flat key-value text format.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut fields: BTreeMap<String, String> = BTreeMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ConfigError::MalformedLine(line_no + 1))?;
        fields.insert(key.trim().to_string(), value.trim().to_string());
    }

    let mut take = |key: &'static str| fields.remove(key);

    let k: usize = parse_field("K", &take("K").ok_or(ConfigError::MissingField("K"))?)?;
    let i: usize = parse_field("I", &take("I").ok_or(ConfigError::MissingField("I"))?)?;
    let t: usize = parse_field("T", &take("T").ok_or(ConfigError::MissingField("T"))?)?;
    let lambda: f64 = parse_field(
        "lambda",
        &take("lambda").ok_or(ConfigError::MissingField("lambda"))?,
    )?;
    let problem = ProblemSpec::new(k, i, t, lambda).map_err(|e| ConfigError::InvalidValue {
        field: "K/I/T/lambda".into(),
        reason: e.to_string(),
    })?;

    let adversary = match take("adversary")
        .ok_or(ConfigError::MissingField("adversary"))?
        .to_ascii_lowercase()
        .as_str()
    {
        "cin" => AdversaryChoice::Cin,
        "cdn" => AdversaryChoice::Cdn,
        "sc" => AdversaryChoice::Sc,
        "replay" => AdversaryChoice::Replay,
        other => {
            return Err(ConfigError::InvalidValue {
                field: "adversary".into(),
                reason: format!("unknown adversary `{other}`"),
            })
        }
    };

    let feedback = match take("feedback")
        .ok_or(ConfigError::MissingField("feedback"))?
        .to_ascii_lowercase()
        .as_str()
    {
        "bandit" => FeedbackMode::Bandit,
        "semibandit" | "semi-bandit" | "semi_bandit" => FeedbackMode::SemiBandit,
        other => {
            return Err(ConfigError::InvalidValue {
                field: "feedback".into(),
                reason: format!("unknown feedback mode `{other}`"),
            })
        }
    };

    let mut policies = Vec::new();
    for name in take("policies")
        .ok_or(ConfigError::MissingField("policies"))?
        .split(',')
    {
        let id = PolicyId::parse(name).ok_or_else(|| ConfigError::InvalidValue {
            field: "policies".into(),
            reason: format!("unknown policy `{}`", name.trim()),
        })?;
        policies.push(PolicySpec::new(id));
    }

    let schedule = match take("schedule") {
        None => match feedback {
            FeedbackMode::Bandit => ScheduleSpec::ExperimentBandit,
            FeedbackMode::SemiBandit => ScheduleSpec::ExperimentSemiBandit,
        },
        Some(raw) => {
            let lower = raw.to_ascii_lowercase();
            if let Some(rest) = lower.strip_prefix("fixed:") {
                ScheduleSpec::Fixed(parse_field("schedule", rest)?)
            } else {
                match lower.as_str() {
                    "theorem_exp2" => ScheduleSpec::TheoremExp2,
                    "theorem_broad" => ScheduleSpec::TheoremBroad,
                    "experiment_bandit" => ScheduleSpec::ExperimentBandit,
                    "experiment_semibandit" => ScheduleSpec::ExperimentSemiBandit,
                    other => {
                        return Err(ConfigError::InvalidValue {
                            field: "schedule".into(),
                            reason: format!("unknown schedule `{other}`"),
                        })
                    }
                }
            }
        }
    };

    let seeds = match take("seeds") {
        Some(raw) => parse_seed_list(&raw)?,
        None => (0..20).collect(),
    };

    let granularity = match take("granularity") {
        None => RecordGranularity::Batch,
        Some(raw) => match raw.to_ascii_lowercase().as_str() {
            "round" | "per_round" => RecordGranularity::Round,
            "batch" | "per_batch" => RecordGranularity::Batch,
            other => {
                return Err(ConfigError::InvalidValue {
                    field: "granularity".into(),
                    reason: format!("unknown granularity `{other}`"),
                })
            }
        },
    };

    let mut config = ExperimentConfig::new(problem, adversary, feedback, policies, schedule, seeds);
    config.granularity = granularity;

    if let Some(raw) = take("scale") {
        config.scale = parse_field("scale", &raw)?;
    }
    if let Some(raw) = take("alpha_check") {
        config.alpha_check = parse_field("alpha_check", &raw)?;
    }
    if let Some(raw) = take("chi") {
        let chi = raw
            .split(',')
            .map(|s| parse_field::<usize>("chi", s))
            .collect::<Result<Vec<usize>, _>>()?;
        config.chi = Some(chi);
    }
    if let Some(raw) = take("replay_path") {
        config.replay_path = Some(PathBuf::from(raw));
    }
    if let Some(raw) = take("out") {
        config.output_path = Some(PathBuf::from(raw));
    }

    // Per-policy overrides: `<policy>.<param> = value`.
    let override_keys: Vec<String> = fields.keys().cloned().collect();
    for key in override_keys {
        let Some((policy_name, param)) = key.split_once('.') else {
            return Err(ConfigError::UnknownKey(key));
        };
        let Some(id) = PolicyId::parse(policy_name) else {
            return Err(ConfigError::UnknownKey(key));
        };
        let value = fields.remove(&key).unwrap();
        let Some(policy) = config.policies.iter_mut().find(|p| p.id == id) else {
            return Err(ConfigError::InvalidValue {
                field: key.clone(),
                reason: "override for a policy not listed in `policies`".into(),
            });
        };
        match param {
            "eta" => policy.eta = Some(parse_field(&key, &value)?),
            "gamma" if id == PolicyId::Hybrid => policy.hybrid_gamma = parse_field(&key, &value)?,
            "gamma" => policy.gamma = Some(parse_field(&key, &value)?),
            "eta0" => policy.eta0 = Some(parse_field(&key, &value)?),
            "reset" => {
                policy.epoch_reset = match value.to_ascii_lowercase().as_str() {
                    "restart" => EpochReset::RestartAtBarrier,
                    "keep" => EpochReset::KeepIterate,
                    other => {
                        return Err(ConfigError::InvalidValue {
                            field: key.clone(),
                            reason: format!("unknown reset mode `{other}`"),
                        })
                    }
                }
            }
            other => {
                return Err(ConfigError::InvalidValue {
                    field: key.clone(),
                    reason: format!("unknown policy parameter `{other}`"),
                })
            }
        }
    }

    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "
        # comment line
        K = 10
        I = 3
        T = 1000
        lambda = 1.0
        adversary = cin
        scale = 10
        feedback = bandit
        policies = exp2, exp3
        schedule = experiment_bandit
        seeds = 0..4
        granularity = round
    ";

    #[test]
    fn parses_a_full_config() {
        let config = parse_config(BASE).unwrap();
        assert_eq!(config.problem.num_base_arms, 10);
        assert_eq!(config.problem.combo_size, 3);
        assert_eq!(config.problem.horizon, 1000);
        assert_eq!(config.scale, 10.0);
        assert_eq!(config.seeds, vec![0, 1, 2, 3]);
        assert_eq!(config.policies.len(), 2);
        assert_eq!(config.granularity, RecordGranularity::Round);
        assert_eq!(config.schedule, ScheduleSpec::ExperimentBandit);
    }

    #[test]
    fn missing_field_is_named() {
        let text = BASE.replace("K = 10", "");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, ConfigError::MissingField("K")));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let text = format!("{BASE}\nwhatever = 3\n");
        assert!(matches!(
            parse_config(&text),
            Err(ConfigError::UnknownKey(_))
        ));

        let text = BASE.replace("lambda = 1.0", "lambda = abc");
        assert!(matches!(
            parse_config(&text),
            Err(ConfigError::InvalidValue { .. })
        ));
    }

    #[test]
    fn policy_overrides_apply() {
        let text = format!("{BASE}\nexp2.eta = 0.001\nexp2.gamma = 0.1\n");
        let config = parse_config(&text).unwrap();
        let exp2 = &config.policies[0];
        assert_eq!(exp2.eta, Some(0.001));
        assert_eq!(exp2.gamma, Some(0.1));

        let text = format!("{BASE}\nbroad.eta0 = 0.5\n");
        assert!(parse_config(&text).is_err()); // broad not listed
    }

    #[test]
    fn semibandit_policy_under_bandit_feedback_is_rejected() {
        let text = BASE.replace("policies = exp2, exp3", "policies = broad");
        let err = parse_config(&text).unwrap_err();
        match err {
            ConfigError::InvalidValue { field, reason } => {
                assert_eq!(field, "policies");
                assert!(reason.contains("broad"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn seed_list_forms() {
        assert_eq!(parse_seed_list("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seed_list("0..=3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seed_list("5, 7, 9").unwrap(), vec![5, 7, 9]);
        assert!(parse_seed_list("3..1").is_err());
        assert!(parse_seed_list("a,b").is_err());
    }

    #[test]
    fn fixed_schedule_and_sc_validation() {
        let text = BASE
            .replace("schedule = experiment_bandit", "schedule = fixed:25")
            .replace("adversary = cin", "adversary = sc");
        let config = parse_config(&text).unwrap();
        assert_eq!(config.schedule, ScheduleSpec::Fixed(25));

        let text = format!(
            "{}\nalpha_check = 0.9\n",
            BASE.replace("adversary = cin", "adversary = sc")
                .replace("lambda = 1.0", "lambda = 2.0")
        );
        assert!(parse_config(&text).is_err());
    }
}
