//! Experiment orchestration for the switching-cost bandit simulator:
//! configuration files, the batch-level game loop, replicate fan-out,
//! aggregation, scaling-exponent fits, and figure presets.

pub mod config;
pub mod figures;
pub mod records;
pub mod runner;
pub mod stats;

pub use config::{
    load_config, parse_config, parse_seed_list, AdversaryChoice, ConfigError, ExperimentConfig,
    PolicyId, PolicySpec, RecordGranularity, ScheduleSpec,
};
pub use figures::{preset, run_sweep, FigurePreset, SweepPlan, SweepVariable, PRESET_NAMES};
pub use records::{
    fmt_sig, write_curves_csv, write_records_csv, write_sweep_csv, CurvePoint, RunRecord,
    SweepPoint,
};
pub use runner::{
    build_adversary, build_policy, build_schedule, run_experiment, run_game, with_thread_pool,
    ExperimentOutput, HarnessError, RunOutput, RunSummary,
};
pub use stats::{aggregate, fit_scaling_exponent, mean_and_se};
