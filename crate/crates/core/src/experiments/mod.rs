//! Experiment orchestration: the synthetic selection sweep, the real-data
//! protocol, sensitivity stratification, paired statistics and the config
//! file schema.

pub mod config;
pub mod real;
pub mod stats;
pub mod synthetic;

pub use config::{load_config, parse_config, FileConfig};
pub use real::{load_real_dataset, run_real_protocol, FoldRecord, Outcome, RealConfig, RealOutput};
pub use synthetic::{
    classic_metric, rep_seed, run_sweep, run_synthetic_rep, sensitivity_report, separability_band,
    ConfigResult, SensitivityCurve, SweepConfig, SweepOutput, Track, TrackSummary, TRUE_PAIR,
};
