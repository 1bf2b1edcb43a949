//! Capacity-aware classification metrics and perturbation-based validation.
//!
//! Two complementary tools for model assessment on small, imbalanced binary
//! classification tasks:
//!
//! * **Intervention Efficiency (IE)** — a capacity-aware metric: the ratio of
//!   expected true positives captured by a model-guided intervention to that
//!   of uniform random intervention, at a budget fraction `gamma`. Closed
//!   form in [`metrics`], independent Monte Carlo validation in [`oracle`].
//! * **Perturbation validation** — robust model selection: evaluate every
//!   candidate on `M` feature-perturbed replicas of the validation set,
//!   aggregate the scores (25th percentile by default) and select the argmax.
//!   Mechanisms in [`perturb`], selection in [`select`].
//!
//! The [`models`] and [`data`] modules supply the interpretable candidate
//! pools (pairwise logistic regression, depth-bounded trees, SMOTE) and the
//! data pipeline; [`experiments`] orchestrates the synthetic sweep, the
//! real-data protocol and the sensitivity analysis.
//!
//! The numeric core is generic over the scalar type ([`Scalar`]: `f32` or
//! `f64`); the aliases below fix `f64`, which is what the harness and CLI
//! use.

pub mod data;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod models;
pub mod oracle;
pub mod perturb;
pub mod report;
pub mod scalar;
pub mod seeding;
pub mod select;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` instantiations of the core generic types.
pub type Dataset = data::Dataset<f64>;
pub type Matrix = data::Matrix<f64>;
pub type Scaler = data::Scaler<f64>;
pub type SyntheticSpec = data::SyntheticSpec<f64>;
pub type IeInputs = metrics::IeInputs<f64>;
pub type MetricSpec = metrics::MetricSpec<f64>;
pub type PerturbationConfig = perturb::PerturbationConfig<f64>;
pub type Aggregator = select::Aggregator<f64>;
pub type PvfConfig = select::PvfConfig<f64>;
pub type SelectionResult = select::SelectionResult<f64>;
pub type LogisticModel = models::LogisticModel<f64>;
pub type TreeModel = models::TreeModel<f64>;
