//! Confusion-count metrics: precision, recall, F1, accuracy, and
//! Intervention Efficiency (IE).
//!
//! IE compares a model-guided intervention against uniform random
//! intervention under a budget fraction `gamma`: it is the ratio of expected
//! true positives captured by the two policies. Two algebraically equivalent
//! routes are implemented — [`ie_ratio`] works on the (precision, recall,
//! prevalence) ratios, [`ie_counting`] works directly on population counts —
//! and they agree to ~1e-12, which the test suite exercises aggressively.

use std::fmt;
use std::str::FromStr;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::Predictor;
use crate::scalar::Scalar;

/// Confusion-matrix cell counts for binary classification.
///
/// This is the sufficient statistic for every metric in the library.
#[derive(Copy, Clone, Debug, Eq, PartialEq, Hash)]
pub struct ConfusionCounts {
    /// true positive count
    pub tpc: u64,
    /// false positive count
    pub fpc: u64,
    /// true negative count
    pub tnc: u64,
    /// false negative count
    pub fnc: u64,
}

impl ConfusionCounts {
    pub fn new(tpc: u64, fpc: u64, tnc: u64, fnc: u64) -> Result<Self> {
        if tpc + fpc + tnc + fnc == 0 {
            return Err(Error::EmptyInput("confusion counts sum to zero"));
        }
        Ok(ConfusionCounts { tpc, fpc, tnc, fnc })
    }

    /// Total sample size.
    pub fn total(&self) -> u64 {
        self.tpc + self.fpc + self.tnc + self.fnc
    }

    /// Number of actual positives (tp + fn).
    pub fn positives(&self) -> u64 {
        self.tpc + self.fnc
    }

    /// Number of samples the model flagged positive (tp + fp).
    pub fn flagged(&self) -> u64 {
        self.tpc + self.fpc
    }

    /// Positive rate of the evaluation set.
    pub fn prevalence<F: Scalar>(&self) -> F {
        F::from_count(self.positives()) / F::from_count(self.total())
    }

    /// Fraction of the evaluation set the model flagged.
    pub fn flagged_fraction<F: Scalar>(&self) -> F {
        F::from_count(self.flagged()) / F::from_count(self.total())
    }

    /// Precision, defined as 0 when nothing is flagged.
    pub fn precision<F: Scalar>(&self) -> F {
        if self.flagged() == 0 {
            F::zero()
        } else {
            F::from_count(self.tpc) / F::from_count(self.flagged())
        }
    }

    /// Recall, defined as 0 when there are no positives.
    pub fn recall<F: Scalar>(&self) -> F {
        if self.positives() == 0 {
            F::zero()
        } else {
            F::from_count(self.tpc) / F::from_count(self.positives())
        }
    }

    /// Harmonic mean of precision and recall; 0 when precision + recall = 0.
    pub fn f1<F: Scalar>(&self) -> F {
        let p = self.precision::<F>();
        let r = self.recall::<F>();
        if p + r == F::zero() {
            F::zero()
        } else {
            F::from_f64_lit(2.0) * p * r / (p + r)
        }
    }

    pub fn accuracy<F: Scalar>(&self) -> F {
        F::from_count(self.tpc + self.tnc) / F::from_count(self.total())
    }
}

/// Count confusion cells from parallel prediction/label vectors.
pub fn confusion(predictions: &[bool], labels: &[bool]) -> Result<ConfusionCounts> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    let mut counts = ConfusionCounts {
        tpc: 0,
        fpc: 0,
        tnc: 0,
        fnc: 0,
    };
    for (&pred, &label) in predictions.iter().zip(labels) {
        match (pred, label) {
            (true, true) => counts.tpc += 1,
            (true, false) => counts.fpc += 1,
            (false, false) => counts.tnc += 1,
            (false, true) => counts.fnc += 1,
        }
    }
    Ok(counts)
}

/// Inputs to the ratio form of IE.
///
/// `s` is the fraction of the population treated in the model-guided first
/// stage: `min(gamma, prevalence * recall / precision)`. When the inputs come
/// from confusion counts, `prevalence * recall / precision` is exactly the
/// flagged fraction, and `s` is derived from it directly so the degenerate
/// `precision = 0` corner stays well-defined.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct IeInputs<F> {
    pub precision: F,
    pub recall: F,
    pub prevalence: F,
    pub capacity: F,
    /// Stage-one treated fraction, `min(capacity, flagged fraction)`.
    pub s: F,
}

fn check_capacity<F: Scalar>(gamma: F) -> Result<()> {
    if gamma <= F::zero() || gamma > F::one() || gamma.is_nan() {
        return Err(Error::InvalidCapacity(gamma.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

impl<F: Scalar> IeInputs<F> {
    /// Build from raw rates. The flagged fraction is recovered as
    /// `prevalence * recall / precision`; a model with zero precision is
    /// treated as flagging nobody (the 0/0 corner of the ratio form).
    pub fn from_rates(precision: F, recall: F, prevalence: F, capacity: F) -> Result<Self> {
        if prevalence <= F::zero() || prevalence > F::one() {
            return Err(Error::NoPositives);
        }
        check_capacity(capacity)?;
        for (name, v) in [("precision", precision), ("recall", recall)] {
            if !(F::zero()..=F::one()).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} {v} outside [0, 1]")));
            }
        }
        let s = if precision > F::zero() {
            capacity.min(prevalence * recall / precision)
        } else {
            F::zero()
        };
        Ok(IeInputs {
            precision,
            recall,
            prevalence,
            capacity,
            s,
        })
    }

    /// Build from confusion counts; all rates come from the same set.
    pub fn from_counts(counts: &ConfusionCounts, capacity: F) -> Result<Self> {
        if counts.positives() == 0 {
            return Err(Error::NoPositives);
        }
        check_capacity(capacity)?;
        Ok(IeInputs {
            precision: counts.precision(),
            recall: counts.recall(),
            prevalence: counts.prevalence(),
            capacity,
            s: capacity.min(counts.flagged_fraction()),
        })
    }
}

/// Intervention Efficiency in ratio form:
/// `[s*p + (gamma - s) * (pi - s*p) / (1 - s)] / (gamma * pi)`.
///
/// Two regimes fall out of `s = min(gamma, flagged fraction)`:
/// scarce budget (`s = gamma`, the budget is exhausted inside the flagged
/// set) reduces to `p / pi`; ample budget treats every flagged sample and
/// spends the remainder uniformly on the residual pool.
pub fn ie_ratio<F: Scalar>(inputs: &IeInputs<F>) -> F {
    let IeInputs {
        precision: p,
        prevalence: pi,
        capacity: gamma,
        s,
        ..
    } = *inputs;
    if s >= gamma {
        // Scarce-budget regime (including the boundary): every intervention
        // is a flagged sample, so IE = (gamma*p)/(gamma*pi) = p/pi.
        return p / pi;
    }
    // Precision equal to prevalence makes the flagged pool and the residual
    // pool identical in positive rate; the formula is identically 1 and is
    // returned exactly rather than through rounded arithmetic.
    if p == pi {
        return F::one();
    }
    let second = if s < F::one() {
        (gamma - s) * ((pi - s * p) / (F::one() - s))
    } else {
        // s = 1 forces gamma = 1 = s, unreachable here; kept as a guard.
        F::zero()
    };
    (s * p + second) / (gamma * pi)
}

/// Intervention Efficiency in counting form, following the two-stage budget
/// argument on explicit population counts: with `c = gamma * n` (fractional,
/// expected-value semantics) and `c' = min(c, flagged)`,
/// `T_model = c'*p + (c - c') * (positives - c'*p) / (n - c')` and
/// `IE = T_model / (c * positives / n)`.
pub fn ie_counting<F: Scalar>(counts: &ConfusionCounts, gamma: F) -> Result<F> {
    if counts.positives() == 0 {
        return Err(Error::NoPositives);
    }
    check_capacity(gamma)?;
    let beta = F::from_count(counts.total());
    let alpha = F::from_count(counts.positives());
    let flagged = F::from_count(counts.flagged());
    let c = gamma * beta;
    let uniform = c * (alpha / beta);
    if counts.flagged() == 0 {
        // Nobody flagged: the whole budget falls through to the uniform
        // stage, whose expectation is exactly the baseline.
        return Ok(F::one());
    }
    let p = F::from_count(counts.tpc) / flagged;
    if c <= flagged {
        // Scarce budget: c * p captured vs c * alpha / beta at random.
        return Ok(p / (alpha / beta));
    }
    let pi = alpha / beta;
    if p == pi {
        return Ok(F::one());
    }
    let stage1 = flagged * p;
    let stage2 = (c - flagged) * ((alpha - stage1) / (beta - flagged));
    Ok((stage1 + stage2) / uniform)
}

/// Precision from raw vectors (0 when nothing flagged).
pub fn precision<F: Scalar>(counts: &ConfusionCounts) -> F {
    counts.precision()
}

/// Recall from counts (0 when no positives).
pub fn recall<F: Scalar>(counts: &ConfusionCounts) -> F {
    counts.recall()
}

/// F1 from counts.
pub fn f1<F: Scalar>(counts: &ConfusionCounts) -> F {
    counts.f1()
}

/// Accuracy from counts.
pub fn accuracy<F: Scalar>(counts: &ConfusionCounts) -> F {
    counts.accuracy()
}

/// Evaluation metric selector: IE at a given capacity, F1, or accuracy.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum MetricSpec<F> {
    /// Intervention Efficiency at capacity `gamma` in (0, 1].
    Ie { gamma: F },
    F1,
    Accuracy,
}

impl<F: Scalar> MetricSpec<F> {
    pub fn ie(gamma: F) -> Result<Self> {
        check_capacity(gamma)?;
        Ok(MetricSpec::Ie { gamma })
    }

    /// Score a set of confusion counts under this metric.
    pub fn score(&self, counts: &ConfusionCounts) -> Result<F> {
        match *self {
            MetricSpec::Ie { gamma } => {
                let inputs = IeInputs::from_counts(counts, gamma)?;
                Ok(ie_ratio(&inputs))
            }
            MetricSpec::F1 => Ok(counts.f1()),
            MetricSpec::Accuracy => Ok(counts.accuracy()),
        }
    }
}

impl<F: Scalar> fmt::Display for MetricSpec<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Ie { gamma } => write!(f, "ie:{gamma}"),
            MetricSpec::F1 => write!(f, "f1"),
            MetricSpec::Accuracy => write!(f, "accuracy"),
        }
    }
}

impl<F: Scalar> FromStr for MetricSpec<F> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "f1" {
            return Ok(MetricSpec::F1);
        }
        if lower == "accuracy" {
            return Ok(MetricSpec::Accuracy);
        }
        if let Some(g) = lower.strip_prefix("ie:") {
            let gamma: f64 = g
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad capacity in metric {s:?}")))?;
            return MetricSpec::ie(F::from_f64_lit(gamma));
        }
        Err(Error::InvalidParameter(format!(
            "unknown metric {s:?}; expected \"ie:<gamma>\", \"f1\" or \"accuracy\""
        )))
    }
}

/// Predict on a dataset, build confusion counts and dispatch to the metric.
///
/// For IE the evaluation set itself must contain at least one positive: the
/// prevalence estimate is always taken from the same set as precision and
/// recall, never from a larger parent dataset.
pub fn evaluate<F: Scalar, M: Predictor<F> + ?Sized>(
    model: &M,
    dataset: &Dataset<F>,
    spec: &MetricSpec<F>,
) -> Result<F> {
    if dataset.len() == 0 {
        return Err(Error::EmptyInput("dataset"));
    }
    let predictions = model.predict(&dataset.features);
    let counts = confusion(&predictions, &dataset.labels)?;
    spec.score(&counts)
}
