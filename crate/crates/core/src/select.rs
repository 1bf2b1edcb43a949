//! Candidate selection: evaluate every model on M perturbed validation sets,
//! aggregate, and take the argmax — plus the traditional single-split
//! baseline.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{confusion, ConfusionCounts, MetricSpec};
use crate::models::Predictor;
use crate::perturb::{build_perturbed_set, PerturbationConfig};
use crate::scalar::Scalar;

/// Two aggregated scores within this of the maximum count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Scalar summary of a candidate's M perturbed scores.
///
/// `Quantile` uses linear interpolation between order statistics (the common
/// "type 7" convention); `Median` is `Quantile(0.5)`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Aggregator<F> {
    Mean,
    Median,
    Quantile(F),
}

impl<F: Scalar> Aggregator<F> {
    /// The 25th-percentile aggregator used as the default throughout the
    /// experiment protocols.
    pub fn lower_quartile() -> Self {
        Aggregator::Quantile(F::from_f64_lit(0.25))
    }
}

impl<F: Scalar> std::fmt::Display for Aggregator<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Aggregator::Mean => write!(f, "mean"),
            Aggregator::Median => write!(f, "median"),
            Aggregator::Quantile(q) => write!(f, "q:{q}"),
        }
    }
}

impl<F: Scalar> std::str::FromStr for Aggregator<F> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "mean" => return Ok(Aggregator::Mean),
            "median" => return Ok(Aggregator::Median),
            _ => {}
        }
        if let Some(q) = lower.strip_prefix("q:") {
            let q: f64 = q
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad quantile in {s:?}")))?;
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidParameter(format!("quantile {q} outside [0, 1]")));
            }
            return Ok(Aggregator::Quantile(F::from_f64_lit(q)));
        }
        Err(Error::InvalidParameter(format!(
            "unknown aggregator {s:?}; expected \"mean\", \"median\" or \"q:<fraction>\""
        )))
    }
}

/// Aggregate a score vector.
pub fn aggregate<F: Scalar>(scores: &[F], aggregator: &Aggregator<F>) -> Result<F> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("score vector"));
    }
    match aggregator {
        Aggregator::Mean => {
            Ok(scores.iter().copied().sum::<F>() / F::from_count(scores.len() as u64))
        }
        Aggregator::Median => quantile(scores, F::from_f64_lit(0.5)),
        Aggregator::Quantile(q) => quantile(scores, *q),
    }
}

fn quantile<F: Scalar>(scores: &[F], q: F) -> Result<F> {
    if q < F::zero() || q > F::one() {
        return Err(Error::InvalidParameter(format!("quantile {q} outside [0, 1]")));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores must not be NaN"));
    let position = q * F::from_count((sorted.len() - 1) as u64);
    let lo = position.floor().to_usize().unwrap_or(0);
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = position - position.floor();
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Outcome of a selection run over a candidate pool.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult<F> {
    /// Index of the candidate with the highest aggregated score (lowest
    /// index on an exact tie).
    pub chosen: usize,
    /// Per-candidate score vectors, one entry per perturbed set (a single
    /// entry for the traditional path).
    pub scores: Vec<Vec<F>>,
    /// Aggregated score per candidate.
    pub aggregated: Vec<F>,
    /// Set when at least two candidates reach the maximum within
    /// [`TIE_TOLERANCE`].
    pub tie: bool,
}

impl<F: Scalar> SelectionResult<F> {
    fn from_scores(scores: Vec<Vec<F>>, aggregated: Vec<F>) -> Self {
        let mut chosen = 0usize;
        for (i, value) in aggregated.iter().enumerate() {
            if *value > aggregated[chosen] {
                chosen = i;
            }
        }
        let max = aggregated[chosen];
        let tol = F::from_f64_lit(TIE_TOLERANCE);
        let tie = aggregated.iter().filter(|&&v| max - v <= tol).count() >= 2;
        SelectionResult {
            chosen,
            scores,
            aggregated,
            tie,
        }
    }

    /// CSV rows: `candidate,score_1..score_M,aggregate,chosen`.
    pub fn to_csv(&self, descriptors: &[String]) -> String {
        let m = self.scores.first().map_or(0, Vec::len);
        let mut out = String::from("candidate,descriptor");
        for i in 1..=m {
            out.push_str(&format!(",score_{i}"));
        }
        out.push_str(",aggregate,chosen\n");
        for (i, scores) in self.scores.iter().enumerate() {
            out.push_str(&format!("{i},{}", descriptors.get(i).map_or("", String::as_str)));
            for s in scores {
                out.push_str(&format!(",{s}"));
            }
            out.push_str(&format!(
                ",{},{}\n",
                self.aggregated[i],
                (i == self.chosen) as u8
            ));
        }
        out
    }
}

/// Confusion counts for every candidate on every perturbed set.
///
/// Perturbed sets are built once per set index and shared across all
/// candidates, so each candidate is scored on identical data and the
/// comparison is paired. The counts carry no metric choice: any number of
/// metrics can be scored from one matrix.
pub fn perturbed_counts<F: Scalar, P: Predictor<F>>(
    candidates: &[P],
    val: &Dataset<F>,
    cfg: &PerturbationConfig<F>,
) -> Result<Vec<Vec<ConfusionCounts>>> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("candidate pool"));
    }
    let mut matrix = vec![Vec::with_capacity(cfg.m_sets); candidates.len()];
    for m in 0..cfg.m_sets {
        let perturbed = build_perturbed_set(val, cfg, m)?;
        for (f, candidate) in candidates.iter().enumerate() {
            let preds = candidate.predict(&perturbed.features);
            matrix[f].push(confusion(&preds, &perturbed.labels)?);
        }
    }
    Ok(matrix)
}

/// Confusion counts for every candidate on the unperturbed set.
pub fn validation_counts<F: Scalar, P: Predictor<F>>(
    candidates: &[P],
    val: &Dataset<F>,
) -> Result<Vec<ConfusionCounts>> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("candidate pool"));
    }
    candidates
        .iter()
        .map(|candidate| {
            let preds = candidate.predict(&val.features);
            confusion(&preds, &val.labels)
        })
        .collect()
}

/// Score a counts matrix under one metric and aggregate into a selection.
pub fn select_from_counts<F: Scalar>(
    counts: &[Vec<ConfusionCounts>],
    metric: &MetricSpec<F>,
    aggregator: &Aggregator<F>,
) -> Result<SelectionResult<F>> {
    let mut scores = Vec::with_capacity(counts.len());
    for candidate in counts {
        let row: Result<Vec<F>> = candidate.iter().map(|c| metric.score(c)).collect();
        scores.push(row?);
    }
    let aggregated: Result<Vec<F>> = scores.iter().map(|row| aggregate(row, aggregator)).collect();
    Ok(SelectionResult::from_scores(scores, aggregated?))
}

/// Full perturbation-validation configuration for a selection run.
#[derive(Clone, Debug)]
pub struct PvfConfig<F> {
    pub perturbation: PerturbationConfig<F>,
    pub aggregator: Aggregator<F>,
    pub metric: MetricSpec<F>,
}

/// Select the most robust candidate: score everyone on `m_sets` perturbed
/// copies of `val`, aggregate each score vector, and take the argmax
/// (lowest index on exact ties). Deterministic given the config seed.
pub fn pvf_select<F: Scalar, P: Predictor<F>>(
    candidates: &[P],
    val: &Dataset<F>,
    cfg: &PvfConfig<F>,
) -> Result<SelectionResult<F>> {
    let counts = perturbed_counts(candidates, val, &cfg.perturbation)?;
    select_from_counts(&counts, &cfg.metric, &cfg.aggregator)
}

/// Baseline: argmax of the metric on the single unperturbed validation set,
/// with the same tie handling as [`pvf_select`].
pub fn traditional_select<F: Scalar, P: Predictor<F>>(
    candidates: &[P],
    val: &Dataset<F>,
    metric: &MetricSpec<F>,
) -> Result<SelectionResult<F>> {
    let counts = validation_counts(candidates, val)?;
    let matrix: Vec<Vec<ConfusionCounts>> = counts.into_iter().map(|c| vec![c]).collect();
    select_from_counts(&matrix, metric, &Aggregator::Mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSchema, Matrix};
    use crate::models::Predictor;
    use crate::seeding;
    use rand::Rng;

    /// Fixed-prediction stub classifier.
    struct Stub {
        bit: bool,
        flip_above: Option<f64>,
        name: &'static str,
    }

    impl Predictor<f64> for Stub {
        fn predict_row(&self, row: &[f64]) -> bool {
            match self.flip_above {
                Some(t) => row[0] > t,
                None => self.bit,
            }
        }

        fn descriptor(&self) -> String {
            self.name.to_owned()
        }
    }

    fn toy_val(n: usize) -> Dataset<f64> {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, -(i as f64)]).collect();
        let labels: Vec<bool> = (0..n).map(|i| i >= n / 2).collect();
        Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            labels,
            FeatureSchema::all_numeric(2),
            "toy",
        )
        .unwrap()
    }

    #[test]
    fn quantile_linear_interpolation() {
        let q: f64 = aggregate(&[1.0, 2.0, 3.0, 4.0], &Aggregator::Quantile(0.25)).unwrap();
        assert_eq!(q, 1.75);
    }

    #[test]
    fn mean_of_singleton_is_identity() {
        assert_eq!(aggregate(&[0.7], &Aggregator::Mean).unwrap(), 0.7);
    }

    #[test]
    fn median_of_three() {
        assert_eq!(aggregate(&[3.0, 1.0, 2.0], &Aggregator::Median).unwrap(), 2.0);
    }

    #[test]
    fn aggregate_rejects_empty() {
        assert!(aggregate::<f64>(&[], &Aggregator::Mean).is_err());
    }

    #[test]
    fn quantile_order_sanity() {
        let mut rng = seeding::stream(5, &[]);
        for _ in 0..50 {
            let scores: Vec<f64> = (0..17).map(|_| rng.random()).collect();
            let q1: f64 = aggregate(&scores, &Aggregator::Quantile(0.25)).unwrap();
            let med: f64 = aggregate(&scores, &Aggregator::Median).unwrap();
            let q3: f64 = aggregate(&scores, &Aggregator::Quantile(0.75)).unwrap();
            assert!(q1 <= med && med <= q3);
        }
    }

    #[test]
    fn single_candidate_is_chosen() {
        let val = toy_val(10);
        let candidates = vec![Stub { bit: true, flip_above: None, name: "one" }];
        let res = traditional_select(&candidates, &val, &MetricSpec::Accuracy).unwrap();
        assert_eq!(res.chosen, 0);
        let cfg = PvfConfig {
            perturbation: PerturbationConfig::all_features(2, 0.1, 0.0, 0.0, 2, 3, 7),
            aggregator: Aggregator::lower_quartile(),
            metric: MetricSpec::Accuracy,
        };
        assert_eq!(pvf_select(&candidates, &val, &cfg).unwrap().chosen, 0);
    }

    #[test]
    fn clear_winner_is_selected() {
        let val = toy_val(10);
        // flip_above n/2 - 1 predicts labels perfectly; constant-negative gets F1 0
        let candidates = vec![
            Stub { bit: false, flip_above: None, name: "never" },
            Stub { bit: false, flip_above: Some(4.0), name: "oracle" },
        ];
        let res = traditional_select(&candidates, &val, &MetricSpec::F1).unwrap();
        assert_eq!(res.chosen, 1);
        assert!(!res.tie);
    }

    #[test]
    fn exact_tie_picks_lowest_index_and_flags() {
        let val = toy_val(10);
        let candidates = vec![
            Stub { bit: true, flip_above: None, name: "a" },
            Stub { bit: true, flip_above: None, name: "b" },
        ];
        let res = traditional_select(&candidates, &val, &MetricSpec::Accuracy).unwrap();
        assert_eq!(res.chosen, 0);
        assert!(res.tie);
    }

    #[test]
    fn degenerate_controls_reproduce_traditional_selection() {
        let val = toy_val(12);
        let candidates = vec![
            Stub { bit: false, flip_above: Some(7.0), name: "a" },
            Stub { bit: false, flip_above: Some(5.0), name: "b" },
            Stub { bit: true, flip_above: None, name: "c" },
        ];
        let trad = traditional_select(&candidates, &val, &MetricSpec::F1).unwrap();
        let cfg = PvfConfig {
            perturbation: PerturbationConfig::identity(2, 99),
            aggregator: Aggregator::Mean,
            metric: MetricSpec::F1,
        };
        let pvf = pvf_select(&candidates, &val, &cfg).unwrap();
        assert_eq!(pvf.chosen, trad.chosen);
        assert_eq!(pvf.tie, trad.tie);
        assert_eq!(pvf.aggregated, trad.aggregated);
    }

    #[test]
    fn rerunning_with_same_seed_reproduces_score_matrix() {
        let val = toy_val(14);
        let candidates = vec![
            Stub { bit: false, flip_above: Some(8.0), name: "a" },
            Stub { bit: false, flip_above: Some(6.0), name: "b" },
        ];
        let cfg = PvfConfig {
            perturbation: PerturbationConfig::all_features(2, 0.8, 0.0, 0.0, 3, 9, 1234),
            aggregator: Aggregator::lower_quartile(),
            metric: MetricSpec::Accuracy,
        };
        let a = pvf_select(&candidates, &val, &cfg).unwrap();
        let b = pvf_select(&candidates, &val, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_candidates_is_an_error() {
        let val = toy_val(4);
        let none: Vec<Stub> = Vec::new();
        assert!(traditional_select(&none, &val, &MetricSpec::F1).is_err());
    }

    #[test]
    fn csv_serialization_shape() {
        let val = toy_val(6);
        let candidates = vec![
            Stub { bit: true, flip_above: None, name: "a" },
            Stub { bit: false, flip_above: None, name: "b" },
        ];
        let res = traditional_select(&candidates, &val, &MetricSpec::Accuracy).unwrap();
        let csv = res.to_csv(&["a".into(), "b".into()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("candidate,descriptor,score_1"));
        assert!(lines[1].ends_with(",1"));
        assert!(lines[2].ends_with(",0"));
    }
}
