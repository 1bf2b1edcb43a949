//! Typed feature perturbation and construction of perturbed validation sets.
//!
//! Numeric features get additive Gaussian noise, nominal features flip to a
//! uniformly chosen other category with probability `xi`, ordinal features
//! move to another level with probability `xi` and mass decaying
//! exponentially in the rank distance. Labels are never perturbed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, FeatureKind, FeatureSchema, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeding;

/// Perturbation controls.
///
/// `perturb_features` lists the column indices subjected to noise; everything
/// else is copied verbatim. Each of the `m_sets` perturbed sets contains
/// `replicas` independent noisy copies of every original sample, so the class
/// balance of the source set is preserved exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationConfig<F> {
    /// Numeric noise standard deviation (in the feature's units; the
    /// experiment protocols apply it after standard scaling).
    pub sigma: F,
    /// Change probability for nominal and ordinal features.
    pub xi: F,
    /// Ordinal decay: larger values concentrate moves on nearby levels.
    pub lambda: F,
    /// Columns to perturb.
    pub perturb_features: Vec<usize>,
    /// Replicas per original sample (k).
    pub replicas: usize,
    /// Number of perturbed validation sets (M).
    pub m_sets: usize,
    pub seed: u64,
}

impl<F: Scalar> PerturbationConfig<F> {
    /// All-columns config with the given controls.
    pub fn all_features(
        n_features: usize,
        sigma: F,
        xi: F,
        lambda: F,
        replicas: usize,
        m_sets: usize,
        seed: u64,
    ) -> Self {
        PerturbationConfig {
            sigma,
            xi,
            lambda,
            perturb_features: (0..n_features).collect(),
            replicas,
            m_sets,
            seed,
        }
    }

    /// Identity configuration: no noise, single replica, single set.
    pub fn identity(n_features: usize, seed: u64) -> Self {
        Self::all_features(n_features, F::zero(), F::zero(), F::zero(), 1, 1, seed)
    }

    pub fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        if self.sigma < F::zero() {
            return Err(Error::InvalidParameter("sigma must be >= 0".into()));
        }
        if self.xi < F::zero() || self.xi > F::one() {
            return Err(Error::InvalidParameter("xi must lie in [0, 1]".into()));
        }
        if self.lambda < F::zero() {
            return Err(Error::InvalidParameter("lambda must be >= 0".into()));
        }
        if self.replicas == 0 || self.m_sets == 0 {
            return Err(Error::InvalidParameter(
                "replicas and m_sets must be >= 1".into(),
            ));
        }
        for &col in &self.perturb_features {
            if col >= schema.len() {
                return Err(Error::SchemaMismatch(format!(
                    "perturbed column {col} outside schema of width {}",
                    schema.len()
                )));
            }
            let cardinality = match schema.kind(col) {
                FeatureKind::Numeric => continue,
                FeatureKind::Nominal { categories } => *categories,
                FeatureKind::Ordinal { levels } => *levels,
            };
            if cardinality < 2 && self.xi > F::zero() {
                return Err(Error::InvalidParameter(format!(
                    "column {col} has {cardinality} categories; cannot perturb with xi > 0"
                )));
            }
        }
        Ok(())
    }
}

/// Additive Gaussian noise: `x + eps`, `eps ~ Normal(0, sigma^2)`.
/// `sigma = 0` returns `x` exactly.
pub fn perturb_numeric<F: Scalar, R: Rng>(x: F, sigma: F, rng: &mut R) -> F {
    if sigma == F::zero() {
        return x;
    }
    let z = F::sample_standard_normal(rng);
    x + sigma * z
}

/// Nominal flip: keep `x` with probability `1 - xi`, otherwise move to one of
/// the remaining categories uniformly.
pub fn perturb_nominal<F: Scalar, R: Rng>(
    x: F,
    xi: F,
    categories: usize,
    rng: &mut R,
) -> Result<F> {
    if xi == F::zero() {
        return Ok(x);
    }
    if categories < 2 {
        return Err(Error::InvalidParameter(
            "nominal perturbation needs at least two categories".into(),
        ));
    }
    let code = x
        .to_usize()
        .filter(|&c| x.fract() == F::zero() && c < categories)
        .ok_or_else(|| Error::SchemaMismatch(format!("value {x} is not a code in 0..{categories}")))?;
    let u = F::sample_unit(rng);
    if u >= xi {
        return Ok(x);
    }
    let alt = rng.random_range(0..categories - 1);
    let chosen = if alt >= code { alt + 1 } else { alt };
    Ok(F::from_count(chosen as u64))
}

/// Ordinal move: keep `x` with probability `1 - xi`, otherwise move to level
/// `a != x` with probability proportional to `exp(-lambda * |rank(x) - rank(a)|)`.
/// `lambda = 0` reduces to the nominal rule.
pub fn perturb_ordinal<F: Scalar, R: Rng>(
    x: F,
    xi: F,
    lambda: F,
    levels: usize,
    rng: &mut R,
) -> Result<F> {
    if xi == F::zero() {
        return Ok(x);
    }
    if levels < 2 {
        return Err(Error::InvalidParameter(
            "ordinal perturbation needs at least two levels".into(),
        ));
    }
    let rank = x
        .to_usize()
        .filter(|&c| x.fract() == F::zero() && c < levels)
        .ok_or_else(|| Error::SchemaMismatch(format!("value {x} is not a level in 0..{levels}")))?;
    let u = F::sample_unit(rng);
    if u >= xi {
        return Ok(x);
    }
    let mut total = F::zero();
    let mut weights = Vec::with_capacity(levels - 1);
    for a in 0..levels {
        if a == rank {
            continue;
        }
        let distance = F::from_count(rank.abs_diff(a) as u64);
        let w = (-lambda * distance).exp();
        weights.push((a, w));
        total += w;
    }
    let v = F::sample_unit(rng) * total;
    let mut cumulative = F::zero();
    for &(a, w) in &weights {
        cumulative += w;
        if v < cumulative {
            return Ok(F::from_count(a as u64));
        }
    }
    // Rounding can leave v == total; take the last alternative.
    Ok(F::from_count(weights.last().unwrap().0 as u64))
}

fn perturb_value<F: Scalar, R: Rng>(
    x: F,
    kind: &FeatureKind,
    cfg: &PerturbationConfig<F>,
    rng: &mut R,
) -> Result<F> {
    match kind {
        FeatureKind::Numeric => Ok(perturb_numeric(x, cfg.sigma, rng)),
        FeatureKind::Nominal { categories } => perturb_nominal(x, cfg.xi, *categories, rng),
        FeatureKind::Ordinal { levels } => perturb_ordinal(x, cfg.xi, cfg.lambda, *levels, rng),
    }
}

/// Build the `set_index`-th perturbed validation set: `replicas` noisy copies
/// of every sample, labels copied verbatim.
///
/// Row layout: replicas of sample `i` occupy rows `i*k .. (i+1)*k`. Every
/// (sample, replica) owns an RNG stream derived from
/// `(seed, set_index, sample, replica)`, with features consumed in column
/// order, so sets are reproducible and mutually independent regardless of
/// how the work is scheduled.
pub fn build_perturbed_set<F: Scalar>(
    val: &Dataset<F>,
    cfg: &PerturbationConfig<F>,
    set_index: usize,
) -> Result<Dataset<F>> {
    if val.is_empty() {
        return Err(Error::EmptyInput("validation set"));
    }
    cfg.validate(&val.schema)?;
    let n = val.len();
    let k = cfg.replicas;
    let mut mask = vec![false; val.n_features()];
    for &col in &cfg.perturb_features {
        mask[col] = true;
    }
    let mut features = Matrix::zeros(n * k, val.n_features());
    let mut labels = Vec::with_capacity(n * k);
    for i in 0..n {
        let source = val.features.row(i);
        for j in 0..k {
            let mut rng: ChaCha8Rng =
                seeding::stream(cfg.seed, &[set_index as u64, i as u64, j as u64]);
            let out = features.row_mut(i * k + j);
            for (col, slot) in out.iter_mut().enumerate() {
                *slot = if mask[col] {
                    perturb_value(source[col], val.schema.kind(col), cfg, &mut rng)?
                } else {
                    source[col]
                };
            }
            labels.push(val.labels[i]);
        }
    }
    Dataset::new(
        features,
        labels,
        val.schema.clone(),
        format!("{} (perturbed m={set_index})", val.provenance),
    )
}
