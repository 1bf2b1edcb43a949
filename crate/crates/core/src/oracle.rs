//! Monte Carlo validation of the intervention-efficiency closed form.
//!
//! The two-stage policy is simulated on explicit finite populations: up to
//! the budget, flagged individuals are treated first (uniformly sub-sampled
//! when the budget is scarce); any remaining budget is spent uniformly
//! without replacement on the residual pool. Captured-positive counts are
//! compared against the closed-form expectation, giving an independent check
//! of the formula that never touches its algebra.

use rand_distr::{Distribution, Hypergeometric};

use crate::error::{Error, Result};
use crate::metrics::ConfusionCounts;
use crate::seeding;

/// Trials per RNG shard. Totals are integer sums over shards in index order,
/// so results are identical no matter how shards are scheduled.
const SHARD_SIZE: u64 = 16_384;

/// An explicit finite population with a model's flags laid over it.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct PopulationSpec {
    /// Population size (beta).
    pub population: u64,
    /// Total positives in the population (alpha).
    pub positives: u64,
    /// Individuals the model flags positive.
    pub flagged: u64,
    /// True positives among the flagged.
    pub true_pos_flagged: u64,
    /// Intervention budget (c), an integer head count.
    pub budget: u64,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        let PopulationSpec {
            population,
            positives,
            flagged,
            true_pos_flagged,
            budget,
        } = *self;
        let mut problems = Vec::new();
        if population == 0 {
            problems.push("population must be >= 1".to_owned());
        }
        if positives > population {
            problems.push(format!("positives {positives} > population {population}"));
        }
        if flagged > population {
            problems.push(format!("flagged {flagged} > population {population}"));
        }
        if true_pos_flagged > flagged.min(positives) {
            problems.push(format!(
                "true positives in flagged {true_pos_flagged} > min(flagged, positives)"
            ));
        }
        if flagged.saturating_sub(true_pos_flagged) > population.saturating_sub(positives) {
            problems.push("more false flags than negatives in the population".to_owned());
        }
        if budget == 0 || budget > population {
            problems.push(format!("budget {budget} outside 1..=population"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InfeasibleSpec(problems.join("; ")))
        }
    }

    /// Confusion counts equivalent to this population.
    pub fn as_counts(&self) -> ConfusionCounts {
        let fpc = self.flagged - self.true_pos_flagged;
        ConfusionCounts {
            tpc: self.true_pos_flagged,
            fpc,
            fnc: self.positives - self.true_pos_flagged,
            tnc: self.population - self.positives - fpc,
        }
    }

    /// Budget as a capacity fraction of the population.
    pub fn capacity(&self) -> f64 {
        self.budget as f64 / self.population as f64
    }

    /// Exact expectation of captured positives under the two-stage policy:
    /// `c'*p + (c - c') * (alpha - c'*p) / (beta - c')` with
    /// `c' = min(c, flagged)`.
    pub fn exact_policy_expectation(&self) -> f64 {
        let beta = self.population as f64;
        let alpha = self.positives as f64;
        let flagged = self.flagged as f64;
        let c = self.budget as f64;
        if self.flagged == 0 {
            return c * alpha / beta;
        }
        let p = self.true_pos_flagged as f64 / flagged;
        let c_prime = c.min(flagged);
        let stage1 = c_prime * p;
        if c <= flagged || (beta - c_prime) == 0.0 {
            return stage1;
        }
        stage1 + (c - c_prime) * ((alpha - stage1) / (beta - c_prime))
    }

    /// Exact expectation of captured positives under uniform intervention.
    pub fn exact_uniform_expectation(&self) -> f64 {
        self.budget as f64 * self.positives as f64 / self.population as f64
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl Estimate {
    /// |observed - expected| <= z * SE.
    pub fn within(&self, expected: f64, z: f64) -> bool {
        (self.mean - expected).abs() <= z * self.std_error
    }
}

fn accumulate<S>(trials: u64, seed: u64, tag: u64, mut sampler: S) -> Estimate
where
    S: FnMut(&mut rand_chacha::ChaCha8Rng) -> u64,
{
    assert!(trials >= 1, "trials must be >= 1");
    let mut sum: u64 = 0;
    let mut sum_sq: u128 = 0;
    let shards = trials.div_ceil(SHARD_SIZE);
    for shard in 0..shards {
        let mut rng = seeding::stream(seed, &[tag, shard]);
        let in_shard = SHARD_SIZE.min(trials - shard * SHARD_SIZE);
        for _ in 0..in_shard {
            let captured = sampler(&mut rng);
            sum += captured;
            sum_sq += (captured as u128) * (captured as u128);
        }
    }
    let n = trials as f64;
    let mean = sum as f64 / n;
    let variance = if trials > 1 {
        ((sum_sq as f64) - n * mean * mean) / (n - 1.0)
    } else {
        0.0
    };
    Estimate {
        mean,
        std_error: (variance.max(0.0) / n).sqrt(),
        trials,
    }
}

/// Simulate the two-stage model-guided policy; returns the mean captured
/// positives per trial with its standard error.
pub fn simulate_policy(spec: &PopulationSpec, trials: u64, seed: u64) -> Result<Estimate> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let c = spec.budget;
    if c <= spec.flagged {
        // Scarce budget: treat c uniformly chosen flagged individuals. The
        // captured count is hypergeometric over the flagged pool.
        let dist = Hypergeometric::new(spec.flagged, spec.true_pos_flagged, c)
            .map_err(|e| Error::InfeasibleSpec(e.to_string()))?;
        Ok(accumulate(trials, seed, 0, |rng| dist.sample(rng)))
    } else {
        // Ample budget: all flagged treated (capturing exactly the flagged
        // true positives), remainder drawn uniformly from the residual pool.
        let residual_pool = spec.population - spec.flagged;
        let residual_pos = spec.positives - spec.true_pos_flagged;
        let remaining = c - spec.flagged;
        let dist = Hypergeometric::new(residual_pool, residual_pos, remaining)
            .map_err(|e| Error::InfeasibleSpec(e.to_string()))?;
        let base = spec.true_pos_flagged;
        Ok(accumulate(trials, seed, 0, |rng| base + dist.sample(rng)))
    }
}

/// Simulate uniform random intervention: draw `budget` individuals from the
/// population without replacement.
pub fn simulate_uniform(spec: &PopulationSpec, trials: u64, seed: u64) -> Result<Estimate> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let dist = Hypergeometric::new(spec.population, spec.positives, spec.budget)
        .map_err(|e| Error::InfeasibleSpec(e.to_string()))?;
    Ok(accumulate(trials, seed, 1, |rng| dist.sample(rng)))
}

/// Monte Carlo IE estimate: simulated policy mean divided by the exact
/// uniform expectation (the denominator is taken exactly to tighten the
/// estimate).
pub fn mc_ie(spec: &PopulationSpec, trials: u64, seed: u64) -> Result<Estimate> {
    if spec.positives == 0 {
        return Err(Error::NoPositives);
    }
    let policy = simulate_policy(spec, trials, seed)?;
    let uniform = spec.exact_uniform_expectation();
    Ok(Estimate {
        mean: policy.mean / uniform,
        std_error: policy.std_error / uniform,
        trials,
    })
}

/// One row of the formula-vs-simulation comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub spec: PopulationSpec,
    pub formula_ie: f64,
    pub mc_ie: f64,
    pub std_error: f64,
    /// `|formula - simulation| / SE`. Differences inside the float-noise
    /// floor report 0, which keeps deterministic specs (SE = 0) meaningful:
    /// their two computation paths may differ by an ulp.
    pub deviation_in_se: f64,
}

/// Absolute slack for float-path differences between the closed form and the
/// simulation's exact arithmetic; far above rounding noise, far below any
/// real formula error.
pub const FLOAT_NOISE_FLOOR: f64 = 1e-9;

/// Deterministic grid of feasible population specs spanning both budget
/// regimes (scarce: budget below the flagged count; ample: everything
/// flagged is treated). All derived quantities are integral by construction.
pub fn validation_grid() -> Vec<PopulationSpec> {
    let mut specs = Vec::new();
    for &population in &[40u64, 200, 1000] {
        for positive_pct in [5u64, 20, 50] {
            let positives = population * positive_pct / 100;
            for budget_pct in [10u64, 30, 70] {
                let budget = population * budget_pct / 100;
                for flagged_pct in [0u64, 10, 25, 60] {
                    let flagged = population * flagged_pct / 100;
                    for precision_pct in [30u64, 80] {
                        let true_pos = (flagged * precision_pct / 100).min(positives);
                        let spec = PopulationSpec {
                            population,
                            positives,
                            flagged,
                            true_pos_flagged: true_pos,
                            budget,
                        };
                        if spec.validate().is_ok() && !specs.contains(&spec) {
                            specs.push(spec);
                        }
                    }
                }
            }
        }
    }
    specs
}

/// Compare the closed-form IE against the Monte Carlo estimate on every
/// spec.
pub fn oracle_report(specs: &[PopulationSpec], trials: u64, seed: u64) -> Result<Vec<OracleRow>> {
    specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let counts = spec.as_counts();
            let formula_ie = crate::metrics::ie_counting(&counts, spec.capacity())?;
            let estimate = mc_ie(spec, trials, seeding::derive(seed, &[i as u64]))?;
            let delta = (formula_ie - estimate.mean).abs();
            let deviation_in_se = if delta <= FLOAT_NOISE_FLOOR {
                0.0
            } else if estimate.std_error > 0.0 {
                delta / estimate.std_error
            } else {
                f64::INFINITY
            };
            Ok(OracleRow {
                spec: *spec,
                formula_ie,
                mc_ie: estimate.mean,
                std_error: estimate.std_error,
                deviation_in_se,
            })
        })
        .collect()
}
