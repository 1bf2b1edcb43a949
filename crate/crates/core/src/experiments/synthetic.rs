//! Synthetic model-selection sweep.
//!
//! For every configuration `(n, mu, sigma)` the sweep repeatedly generates a
//! two-cluster dataset, trains the ten pairwise logistic candidates on the
//! SMOTE-balanced training split, selects a candidate with the perturbation
//! procedure and with the traditional single-split rule, and records whether
//! each strategy picked the truly informative pair `(x1, x2)`. Selection
//! counts are compared per configuration via `d = c_pvf - c_trad` with paired
//! significance tests.

use rayon::prelude::*;

use crate::data::{gen_synthetic, stratified_split, Dataset, SyntheticSpec};
use crate::error::{Error, Result};
use crate::experiments::stats;
use crate::metrics::MetricSpec;
use crate::models::{logistic_pair_pool, smote_balance, LogisticModel};
use crate::perturb::PerturbationConfig;
use crate::seeding;
use crate::select::{perturbed_counts, select_from_counts, validation_counts, Aggregator};

/// The informative feature pair planted by the synthetic generator.
pub const TRUE_PAIR: (usize, usize) = (0, 1);

/// Separability threshold for the traditional-metric track: F1 at or below,
/// accuracy above (the regime where accuracy separates candidates better).
pub const CLASSIC_METRIC_SWITCH: f64 = 2.5;

const TRAIN_FRAC: f64 = 0.7;
const SMOTE_NEIGHBORS: usize = 5;
const POOL_FEATURES: usize = 5;
const MAX_RETRIES: u64 = 10;

/// Sweep definition. `sigma_grid` values reuse the same generated datasets
/// per `(n, mu, rep)`, pairing the comparison across noise levels.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub mu_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    /// Replicas per sample in each perturbed set (k).
    pub replicas: usize,
    /// Number of perturbed sets (M).
    pub m_sets: usize,
    pub aggregator: Aggregator<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sizes: vec![50, 100],
            mu_grid: (0..15).map(|i| 0.1 + 0.2 * i as f64).collect(),
            sigma_grid: vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
            gamma_grid: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            reps: 300,
            seed: 17,
            replicas: 7,
            m_sets: 100,
            aggregator: Aggregator::lower_quartile(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.mu_grid.is_empty() || self.sigma_grid.is_empty() {
            return Err(Error::Config("sweep grids must be nonempty".into()));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be >= 1".into()));
        }
        if self.replicas == 0 || self.m_sets == 0 {
            return Err(Error::Config("replicas and m_sets must be >= 1".into()));
        }
        for &g in &self.gamma_grid {
            if !(0.0 < g && g <= 1.0) {
                return Err(Error::Config(format!("capacity {g} outside (0, 1]")));
            }
        }
        for &s in &self.sigma_grid {
            if s < 0.0 {
                return Err(Error::Config(format!("sigma {s} negative")));
            }
        }
        Ok(())
    }

    /// Metric tracks evaluated at separability `mu`: IE at every capacity in
    /// the grid, then the traditional-metric track (F1 for low separability,
    /// accuracy for high).
    pub fn tracks(&self, mu: f64) -> Vec<Track> {
        let mut tracks: Vec<Track> = self
            .gamma_grid
            .iter()
            .map(|&gamma| Track {
                label: format!("ie:{gamma}"),
                metric: MetricSpec::Ie { gamma },
            })
            .collect();
        tracks.push(Track {
            label: "classic".to_owned(),
            metric: classic_metric(mu),
        });
        tracks
    }
}

/// Traditional-metric switching rule.
pub fn classic_metric(mu: f64) -> MetricSpec<f64> {
    if mu <= CLASSIC_METRIC_SWITCH {
        MetricSpec::F1
    } else {
        MetricSpec::Accuracy
    }
}

/// A metric track within the sweep: a stable label plus the metric used.
#[derive(Clone, Debug)]
pub struct Track {
    pub label: String,
    pub metric: MetricSpec<f64>,
}

/// Per-track outcome of a single repetition.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct TrackOutcome {
    pub pvf_correct: bool,
    pub trad_correct: bool,
}

/// Outcome of one repetition at one `(n, mu, sigma)`.
#[derive(Clone, Debug)]
pub struct RepOutcome {
    /// Aligned with `SweepConfig::tracks(mu)`.
    pub per_track: Vec<TrackOutcome>,
    pub retries: u64,
}

/// Candidate pool and validation split prepared for one repetition
/// (shareable among every sigma evaluated on that repetition).
pub struct PreparedRep {
    pub pool: Vec<LogisticModel<f64>>,
    pub val: Dataset<f64>,
    pub retries: u64,
}

/// Generate, split, balance and train the ten-pair pool for one repetition.
///
/// Metric preconditions (a validation fold with no positives, a degenerate
/// training class) trigger a deterministic re-split with a derived retry
/// seed, bounded at 10 attempts.
pub fn prepare_rep(n: usize, mu: f64, rep_seed: u64) -> Result<PreparedRep> {
    let data = gen_synthetic(&SyntheticSpec {
        n,
        separation: mu,
        seed: seeding::derive(rep_seed, &[0]),
    })?;
    let mut last_err = None;
    for retry in 0..MAX_RETRIES {
        let split = match stratified_split(&data, TRAIN_FRAC, seeding::derive(rep_seed, &[1, retry])) {
            Ok(s) => s,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        if split.val.positives() == 0 {
            last_err = Some(Error::NoPositives);
            continue;
        }
        let balanced = match smote_balance(&split.train, SMOTE_NEIGHBORS, seeding::derive(rep_seed, &[2, retry])) {
            Ok(b) => b,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        match logistic_pair_pool(&balanced, POOL_FEATURES) {
            Ok(mut pool) => {
                // Candidate order is shuffled per repetition. Selection breaks
                // exact ties by lowest index, and on validation sets this
                // small ties are frequent; a fixed order would hand whichever
                // pair sits first a systematic advantage and the measured
                // d would track candidate position instead of robustness.
                use rand::seq::SliceRandom;
                pool.shuffle(&mut seeding::stream(rep_seed, &[4]));
                return Ok(PreparedRep {
                    pool,
                    val: split.val,
                    retries: retry,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(Error::NoPositives))
}

/// Evaluate a prepared repetition at one noise level, returning outcomes per
/// track. Perturbed sets are shared across candidates and across tracks: the
/// confusion counts are computed once and every metric is scored from them.
pub fn eval_prepared(
    prepared: &PreparedRep,
    sigma: f64,
    tracks: &[Track],
    cfg: &SweepConfig,
    rep_seed: u64,
) -> Result<RepOutcome> {
    let perturbation = PerturbationConfig::all_features(
        prepared.val.n_features(),
        sigma,
        0.0,
        0.0,
        cfg.replicas,
        cfg.m_sets,
        seeding::derive(rep_seed, &[3]),
    );
    let matrix = perturbed_counts(&prepared.pool, &prepared.val, &perturbation)?;
    let val_counts: Vec<_> = validation_counts(&prepared.pool, &prepared.val)?
        .into_iter()
        .map(|c| vec![c])
        .collect();
    let mut per_track = Vec::with_capacity(tracks.len());
    for track in tracks {
        let pvf = select_from_counts(&matrix, &track.metric, &cfg.aggregator)?;
        let trad = select_from_counts(&val_counts, &track.metric, &Aggregator::Mean)?;
        // Correctness keys on the selected model's feature pair, never on
        // its position in the (shuffled) pool.
        per_track.push(TrackOutcome {
            pvf_correct: prepared.pool[pvf.chosen].pair == TRUE_PAIR,
            trad_correct: prepared.pool[trad.chosen].pair == TRUE_PAIR,
        });
    }
    Ok(RepOutcome {
        per_track,
        retries: prepared.retries,
    })
}

/// One full repetition at configuration `(n, mu, sigma)`.
pub fn run_synthetic_rep(
    n: usize,
    mu: f64,
    sigma: f64,
    cfg: &SweepConfig,
    rep_seed: u64,
) -> Result<RepOutcome> {
    let prepared = prepare_rep(n, mu, rep_seed)?;
    eval_prepared(&prepared, sigma, &cfg.tracks(mu), cfg, rep_seed)
}

/// Aggregated results for one `(n, mu, sigma)` configuration and one track.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigResult {
    pub size: usize,
    pub mu: f64,
    pub sigma: f64,
    pub track: String,
    pub metric: String,
    pub reps: usize,
    /// Repetitions in which the perturbation procedure picked the true pair.
    pub c_pvf: u64,
    /// Repetitions in which the traditional rule picked the true pair.
    pub c_trad: u64,
    /// Discordant repetitions: only the perturbation procedure correct.
    pub pvf_only: u64,
    /// Discordant repetitions: only the traditional rule correct.
    pub trad_only: u64,
    /// `c_pvf - c_trad`.
    pub d: i64,
    pub p_mcnemar: f64,
    pub p_ttest: f64,
    pub retries: u64,
}

/// Complete sweep output.
#[derive(Clone, Debug, Default)]
pub struct SweepOutput {
    pub results: Vec<ConfigResult>,
}

/// Per-track share of configurations with a strictly positive selection
/// difference.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackSummary {
    pub track: String,
    pub configs: usize,
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub percent_positive: f64,
}

impl SweepOutput {
    pub fn summary(&self) -> Vec<TrackSummary> {
        let mut tracks: Vec<String> = Vec::new();
        for r in &self.results {
            if !tracks.contains(&r.track) {
                tracks.push(r.track.clone());
            }
        }
        tracks
            .into_iter()
            .map(|track| {
                let rows: Vec<&ConfigResult> =
                    self.results.iter().filter(|r| r.track == track).collect();
                let positive = rows.iter().filter(|r| r.d > 0).count();
                let negative = rows.iter().filter(|r| r.d < 0).count();
                let configs = rows.len();
                TrackSummary {
                    track,
                    configs,
                    positive,
                    negative,
                    zero: configs - positive - negative,
                    percent_positive: 100.0 * positive as f64 / configs.max(1) as f64,
                }
            })
            .collect()
    }
}

/// Seed for one repetition. Tagged by the configuration values rather than
/// grid positions, so restricting a grid never reshuffles the per-rep data.
pub fn rep_seed(master: u64, n: usize, mu: f64, rep: usize) -> u64 {
    seeding::derive(master, &[n as u64, mu.to_bits(), rep as u64])
}

/// Run the full sweep. Deterministic given the config (including worker
/// count: repetitions are processed in parallel but reduced in index order).
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    // Work units: one per (size, mu, rep); each evaluates every sigma.
    let mut units = Vec::new();
    for &n in &cfg.sizes {
        for &mu in &cfg.mu_grid {
            for rep in 0..cfg.reps {
                units.push((n, mu, rep));
            }
        }
    }
    let outcomes: Vec<Result<Vec<RepOutcome>>> = units
        .par_iter()
        .map(|&(n, mu, rep)| {
            let seed = rep_seed(cfg.seed, n, mu, rep);
            let prepared = prepare_rep(n, mu, seed)?;
            let tracks = cfg.tracks(mu);
            cfg.sigma_grid
                .iter()
                .map(|&sigma| eval_prepared(&prepared, sigma, &tracks, cfg, seed))
                .collect()
        })
        .collect();

    let mut results = Vec::new();
    for &n in &cfg.sizes {
        for &mu in &cfg.mu_grid {
            let tracks = cfg.tracks(mu);
            let unit_indices: Vec<usize> = units
                .iter()
                .enumerate()
                .filter(|(_, &(un, umu, _))| un == n && umu == mu)
                .map(|(i, _)| i)
                .collect();
            let mut per_sigma_outcomes: Vec<&Vec<RepOutcome>> = Vec::new();
            for &unit_idx in &unit_indices {
                match &outcomes[unit_idx] {
                    Ok(o) => per_sigma_outcomes.push(o),
                    Err(e) => {
                        return Err(Error::Config(format!(
                            "repetition failed at n={n}, mu={mu}: {e}"
                        )))
                    }
                }
            }
            let retries: u64 = per_sigma_outcomes
                .iter()
                .map(|per_sigma| per_sigma[0].retries)
                .sum();
            for (sigma_idx, &sigma) in cfg.sigma_grid.iter().enumerate() {
                for (track_idx, track) in tracks.iter().enumerate() {
                    let mut c_pvf = 0u64;
                    let mut c_trad = 0u64;
                    let mut pvf_only = 0u64;
                    let mut trad_only = 0u64;
                    let mut diffs = Vec::with_capacity(cfg.reps);
                    for per_sigma in &per_sigma_outcomes {
                        let t = per_sigma[sigma_idx].per_track[track_idx];
                        c_pvf += t.pvf_correct as u64;
                        c_trad += t.trad_correct as u64;
                        pvf_only += (t.pvf_correct && !t.trad_correct) as u64;
                        trad_only += (!t.pvf_correct && t.trad_correct) as u64;
                        diffs.push(t.pvf_correct as i8 as f64 - t.trad_correct as i8 as f64);
                    }
                    results.push(ConfigResult {
                        size: n,
                        mu,
                        sigma,
                        track: track.label.clone(),
                        metric: track.metric.to_string(),
                        reps: diffs.len(),
                        c_pvf,
                        c_trad,
                        pvf_only,
                        trad_only,
                        d: c_pvf as i64 - c_trad as i64,
                        p_mcnemar: stats::mcnemar_exact_p(pvf_only, trad_only),
                        p_ttest: stats::paired_t_p(&diffs),
                        retries,
                    });
                }
            }
        }
    }
    Ok(SweepOutput { results })
}

/// Separability band of a `mu` value: low (<= 0.9), moderate (1.1 - 1.9) or
/// high (>= 2.1) on the standard grid.
pub fn separability_band(mu: f64) -> &'static str {
    if mu <= 0.95 {
        "low"
    } else if mu <= 1.95 {
        "moderate"
    } else {
        "high"
    }
}

/// One sensitivity curve: mean selection difference per sigma for a
/// (size, band, track) cell.
#[derive(Clone, Debug)]
pub struct SensitivityCurve {
    pub size: usize,
    pub band: &'static str,
    pub track: String,
    /// `(sigma, mean d over the band's mu values)` sorted by sigma.
    pub points: Vec<(f64, f64)>,
    /// Trend check over sigma (reported, not asserted): whether the curve is
    /// non-decreasing.
    pub nondecreasing: bool,
}

/// Stratify sweep results into per-sigma curves of mean `d` by separability
/// band.
pub fn sensitivity_report(results: &[ConfigResult]) -> Vec<SensitivityCurve> {
    let mut keys: Vec<(usize, &'static str, String)> = Vec::new();
    for r in results {
        let key = (r.size, separability_band(r.mu), r.track.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(size, band, track)| {
            let mut sigmas: Vec<f64> = Vec::new();
            for r in results {
                if r.size == size && separability_band(r.mu) == band && r.track == track
                    && !sigmas.contains(&r.sigma)
                {
                    sigmas.push(r.sigma);
                }
            }
            sigmas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let points: Vec<(f64, f64)> = sigmas
                .iter()
                .map(|&sigma| {
                    let ds: Vec<f64> = results
                        .iter()
                        .filter(|r| {
                            r.size == size
                                && r.sigma == sigma
                                && r.track == track
                                && separability_band(r.mu) == band
                        })
                        .map(|r| r.d as f64)
                        .collect();
                    (sigma, ds.iter().sum::<f64>() / ds.len().max(1) as f64)
                })
                .collect();
            let nondecreasing = points.windows(2).all(|w| w[1].1 >= w[0].1);
            SensitivityCurve {
                size,
                band,
                track,
                points,
                nondecreasing,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> SweepConfig {
        SweepConfig {
            sizes: vec![50],
            mu_grid: vec![0.5, 2.7],
            sigma_grid: vec![0.0, 1e-1],
            gamma_grid: vec![0.1, 0.5],
            reps: 3,
            seed: 99,
            replicas: 2,
            m_sets: 5,
            aggregator: Aggregator::lower_quartile(),
        }
    }

    #[test]
    fn single_rep_differences_are_in_range() {
        let mut cfg = tiny_config();
        cfg.reps = 1;
        let out = run_sweep(&cfg).unwrap();
        for r in &out.results {
            assert!((-1..=1).contains(&r.d), "{r:?}");
            assert_eq!(r.reps, 1);
        }
    }

    #[test]
    fn zero_sigma_column_has_zero_differences() {
        let out = run_sweep(&tiny_config()).unwrap();
        for r in out.results.iter().filter(|r| r.sigma == 0.0) {
            assert_eq!(r.d, 0, "{r:?}");
            assert_eq!(r.pvf_only, 0);
            assert_eq!(r.trad_only, 0);
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let a = run_sweep(&tiny_config()).unwrap();
        let b = run_sweep(&tiny_config()).unwrap();
        assert_eq!(a.results, b.results);
    }

    #[test]
    fn counts_bounded_by_reps() {
        let out = run_sweep(&tiny_config()).unwrap();
        for r in &out.results {
            assert!(r.c_pvf <= r.reps as u64);
            assert!(r.c_trad <= r.reps as u64);
        }
    }

    #[test]
    fn classic_track_switches_metric() {
        let cfg = tiny_config();
        let low = cfg.tracks(0.5);
        assert_eq!(low.last().unwrap().metric, MetricSpec::F1);
        let high = cfg.tracks(2.7);
        assert_eq!(high.last().unwrap().metric, MetricSpec::Accuracy);
    }

    #[test]
    fn no_signal_selection_is_near_uniform() {
        // mu = 0: no informative pair, both methods pick the true pair at
        // roughly the chance rate 1/10.
        let cfg = SweepConfig {
            sizes: vec![50],
            mu_grid: vec![0.0],
            sigma_grid: vec![1e-3],
            gamma_grid: vec![0.3],
            reps: 300,
            seed: 7,
            replicas: 2,
            m_sets: 10,
            aggregator: Aggregator::lower_quartile(),
        };
        let out = run_sweep(&cfg).unwrap();
        for r in &out.results {
            let rate_pvf = r.c_pvf as f64 / r.reps as f64;
            let rate_trad = r.c_trad as f64 / r.reps as f64;
            for rate in [rate_pvf, rate_trad] {
                assert!((0.03..=0.25).contains(&rate), "rate {rate} for {r:?}");
            }
        }
    }

    #[test]
    fn bands_partition_the_grid() {
        let grid: Vec<f64> = (0..15).map(|i| 0.1 + 0.2 * i as f64).collect();
        let low = grid.iter().filter(|&&m| separability_band(m) == "low").count();
        let moderate = grid.iter().filter(|&&m| separability_band(m) == "moderate").count();
        let high = grid.iter().filter(|&&m| separability_band(m) == "high").count();
        assert_eq!((low, moderate, high), (5, 5, 5));
    }

    #[test]
    fn sensitivity_curves_cover_tracks_and_sigmas() {
        let out = run_sweep(&tiny_config()).unwrap();
        let curves = sensitivity_report(&out.results);
        // 1 size x 2 bands x 3 tracks
        assert_eq!(curves.len(), 6);
        for c in &curves {
            assert_eq!(c.points.len(), 2);
            assert!(c.points[0].0 < c.points[1].0);
        }
    }
}
