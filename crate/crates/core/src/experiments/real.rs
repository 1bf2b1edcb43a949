//! Real-data model-selection protocol.
//!
//! A dataset is partitioned into disjoint subsets that each play the role of
//! a small cohort. Within a subset, every stratified fold trains a pool of
//! subsampled depth-bounded trees, selects one tree with the perturbation
//! procedure and one with the traditional rule, and judges the two choices by
//! their score on the subset's external test set (the complement of the
//! subset in the full data). Wins, ties and losses are tallied per noise
//! level and metric.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::data::{
    drop_and_impute, ingest_csv, partition_indices, stratified_k_fold, Dataset, FeatureKind,
    FeatureSchema, Scaler,
};
use crate::error::{Error, Result};
use crate::metrics::{ConfusionCounts, MetricSpec};
use crate::models::tree_subsample_pool;
use crate::perturb::PerturbationConfig;
use crate::seeding;
use crate::select::{perturbed_counts, select_from_counts, validation_counts, Aggregator};

/// External-test scores within this of each other count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Columns forced to a categorical kind, by header name. Codes are assigned
/// by rank of the sorted unique column values; imputed values snap to the
/// nearest observed value.
#[derive(Clone, Debug, Default)]
pub struct SchemaOverrides {
    pub nominal: Vec<String>,
    pub ordinal: Vec<String>,
}

/// Real-data protocol configuration.
#[derive(Clone, Debug)]
pub struct RealConfig {
    pub data_path: PathBuf,
    pub target_column: String,
    pub subset_size: usize,
    pub n_folds: usize,
    /// Cap on the number of subsets (handy for quick runs); `None` uses all.
    pub max_subsets: Option<usize>,
    pub sigma_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    /// Categorical change probability (nominal and ordinal).
    pub xi: f64,
    /// Ordinal decay.
    pub lambda: f64,
    pub replicas: usize,
    pub m_sets: usize,
    pub aggregator: Aggregator<f64>,
    pub tree_candidates: usize,
    pub subsample_frac: f64,
    pub max_depth: usize,
    pub drop_threshold: f64,
    pub impute_neighbors: usize,
    pub schema: SchemaOverrides,
    pub seed: u64,
}

impl RealConfig {
    pub fn new(data_path: impl Into<PathBuf>, target_column: impl Into<String>) -> Self {
        RealConfig {
            data_path: data_path.into(),
            target_column: target_column.into(),
            subset_size: 100,
            n_folds: 5,
            max_subsets: None,
            sigma_grid: vec![
                1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 2e-1, 3e-1, 4e-1, 5e-1,
            ],
            gamma_grid: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            xi: 0.1,
            lambda: 0.1,
            replicas: 7,
            m_sets: 100,
            aggregator: Aggregator::lower_quartile(),
            tree_candidates: 100,
            subsample_frac: 0.7,
            max_depth: 4,
            drop_threshold: 0.5,
            impute_neighbors: 5,
            schema: SchemaOverrides::default(),
            seed: 17,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subset_size == 0 || self.n_folds < 2 {
            return Err(Error::Config("subset_size >= 1 and n_folds >= 2 required".into()));
        }
        if self.sigma_grid.is_empty() || self.gamma_grid.is_empty() {
            return Err(Error::Config("sigma and gamma grids must be nonempty".into()));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(Error::Config(format!("xi {} outside [0, 1]", self.xi)));
        }
        if self.tree_candidates == 0 || self.replicas == 0 || self.m_sets == 0 {
            return Err(Error::Config("pool and perturbation sizes must be >= 1".into()));
        }
        Ok(())
    }

    fn tracks(&self) -> Vec<(String, MetricSpec<f64>)> {
        let mut tracks: Vec<(String, MetricSpec<f64>)> = self
            .gamma_grid
            .iter()
            .map(|&gamma| (format!("ie:{gamma}"), MetricSpec::Ie { gamma }))
            .collect();
        tracks.push(("f1".to_owned(), MetricSpec::F1));
        tracks
    }
}

/// Winner of one fold comparison.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    PvfWin,
    TradWin,
    Tie,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::PvfWin => "pvf",
            Outcome::TradWin => "traditional",
            Outcome::Tie => "tie",
        }
    }
}

/// One (subset, fold, sigma, track) comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldRecord {
    pub subset: usize,
    pub fold: usize,
    pub sigma: f64,
    pub track: String,
    pub pvf_choice: usize,
    pub trad_choice: usize,
    pub pvf_external: f64,
    pub trad_external: f64,
    pub outcome: Outcome,
}

/// Full protocol output.
#[derive(Clone, Debug, Default)]
pub struct RealOutput {
    pub records: Vec<FoldRecord>,
    pub rows: usize,
    pub features: usize,
    pub positives: usize,
    pub subsets: usize,
    pub folds_per_subset: usize,
}

/// Win/tie/loss percentages for one (track, sigma) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct RealSummaryRow {
    pub track: String,
    pub sigma: f64,
    pub folds: usize,
    pub pvf_wins: usize,
    pub trad_wins: usize,
    pub ties: usize,
    pub pvf_pct: f64,
    pub trad_pct: f64,
    pub tie_pct: f64,
}

impl RealOutput {
    pub fn summary(&self) -> Vec<RealSummaryRow> {
        let mut cells: Vec<(String, f64)> = Vec::new();
        for r in &self.records {
            let key = (r.track.clone(), r.sigma);
            if !cells.contains(&key) {
                cells.push(key);
            }
        }
        cells
            .into_iter()
            .map(|(track, sigma)| {
                let rows: Vec<&FoldRecord> = self
                    .records
                    .iter()
                    .filter(|r| r.track == track && r.sigma == sigma)
                    .collect();
                let folds = rows.len();
                let pvf_wins = rows.iter().filter(|r| r.outcome == Outcome::PvfWin).count();
                let trad_wins = rows.iter().filter(|r| r.outcome == Outcome::TradWin).count();
                let ties = folds - pvf_wins - trad_wins;
                let pct = |c: usize| 100.0 * c as f64 / folds.max(1) as f64;
                RealSummaryRow {
                    track,
                    sigma,
                    folds,
                    pvf_wins,
                    trad_wins,
                    ties,
                    pvf_pct: pct(pvf_wins),
                    trad_pct: pct(trad_wins),
                    tie_pct: pct(ties),
                }
            })
            .collect()
    }
}

/// Ingest and preprocess the configured dataset: parse, drop heavily missing
/// columns, impute, and apply schema overrides.
pub fn load_real_dataset(cfg: &RealConfig) -> Result<Dataset<f64>> {
    let table = ingest_csv::<f64>(&cfg.data_path, &cfg.target_column)?;
    let kept: Vec<(usize, String)> = table
        .headers
        .iter()
        .enumerate()
        .filter(|(j, _)| table.missing_fraction[*j] <= cfg.drop_threshold)
        .map(|(j, h)| (j, h.clone()))
        .collect();
    let mut dataset = drop_and_impute(&table, cfg.drop_threshold, cfg.impute_neighbors)?;
    apply_schema_overrides(&mut dataset, &kept, &cfg.schema)?;
    Ok(dataset)
}

fn apply_schema_overrides(
    dataset: &mut Dataset<f64>,
    kept_headers: &[(usize, String)],
    overrides: &SchemaOverrides,
) -> Result<()> {
    if overrides.nominal.is_empty() && overrides.ordinal.is_empty() {
        return Ok(());
    }
    let mut kinds: Vec<FeatureKind> = dataset.schema.kinds().to_vec();
    for (name, ordinal) in overrides
        .nominal
        .iter()
        .map(|n| (n, false))
        .chain(overrides.ordinal.iter().map(|n| (n, true)))
    {
        let col = kept_headers
            .iter()
            .position(|(_, h)| h == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?;
        // Rank-code the column: sorted unique observed values become
        // 0..levels; anything between (imputed means) snaps to the nearest.
        let mut unique: Vec<f64> = (0..dataset.len())
            .map(|i| dataset.features.get(i, col))
            .collect();
        unique.sort_by(|a, b| a.partial_cmp(b).unwrap());
        unique.dedup();
        let cardinality = unique.len();
        if cardinality < 2 {
            return Err(Error::SchemaMismatch(format!(
                "column {name} has a single value; cannot be categorical"
            )));
        }
        for i in 0..dataset.len() {
            let v = dataset.features.get(i, col);
            let code = match unique.binary_search_by(|u| u.partial_cmp(&v).unwrap()) {
                Ok(pos) => pos,
                Err(pos) => {
                    // snap to the nearest observed value; lower on ties
                    if pos == 0 {
                        0
                    } else if pos == cardinality {
                        cardinality - 1
                    } else if (v - unique[pos - 1]) <= (unique[pos] - v) {
                        pos - 1
                    } else {
                        pos
                    }
                }
            };
            dataset.features.set(i, col, code as f64);
        }
        kinds[col] = if ordinal {
            FeatureKind::Ordinal { levels: cardinality }
        } else {
            FeatureKind::Nominal { categories: cardinality }
        };
    }
    dataset.schema = FeatureSchema::new(kinds);
    dataset.schema.validate_matrix(&dataset.features)?;
    Ok(())
}

struct FoldTask {
    subset: usize,
    fold: usize,
    train_rows: Vec<usize>,
    val_rows: Vec<usize>,
    external_rows: Vec<usize>,
}

/// Run the protocol on a preprocessed dataset.
pub fn run_real_protocol(dataset: &Dataset<f64>, cfg: &RealConfig) -> Result<RealOutput> {
    cfg.validate()?;
    let (mut subsets, _remainder) =
        partition_indices(dataset.len(), cfg.subset_size, seeding::derive(cfg.seed, &[0]))?;
    if let Some(cap) = cfg.max_subsets {
        subsets.truncate(cap);
    }
    if subsets.is_empty() {
        return Err(Error::Config(format!(
            "dataset of {} rows yields no subsets of size {}",
            dataset.len(),
            cfg.subset_size
        )));
    }

    let mut tasks = Vec::new();
    for (s, subset_rows) in subsets.iter().enumerate() {
        let in_subset: std::collections::HashSet<usize> = subset_rows.iter().copied().collect();
        let external_rows: Vec<usize> =
            (0..dataset.len()).filter(|i| !in_subset.contains(i)).collect();
        let subset_ds = dataset.select(subset_rows);
        let folds = stratified_k_fold(&subset_ds, cfg.n_folds, seeding::derive(cfg.seed, &[1, s as u64]))?;
        for (f, (train_local, val_local)) in folds.into_iter().enumerate() {
            tasks.push(FoldTask {
                subset: s,
                fold: f,
                train_rows: train_local.iter().map(|&i| subset_rows[i]).collect(),
                val_rows: val_local.iter().map(|&i| subset_rows[i]).collect(),
                external_rows: external_rows.clone(),
            });
        }
    }

    let tracks = cfg.tracks();
    let per_task: Vec<Result<Vec<FoldRecord>>> = tasks
        .par_iter()
        .map(|task| run_fold(dataset, cfg, &tracks, task))
        .collect();
    let mut records = Vec::new();
    for task_records in per_task {
        records.extend(task_records?);
    }
    Ok(RealOutput {
        records,
        rows: dataset.len(),
        features: dataset.n_features(),
        positives: dataset.positives(),
        subsets: subsets.len(),
        folds_per_subset: cfg.n_folds,
    })
}

fn run_fold(
    dataset: &Dataset<f64>,
    cfg: &RealConfig,
    tracks: &[(String, MetricSpec<f64>)],
    task: &FoldTask,
) -> Result<Vec<FoldRecord>> {
    let train = dataset.select(&task.train_rows);
    let val = dataset.select(&task.val_rows);
    let external = dataset.select(&task.external_rows);

    // Scaling is fitted on the fold's training rows only; sigma is therefore
    // expressed in standardized units on every dataset it touches.
    let scaler = Scaler::fit(&train);
    let train = scaler.transform(&train)?;
    let val = scaler.transform(&val)?;
    let external = scaler.transform(&external)?;

    let pool_seed = seeding::derive(cfg.seed, &[2, task.subset as u64, task.fold as u64]);
    let pool = tree_subsample_pool(
        &train,
        cfg.tree_candidates,
        cfg.subsample_frac,
        cfg.max_depth,
        pool_seed,
    )?;

    let val_counts: Vec<Vec<ConfusionCounts>> = validation_counts(&pool, &val)?
        .into_iter()
        .map(|c| vec![c])
        .collect();
    let external_counts = validation_counts(&pool, &external)?;

    let mut records = Vec::new();
    for (sigma_idx, &sigma) in cfg.sigma_grid.iter().enumerate() {
        let _ = sigma_idx;
        let perturbation = PerturbationConfig {
            sigma,
            xi: cfg.xi,
            lambda: cfg.lambda,
            perturb_features: (0..dataset.n_features()).collect(),
            replicas: cfg.replicas,
            m_sets: cfg.m_sets,
            seed: seeding::derive(cfg.seed, &[3, task.subset as u64, task.fold as u64]),
        };
        let matrix = perturbed_counts(&pool, &val, &perturbation)?;
        for (label, metric) in tracks {
            let pvf = select_from_counts(&matrix, metric, &cfg.aggregator)?;
            let trad = select_from_counts(&val_counts, metric, &Aggregator::Mean)?;
            let pvf_external = metric.score(&external_counts[pvf.chosen])?;
            let trad_external = metric.score(&external_counts[trad.chosen])?;
            let outcome = if (pvf_external - trad_external).abs() <= TIE_TOLERANCE {
                Outcome::Tie
            } else if pvf_external > trad_external {
                Outcome::PvfWin
            } else {
                Outcome::TradWin
            };
            records.push(FoldRecord {
                subset: task.subset,
                fold: task.fold,
                sigma,
                track: label.clone(),
                pvf_choice: pvf.chosen,
                trad_choice: trad.chosen,
                pvf_external,
                trad_external,
                outcome,
            });
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SyntheticSpec};

    fn small_cfg() -> RealConfig {
        let mut cfg = RealConfig::new("unused", "label");
        cfg.subset_size = 40;
        cfg.n_folds = 4;
        cfg.sigma_grid = vec![0.0, 0.3];
        cfg.gamma_grid = vec![0.1];
        cfg.tree_candidates = 12;
        cfg.replicas = 2;
        cfg.m_sets = 8;
        cfg.seed = 5;
        cfg
    }

    fn toy_data() -> Dataset<f64> {
        gen_synthetic(&SyntheticSpec { n: 130, separation: 2.0, seed: 42 }).unwrap()
    }

    #[test]
    fn accounting_wins_plus_ties_equals_folds() {
        let data = toy_data();
        let cfg = small_cfg();
        let out = run_real_protocol(&data, &cfg).unwrap();
        // 3 subsets x 4 folds x 2 sigmas x 2 tracks
        assert_eq!(out.records.len(), 3 * 4 * 2 * 2);
        for row in out.summary() {
            assert_eq!(row.pvf_wins + row.trad_wins + row.ties, row.folds);
            assert_eq!(row.folds, 12);
        }
    }

    #[test]
    fn zero_sigma_zero_xi_gives_all_ties() {
        let data = toy_data();
        let mut cfg = small_cfg();
        cfg.sigma_grid = vec![0.0];
        cfg.xi = 0.0;
        let out = run_real_protocol(&data, &cfg).unwrap();
        for r in &out.records {
            assert_eq!(r.outcome, Outcome::Tie, "{r:?}");
            assert_eq!(r.pvf_choice, r.trad_choice);
        }
    }

    #[test]
    fn same_choice_is_a_tie() {
        let data = toy_data();
        let cfg = small_cfg();
        let out = run_real_protocol(&data, &cfg).unwrap();
        for r in &out.records {
            if r.pvf_choice == r.trad_choice {
                assert_eq!(r.outcome, Outcome::Tie);
                assert_eq!(r.pvf_external, r.trad_external);
            }
        }
    }

    #[test]
    fn protocol_is_deterministic() {
        let data = toy_data();
        let cfg = small_cfg();
        let a = run_real_protocol(&data, &cfg).unwrap();
        let b = run_real_protocol(&data, &cfg).unwrap();
        assert_eq!(a.records, b.records);
    }
}
