//! Datasets: feature matrices with binary labels and a per-column schema,
//! plus synthetic data generation, stratified splitting, standard scaling
//! and disjoint subsetting.

mod ingest;

pub use ingest::{drop_and_impute, ingest_csv, ingest_csv_with, RawTable, DEFAULT_MISSING_TOKENS};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeding;

/// Row-major dense matrix. Deliberately minimal: the library only needs row
/// access, column statistics and row selection.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::InvalidParameter("ragged rows".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[F]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    /// New matrix containing the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix<F> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Feature type tag; drives perturbation and scaling behaviour.
///
/// Categorical features are stored as integer-valued codes `0..cardinality`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Numeric,
    /// Unordered categories; a perturbation flips to one of the remaining
    /// categories uniformly.
    Nominal { categories: usize },
    /// Ordered levels; a perturbation moves to another level with mass
    /// decaying in the rank distance |i - j|.
    Ordinal { levels: usize },
}

impl FeatureKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, FeatureKind::Numeric)
    }
}

/// Per-column feature kinds for a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSchema {
    kinds: Vec<FeatureKind>,
}

impl FeatureSchema {
    pub fn new(kinds: Vec<FeatureKind>) -> Self {
        FeatureSchema { kinds }
    }

    pub fn all_numeric(n_cols: usize) -> Self {
        FeatureSchema {
            kinds: vec![FeatureKind::Numeric; n_cols],
        }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, col: usize) -> &FeatureKind {
        &self.kinds[col]
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    /// Check that every categorical value in `features` is an integral code
    /// inside its declared range.
    pub fn validate_matrix<F: Scalar>(&self, features: &Matrix<F>) -> Result<()> {
        if features.n_cols() != self.kinds.len() {
            return Err(Error::SchemaMismatch(format!(
                "schema has {} columns, matrix has {}",
                self.kinds.len(),
                features.n_cols()
            )));
        }
        for (j, kind) in self.kinds.iter().enumerate() {
            let size = match kind {
                FeatureKind::Numeric => continue,
                FeatureKind::Nominal { categories } => *categories,
                FeatureKind::Ordinal { levels } => *levels,
            };
            for i in 0..features.n_rows() {
                let v = features.get(i, j);
                let code = v.to_usize();
                let ok = v.fract() == F::zero() && code.map(|c| c < size).unwrap_or(false);
                if !ok {
                    return Err(Error::SchemaMismatch(format!(
                        "value {v} at row {i}, column {j} is not a code in 0..{size}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A feature matrix with binary labels, a schema and a provenance tag.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<F> {
    pub features: Matrix<F>,
    pub labels: Vec<bool>,
    pub schema: FeatureSchema,
    pub provenance: String,
}

impl<F: Scalar> Dataset<F> {
    pub fn new(
        features: Matrix<F>,
        labels: Vec<bool>,
        schema: FeatureSchema,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if features.n_rows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: features.n_rows(),
                right: labels.len(),
            });
        }
        schema.validate_matrix(&features)?;
        Ok(Dataset {
            features,
            labels,
            schema,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Row indices carrying the given label, in dataset order.
    pub fn class_indices(&self, label: bool) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Sub-dataset with the given rows, in order.
    pub fn select(&self, indices: &[usize]) -> Dataset<F> {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            schema: self.schema.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Parameters for the synthetic two-cluster task: a negative cluster at the
/// origin and a positive cluster at `(separation, separation)` in the first
/// two features, plus three irrelevant standard-normal features. Class
/// imbalance is fixed at 80% negatives / 20% positives.
#[derive(Copy, Clone, Debug)]
pub struct SyntheticSpec<F> {
    pub n: usize,
    pub separation: F,
    pub seed: u64,
}

pub const SYNTHETIC_FEATURES: usize = 5;

/// Generate the synthetic dataset. Deterministic given `spec.seed`.
pub fn gen_synthetic<F: Scalar>(spec: &SyntheticSpec<F>) -> Result<Dataset<F>> {
    if spec.n < 10 {
        return Err(Error::InvalidParameter(format!(
            "synthetic dataset needs n >= 10 to permit stratified splitting, got {}",
            spec.n
        )));
    }
    if spec.separation < F::zero() {
        return Err(Error::InvalidParameter("separation must be >= 0".into()));
    }
    let n_neg = (0.8 * spec.n as f64).round() as usize;
    let mut rng = seeding::stream(spec.seed, &[]);
    let mut features = Matrix::zeros(spec.n, SYNTHETIC_FEATURES);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let positive = i >= n_neg;
        let center = if positive { spec.separation } else { F::zero() };
        let row = features.row_mut(i);
        for (j, slot) in row.iter_mut().enumerate() {
            let z = F::sample_standard_normal(&mut rng);
            *slot = if j < 2 { center + z } else { z };
        }
        labels.push(positive);
    }
    Dataset::new(
        features,
        labels,
        FeatureSchema::all_numeric(SYNTHETIC_FEATURES),
        format!("synthetic(n={},mu={},seed={})", spec.n, spec.separation, spec.seed),
    )
}

/// Result of a stratified train/validation split.
#[derive(Clone, Debug)]
pub struct TrainValSplit<F> {
    pub train: Dataset<F>,
    pub val: Dataset<F>,
    /// Set when some class had a single member, which goes to train; the
    /// validation side then cannot be guaranteed to contain that class.
    pub forced_to_train: bool,
}

/// Stratified split with per-class proportional allocation.
///
/// Per class the train count is `round_ties_even(train_frac * class size)`
/// (banker's rounding), clamped so that classes with at least two members
/// appear on both sides. A single-member class goes to train and the result
/// is flagged.
pub fn stratified_split<F: Scalar>(
    dataset: &Dataset<F>,
    train_frac: f64,
    seed: u64,
) -> Result<TrainValSplit<F>> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train_frac must lie strictly inside (0, 1), got {train_frac}"
        )));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    let mut forced = false;
    for (class_tag, label) in [(0u64, false), (1u64, true)] {
        let mut members = dataset.class_indices(label);
        if members.is_empty() {
            continue;
        }
        if members.len() == 1 {
            train_idx.push(members[0]);
            forced = true;
            continue;
        }
        let mut rng = seeding::stream(seed, &[class_tag]);
        members.shuffle(&mut rng);
        let n = members.len();
        let raw = (train_frac * n as f64).round_ties_even() as usize;
        let n_train = raw.clamp(1, n - 1);
        train_idx.extend_from_slice(&members[..n_train]);
        val_idx.extend_from_slice(&members[n_train..]);
    }
    if val_idx.is_empty() {
        return Err(Error::InvalidParameter(
            "split leaves the validation side empty".into(),
        ));
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    Ok(TrainValSplit {
        train: dataset.select(&train_idx),
        val: dataset.select(&val_idx),
        forced_to_train: forced,
    })
}

/// Stratified k-fold index sets: each fold is `(train indices, val indices)`
/// over the rows of `dataset`. Class members are shuffled once and dealt
/// round-robin so every fold preserves the class ratio up to rounding.
pub fn stratified_k_fold<F: Scalar>(
    dataset: &Dataset<F>,
    k: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 || k > dataset.len() {
        return Err(Error::InvalidParameter(format!(
            "fold count {k} invalid for {} rows",
            dataset.len()
        )));
    }
    let mut fold_members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (class_tag, label) in [(0u64, false), (1u64, true)] {
        let mut members = dataset.class_indices(label);
        let mut rng = seeding::stream(seed, &[class_tag]);
        members.shuffle(&mut rng);
        for (pos, idx) in members.into_iter().enumerate() {
            fold_members[pos % k].push(idx);
        }
    }
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let mut val: Vec<usize> = fold_members[f].clone();
        val.sort_unstable();
        let mut train: Vec<usize> = fold_members
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, m)| m.iter().copied())
            .collect();
        train.sort_unstable();
        folds.push((train, val));
    }
    Ok(folds)
}

/// Standard-scaling transform fitted on a training set.
///
/// Per numeric column: `(x - mean) / std` with population standard deviation;
/// zero-variance columns are centered only. Categorical columns pass through
/// untouched so their codes stay valid.
#[derive(Clone, Debug)]
pub struct Scaler<F> {
    means: Vec<F>,
    stds: Vec<F>,
    numeric: Vec<bool>,
}

impl<F: Scalar> Scaler<F> {
    pub fn fit(train: &Dataset<F>) -> Self {
        let n = train.len().max(1);
        let p = train.n_features();
        let n_f = F::from_count(n as u64);
        let mut means = vec![F::zero(); p];
        let mut stds = vec![F::zero(); p];
        for row in train.features.rows_iter() {
            for (j, &v) in row.iter().enumerate() {
                means[j] += v;
            }
        }
        for m in &mut means {
            *m /= n_f;
        }
        for row in train.features.rows_iter() {
            for (j, &v) in row.iter().enumerate() {
                let d = v - means[j];
                stds[j] += d * d;
            }
        }
        for s in &mut stds {
            *s = (*s / n_f).sqrt();
        }
        Scaler {
            means,
            stds,
            numeric: train.schema.kinds().iter().map(FeatureKind::is_numeric).collect(),
        }
    }

    pub fn transform(&self, dataset: &Dataset<F>) -> Result<Dataset<F>> {
        if dataset.n_features() != self.means.len() {
            return Err(Error::SchemaMismatch(format!(
                "scaler fitted on {} columns, dataset has {}",
                self.means.len(),
                dataset.n_features()
            )));
        }
        let mut out = dataset.clone();
        for i in 0..out.len() {
            let row = out.features.row_mut(i);
            for (j, slot) in row.iter_mut().enumerate() {
                if !self.numeric[j] {
                    continue;
                }
                let centered = *slot - self.means[j];
                *slot = if self.stds[j] > F::zero() {
                    centered / self.stds[j]
                } else {
                    centered
                };
            }
        }
        Ok(out)
    }
}

/// Fit on `train` and transform train plus any number of companion sets with
/// the training statistics.
pub fn standard_scale<F: Scalar>(
    train: &Dataset<F>,
    others: &[&Dataset<F>],
) -> Result<(Dataset<F>, Vec<Dataset<F>>)> {
    let scaler = Scaler::fit(train);
    let scaled_train = scaler.transform(train)?;
    let scaled_others = others
        .iter()
        .map(|ds| scaler.transform(ds))
        .collect::<Result<Vec<_>>>()?;
    Ok((scaled_train, scaled_others))
}

/// Disjoint subset indices after a seeded shuffle: `floor(n / size)` subsets
/// of exactly `size` rows plus the remainder.
pub fn partition_indices(n: usize, size: usize, seed: u64) -> Result<(Vec<Vec<usize>>, Vec<usize>)> {
    if size == 0 || size > n {
        return Err(Error::InvalidParameter(format!(
            "subset size {size} invalid for {n} rows"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seeding::stream(seed, &[]);
    order.shuffle(&mut rng);
    let n_subsets = n / size;
    let mut subsets = Vec::with_capacity(n_subsets);
    for s in 0..n_subsets {
        let mut idx = order[s * size..(s + 1) * size].to_vec();
        idx.sort_unstable();
        subsets.push(idx);
    }
    let mut remainder = order[n_subsets * size..].to_vec();
    remainder.sort_unstable();
    Ok((subsets, remainder))
}

/// Disjoint subsets of `dataset` plus the remainder rows.
pub fn partition_subsets<F: Scalar>(
    dataset: &Dataset<F>,
    size: usize,
    seed: u64,
) -> Result<(Vec<Dataset<F>>, Dataset<F>)> {
    let (subsets, remainder) = partition_indices(dataset.len(), size, seed)?;
    Ok((
        subsets.iter().map(|idx| dataset.select(idx)).collect(),
        dataset.select(&remainder),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset(n_pos: usize, n_neg: usize) -> Dataset<f64> {
        let n = n_pos + n_neg;
        let mut features = Matrix::zeros(n, 2);
        let mut labels = vec![false; n];
        for i in 0..n {
            features.set(i, 0, i as f64);
            features.set(i, 1, (i as f64) * 0.5 - 1.0);
            labels[i] = i < n_pos;
        }
        Dataset::new(features, labels, FeatureSchema::all_numeric(2), "toy").unwrap()
    }

    #[test]
    fn synthetic_class_counts() {
        let ds = gen_synthetic(&SyntheticSpec { n: 50, separation: 1.0, seed: 3 }).unwrap();
        assert_eq!(ds.len(), 50);
        assert_eq!(ds.positives(), 10);
        assert_eq!(ds.n_features(), 5);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = SyntheticSpec { n: 64, separation: 2.0, seed: 11 };
        assert_eq!(gen_synthetic(&spec).unwrap(), gen_synthetic(&spec).unwrap());
    }

    #[test]
    fn synthetic_class_conditional_means_converge() {
        let mu = 1.7f64;
        let ds = gen_synthetic(&SyntheticSpec { n: 20_000, separation: mu, seed: 5 }).unwrap();
        for label in [false, true] {
            let idx = ds.class_indices(label);
            let n = idx.len() as f64;
            for j in 0..2 {
                let mean: f64 = idx.iter().map(|&i| ds.features.get(i, j)).sum::<f64>() / n;
                let expected = if label { mu } else { 0.0 };
                let bound = 3.0 / n.sqrt();
                assert!(
                    (mean - expected).abs() < bound,
                    "feature {j}, label {label}: {mean} vs {expected} (bound {bound})"
                );
            }
        }
    }

    #[test]
    fn split_hand_trace_50_rows() {
        // 10 positives, 40 negatives at 70/30: val takes 3 positives and 12
        // negatives by banker's rounding.
        let ds = toy_dataset(10, 40);
        let split = stratified_split(&ds, 0.7, 9).unwrap();
        assert_eq!(split.val.positives(), 3);
        assert_eq!(split.val.len(), 15);
        assert_eq!(split.train.positives(), 7);
        assert_eq!(split.train.len(), 35);
        assert!(!split.forced_to_train);
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let ds = toy_dataset(5, 5);
        assert!(stratified_split(&ds, 1.0, 0).is_err());
        assert!(stratified_split(&ds, 0.0, 0).is_err());
    }

    #[test]
    fn split_is_reproducible_and_seed_sensitive() {
        let ds = toy_dataset(20, 60);
        let a = stratified_split(&ds, 0.7, 42).unwrap();
        let b = stratified_split(&ds, 0.7, 42).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.val, b.val);
        let c = stratified_split(&ds, 0.7, 43).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn split_single_member_class_goes_to_train() {
        let ds = toy_dataset(1, 7);
        let split = stratified_split(&ds, 0.7, 0).unwrap();
        assert!(split.forced_to_train);
        assert_eq!(split.train.positives(), 1);
        assert_eq!(split.val.positives(), 0);
    }

    #[test]
    fn k_fold_partitions_and_stratifies() {
        let ds = toy_dataset(30, 70);
        let folds = stratified_k_fold(&ds, 5, 1).unwrap();
        assert_eq!(folds.len(), 5);
        let mut seen = vec![0usize; ds.len()];
        for (train, val) in &folds {
            assert_eq!(train.len() + val.len(), ds.len());
            let val_pos = val.iter().filter(|&&i| ds.labels[i]).count();
            assert_eq!(val_pos, 6);
            for &i in val {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1), "each row in exactly one val fold");
    }

    #[test]
    fn scaler_normalizes_train_and_reuses_stats() {
        let mut features = Matrix::zeros(4, 3);
        for i in 0..4 {
            features.set(i, 0, i as f64);
            features.set(i, 1, 10.0);
            features.set(i, 2, 2.0 * i as f64 + 1.0);
        }
        let ds = Dataset::new(features, vec![true, false, true, false], FeatureSchema::all_numeric(3), "t").unwrap();
        let scaled = Scaler::fit(&ds).transform(&ds).unwrap();
        for j in [0usize, 2] {
            let mean: f64 = (0..4).map(|i| scaled.features.get(i, j)).sum::<f64>() / 4.0;
            let var: f64 = (0..4).map(|i| scaled.features.get(i, j).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
        // constant column becomes zeros
        assert!((0..4).all(|i| scaled.features.get(i, 1) == 0.0));

        // companion set transformed with train statistics, not its own
        let mut other = Matrix::zeros(2, 3);
        other.set(0, 0, 1.5);
        other.set(1, 0, 1.5);
        other.set(0, 1, 11.0);
        other.set(1, 1, 11.0);
        let other_ds =
            Dataset::new(other, vec![true, false], FeatureSchema::all_numeric(3), "o").unwrap();
        let (_, scaled_others) = standard_scale(&ds, &[&other_ds]).unwrap();
        let sv = scaled_others[0].features.get(0, 0);
        // train mean 1.5, std sqrt(5/4): value 1.5 maps to 0, not to its own z-score
        assert!(sv.abs() < 1e-12);
        assert!((scaled_others[0].features.get(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partition_shapes_match_protocol() {
        let (subsets, remainder) = partition_indices(569, 100, 7).unwrap();
        assert_eq!(subsets.len(), 5);
        assert_eq!(remainder.len(), 69);
        let (subsets, remainder) = partition_indices(668, 100, 7).unwrap();
        assert_eq!(subsets.len(), 6);
        assert_eq!(remainder.len(), 68);
    }

    #[test]
    fn partition_is_disjoint_and_covers() {
        let (subsets, remainder) = partition_indices(237, 50, 21).unwrap();
        let mut all: Vec<usize> = subsets.iter().flatten().copied().chain(remainder).collect();
        all.sort_unstable();
        assert_eq!(all, (0..237).collect::<Vec<_>>());
    }

    #[test]
    fn schema_rejects_out_of_range_codes() {
        let features = Matrix::from_vec(2, 1, vec![0.0, 3.0]).unwrap();
        let schema = FeatureSchema::new(vec![FeatureKind::Nominal { categories: 3 }]);
        assert!(schema.validate_matrix(&features).is_err());
        let ok = Matrix::from_vec(2, 1, vec![0.0, 2.0]).unwrap();
        assert!(schema.validate_matrix(&ok).is_ok());
    }
}
