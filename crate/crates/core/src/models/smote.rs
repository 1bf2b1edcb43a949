//! SMOTE oversampling: balance classes by interpolating synthetic minority
//! samples between nearest minority neighbors.

use rand::Rng;

use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeding;

/// Balance the two classes to equal counts.
///
/// Synthetic minority points are convex combinations `x + u * (nn - x)` with
/// `u ~ Uniform(0, 1)` and `nn` one of the `min(k_neighbors, minority - 1)`
/// nearest minority neighbors (Euclidean). When the minority has a single
/// member it is duplicated instead. Original rows are preserved in order;
/// synthetic rows are appended.
pub fn smote_balance<F: Scalar>(
    train: &Dataset<F>,
    k_neighbors: usize,
    seed: u64,
) -> Result<Dataset<F>> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training data"));
    }
    let pos_idx = train.class_indices(true);
    let neg_idx = train.class_indices(false);
    let (minority, majority, minority_label) = if pos_idx.len() <= neg_idx.len() {
        (pos_idx, neg_idx, true)
    } else {
        (neg_idx, pos_idx, false)
    };
    if minority.is_empty() {
        return Err(Error::EmptyMinority);
    }
    let deficit = majority.len() - minority.len();
    if deficit == 0 {
        return Ok(train.clone());
    }

    let p = train.n_features();
    let mut features: Vec<F> = Vec::with_capacity((train.len() + deficit) * p);
    for row in train.features.rows_iter() {
        features.extend_from_slice(row);
    }
    let mut labels = train.labels.clone();
    let mut rng = seeding::stream(seed, &[]);

    if minority.len() == 1 {
        let row = train.features.row(minority[0]).to_vec();
        for _ in 0..deficit {
            features.extend_from_slice(&row);
            labels.push(minority_label);
        }
    } else {
        let k = k_neighbors.min(minority.len() - 1);
        // nearest minority neighbors per minority sample, ties by index
        let neighbors: Vec<Vec<usize>> = minority
            .iter()
            .map(|&i| {
                let mut dists: Vec<(F, usize)> = minority
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| {
                        let d2 = train
                            .features
                            .row(i)
                            .iter()
                            .zip(train.features.row(j))
                            .map(|(&a, &b)| (a - b) * (a - b))
                            .sum::<F>();
                        (d2, j)
                    })
                    .collect();
                dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                dists.into_iter().take(k).map(|(_, j)| j).collect()
            })
            .collect();
        for _ in 0..deficit {
            let base_pos = rng.random_range(0..minority.len());
            let base = train.features.row(minority[base_pos]);
            let nn = train
                .features
                .row(neighbors[base_pos][rng.random_range(0..k)]);
            let u = F::sample_unit(&mut rng);
            for (a, b) in base.iter().zip(nn) {
                features.push(*a + u * (*b - *a));
            }
            labels.push(minority_label);
        }
    }

    let n = labels.len();
    Dataset::new(
        Matrix::from_vec(n, p, features)?,
        labels,
        train.schema.clone(),
        format!("{} (smote)", train.provenance),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSchema;

    fn dataset_from(rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Dataset<f64> {
        let cols = rows[0].len();
        Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            labels,
            FeatureSchema::all_numeric(cols),
            "test",
        )
        .unwrap()
    }

    #[test]
    fn balanced_input_returned_unchanged() {
        let ds = dataset_from(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![true, true, false, false],
        );
        let out = smote_balance(&ds, 5, 1).unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn single_minority_sample_is_duplicated() {
        let mut rows = vec![vec![9.0, 9.0]];
        let mut labels = vec![true];
        for i in 0..7 {
            rows.push(vec![i as f64, 0.0]);
            labels.push(false);
        }
        let ds = dataset_from(rows, labels);
        let out = smote_balance(&ds, 5, 2).unwrap();
        assert_eq!(out.positives(), 7);
        assert_eq!(out.len(), 14);
        for i in 8..14 {
            assert_eq!(out.features.row(i), &[9.0, 9.0]);
        }
    }

    #[test]
    fn synthetic_points_lie_on_minority_segment() {
        // Minority {(0,0), (1,1)}: every synthetic point must be a convex
        // combination of the two, i.e. (t, t) with t in [0, 1].
        let ds = dataset_from(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 1.0],
                vec![5.0, 0.0],
                vec![6.0, 0.0],
                vec![7.0, 0.0],
                vec![8.0, 0.0],
                vec![9.0, 0.0],
                vec![10.0, 0.0],
            ],
            vec![true, true, false, false, false, false, false, false],
        );
        let out = smote_balance(&ds, 5, 3).unwrap();
        assert_eq!(out.positives(), 6);
        for i in ds.len()..out.len() {
            let row = out.features.row(i);
            assert!(out.labels[i]);
            assert!((row[0] - row[1]).abs() < 1e-12, "off segment: {row:?}");
            assert!((0.0..=1.0).contains(&row[0]));
        }
    }

    #[test]
    fn exact_balance_for_majority_negative_and_positive() {
        for flip in [false, true] {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for i in 0..4 {
                rows.push(vec![i as f64, 1.0]);
                labels.push(!flip);
            }
            for i in 0..11 {
                rows.push(vec![i as f64, -1.0]);
                labels.push(flip);
            }
            let ds = dataset_from(rows, labels);
            let out = smote_balance(&ds, 5, 4).unwrap();
            assert_eq!(out.positives(), out.len() - out.positives());
            assert_eq!(out.len(), 22);
        }
    }

    #[test]
    fn empty_minority_is_an_error() {
        let ds = dataset_from(vec![vec![0.0], vec![1.0]], vec![false, false]);
        assert!(matches!(smote_balance(&ds, 5, 0), Err(Error::EmptyMinority)));
    }

    #[test]
    fn seeded_runs_reproduce() {
        let ds = dataset_from(
            vec![vec![0.0, 0.0], vec![2.0, 2.0], vec![1.0, 0.0], vec![3.0, 0.0], vec![4.0, 1.0]],
            vec![true, true, false, false, false],
        );
        assert_eq!(smote_balance(&ds, 5, 7).unwrap(), smote_balance(&ds, 5, 7).unwrap());
        assert_ne!(
            smote_balance(&ds, 5, 7).unwrap().features,
            smote_balance(&ds, 5, 8).unwrap().features
        );
    }
}
