//! CSV ingestion with missing-value accounting and KNN imputation.

use std::path::Path;

use crate::data::{Dataset, FeatureSchema, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Missing-value tokens recognized by default.
pub const DEFAULT_MISSING_TOKENS: &[&str] = &["?", ""];

/// Parsed CSV before imputation: per-cell optional values, the extracted
/// binary target and per-column missing fractions.
#[derive(Clone, Debug)]
pub struct RawTable<F> {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Option<F>>>,
    pub target: Vec<bool>,
    pub missing_fraction: Vec<f64>,
    pub source: String,
}

impl<F> RawTable<F> {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.headers.len()
    }

    pub fn positives(&self) -> usize {
        self.target.iter().filter(|&&t| t).count()
    }
}

/// Parse a headered CSV, extracting `target_column` as a 0/1 label and
/// recording the per-column missing fraction (default tokens `"?"` and `""`).
pub fn ingest_csv<F: Scalar>(path: impl AsRef<Path>, target_column: &str) -> Result<RawTable<F>> {
    ingest_csv_with(path, target_column, DEFAULT_MISSING_TOKENS)
}

/// `ingest_csv` with an explicit missing-token set.
pub fn ingest_csv_with<F: Scalar>(
    path: impl AsRef<Path>,
    target_column: &str,
    missing_tokens: &[&str],
) -> Result<RawTable<F>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .iter()
        .map(str::to_owned)
        .collect();
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingColumn(target_column.to_owned()))?;
    let feature_headers: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows: Vec<Vec<Option<F>>> = Vec::new();
    let mut target = Vec::new();
    let mut missing_counts = vec![0usize; feature_headers.len()];
    for (record_idx, record) in reader.records().enumerate() {
        let line = record_idx + 2; // header is line 1
        let record = record.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(feature_headers.len());
        for (i, field) in record.iter().enumerate() {
            if i == target_idx {
                let value: f64 = field.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("target value {field:?} is not numeric"),
                })?;
                if value != 0.0 && value != 1.0 {
                    return Err(Error::Parse {
                        line,
                        message: format!("target value {field:?} is not binary"),
                    });
                }
                target.push(value == 1.0);
                continue;
            }
            if missing_tokens.contains(&field) {
                missing_counts[row.len()] += 1;
                row.push(None);
            } else {
                let value: f64 = field.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("unparseable value {field:?}"),
                })?;
                row.push(Some(F::from_f64_lit(value)));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("csv file has no data rows"));
    }
    let n = rows.len() as f64;
    let missing_fraction = missing_counts.iter().map(|&c| c as f64 / n).collect();
    Ok(RawTable {
        headers: feature_headers,
        rows,
        target,
        missing_fraction,
        source: path.display().to_string(),
    })
}

/// Drop heavily missing columns, drop all-missing rows, impute the remaining
/// gaps with the mean of the `k` nearest complete-case neighbors.
///
/// Column filter: missing fraction strictly greater than `drop_threshold`.
/// Neighbor distance: Euclidean over the dimensions observed in the target
/// row, on columns standardized by their observed mean/std, rescaled by
/// `sqrt(p / observed)` to stay comparable across rows with different
/// missingness. Observed entries are never altered.
pub fn drop_and_impute<F: Scalar>(
    table: &RawTable<F>,
    drop_threshold: f64,
    k: usize,
) -> Result<Dataset<F>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let kept_cols: Vec<usize> = (0..table.n_features())
        .filter(|&j| table.missing_fraction[j] <= drop_threshold)
        .collect();
    if kept_cols.is_empty() {
        return Err(Error::InvalidParameter(
            "every column exceeds the missingness threshold".into(),
        ));
    }
    let kept_rows: Vec<usize> = (0..table.n_rows())
        .filter(|&i| kept_cols.iter().any(|&j| table.rows[i][j].is_some()))
        .collect();
    if kept_rows.is_empty() {
        return Err(Error::EmptyInput("no rows with any observed feature"));
    }

    let p = kept_cols.len();
    let n = kept_rows.len();
    // cells[i][j]: value of kept row i, kept column j
    let cells: Vec<Vec<Option<F>>> = kept_rows
        .iter()
        .map(|&i| kept_cols.iter().map(|&j| table.rows[i][j]).collect())
        .collect();

    // Column statistics over observed entries, for the distance metric only.
    let mut means = vec![F::zero(); p];
    let mut stds = vec![F::zero(); p];
    for j in 0..p {
        let observed: Vec<F> = cells.iter().filter_map(|row| row[j]).collect();
        let count = F::from_count(observed.len().max(1) as u64);
        let mean = observed.iter().copied().sum::<F>() / count;
        let var = observed
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<F>()
            / count;
        means[j] = mean;
        stds[j] = var.sqrt();
    }
    let z = |v: F, j: usize| {
        if stds[j] > F::zero() {
            (v - means[j]) / stds[j]
        } else {
            F::zero()
        }
    };

    let complete: Vec<usize> = (0..n)
        .filter(|&i| cells[i].iter().all(Option::is_some))
        .collect();
    if complete.is_empty() {
        return Err(Error::NoCompleteCases);
    }

    let p_f = F::from_count(p as u64);
    let mut features = Matrix::zeros(n, p);
    for i in 0..n {
        let gaps: Vec<usize> = (0..p).filter(|&j| cells[i][j].is_none()).collect();
        if gaps.is_empty() {
            for j in 0..p {
                features.set(i, j, cells[i][j].unwrap());
            }
            continue;
        }
        let observed: Vec<usize> = (0..p).filter(|&j| cells[i][j].is_some()).collect();
        let obs_f = F::from_count(observed.len() as u64);
        // distance to every complete case over the observed dims
        let mut dists: Vec<(F, usize)> = complete
            .iter()
            .map(|&c| {
                let mut d2 = F::zero();
                for &j in &observed {
                    let diff = z(cells[i][j].unwrap(), j) - z(cells[c][j].unwrap(), j);
                    d2 += diff * diff;
                }
                ((d2 * (p_f / obs_f)).sqrt(), c)
            })
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let neighbors = &dists[..k.min(dists.len())];
        let k_f = F::from_count(neighbors.len() as u64);
        for j in 0..p {
            match cells[i][j] {
                Some(v) => features.set(i, j, v),
                None => {
                    let mean = neighbors
                        .iter()
                        .map(|&(_, c)| cells[c][j].unwrap())
                        .sum::<F>()
                        / k_f;
                    features.set(i, j, mean);
                }
            }
        }
    }

    let labels: Vec<bool> = kept_rows.iter().map(|&i| table.target[i]).collect();
    Dataset::new(
        features,
        labels,
        FeatureSchema::all_numeric(p),
        format!("{} (imputed)", table.source),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn ingest_counts_missing_fractions() {
        let f = write_csv("a,b,label\n1.0,2.0,1\n?,3.0,0\n4.0,5.0,1\n");
        let table: RawTable<f64> = ingest_csv(f.path(), "label").unwrap();
        assert_eq!(table.n_rows(), 3);
        assert_eq!(table.headers, vec!["a", "b"]);
        assert_eq!(table.positives(), 2);
        assert!((table.missing_fraction[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(table.missing_fraction[1], 0.0);
    }

    #[test]
    fn ingest_no_missing_tokens_gives_zero_fractions() {
        let f = write_csv("a,label\n1,0\n2,1\n");
        let table: RawTable<f64> = ingest_csv(f.path(), "label").unwrap();
        assert!(table.missing_fraction.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn ingest_rejects_absent_target_and_bad_rows() {
        let f = write_csv("a,label\n1,0\n");
        assert!(matches!(
            ingest_csv::<f64>(f.path(), "y"),
            Err(Error::MissingColumn(_))
        ));
        let bad = write_csv("a,label\nfoo,0\n");
        assert!(matches!(
            ingest_csv::<f64>(bad.path(), "label"),
            Err(Error::Parse { line: 2, .. })
        ));
        let nonbinary = write_csv("a,label\n1,2\n");
        assert!(ingest_csv::<f64>(nonbinary.path(), "label").is_err());
    }

    #[test]
    fn impute_no_missing_leaves_table_unchanged() {
        let f = write_csv("a,b,label\n1.0,2.0,1\n3.0,4.0,0\n");
        let table: RawTable<f64> = ingest_csv(f.path(), "label").unwrap();
        let ds = drop_and_impute(&table, 0.5, 5).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.features.get(0, 0), 1.0);
        assert_eq!(ds.features.get(1, 1), 4.0);
    }

    #[test]
    fn impute_single_gap_with_agreeing_neighbors() {
        // Five complete rows share b = 2.5; the gap must be imputed exactly.
        let mut content = String::from("a,b,label\n");
        for i in 0..5 {
            content.push_str(&format!("{}.0,2.5,0\n", i));
        }
        content.push_str("2.0,?,1\n");
        let f = write_csv(&content);
        let table: RawTable<f64> = ingest_csv(f.path(), "label").unwrap();
        let ds = drop_and_impute(&table, 0.5, 5).unwrap();
        assert_eq!(ds.features.get(5, 1), 2.5);
        // observed entries untouched
        assert_eq!(ds.features.get(5, 0), 2.0);
    }

    #[test]
    fn impute_drops_heavy_columns_and_empty_rows() {
        let f = write_csv(
            "a,b,label\n1.0,?,1\n2.0,?,0\n3.0,?,1\n?,?,0\n4.0,1.0,0\n",
        );
        let table: RawTable<f64> = ingest_csv(f.path(), "label").unwrap();
        // column b is 80% missing -> dropped; row 4 (all-missing after drop) removed
        let ds = drop_and_impute(&table, 0.5, 5).unwrap();
        assert_eq!(ds.n_features(), 1);
        assert_eq!(ds.len(), 4);
    }

    #[test]
    fn impute_requires_complete_cases() {
        let f = write_csv("a,b,label\n1.0,?,1\n?,2.0,0\n");
        let table: RawTable<f64> = ingest_csv(f.path(), "label").unwrap();
        assert!(matches!(
            drop_and_impute(&table, 0.5, 5),
            Err(Error::NoCompleteCases)
        ));
    }

    #[test]
    fn impute_uses_nearest_neighbors() {
        // Two clusters in feature a; the gap in b must be filled from the
        // near cluster's b values (10.0), not the far cluster's (99.0).
        let f = write_csv(
            "a,b,label\n0.0,10.0,0\n0.1,10.0,0\n0.2,10.0,0\n50.0,99.0,0\n51.0,99.0,0\n0.05,?,1\n",
        );
        let table: RawTable<f64> = ingest_csv(f.path(), "label").unwrap();
        let ds = drop_and_impute(&table, 0.5, 3).unwrap();
        assert_eq!(ds.features.get(5, 1), 10.0);
    }
}
