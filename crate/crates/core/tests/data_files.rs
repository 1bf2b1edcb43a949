//! Checks against the CSV files shipped under data/.

use std::path::PathBuf;

use pvf_core::data::{drop_and_impute, ingest_csv, RawTable};

fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

#[test]
fn breast_cancer_ingests_with_expected_counts() {
    let table: RawTable<f64> = ingest_csv(data_file("breast_cancer.csv"), "diagnosis").unwrap();
    assert_eq!(table.n_rows(), 569);
    assert_eq!(table.n_features(), 30);
    assert_eq!(table.positives(), 212);
    assert!(table.missing_fraction.iter().all(|&m| m == 0.0));

    // no missing values: preprocessing is a no-op on the shape
    let ds = drop_and_impute(&table, 0.5, 5).unwrap();
    assert_eq!(ds.len(), 569);
    assert_eq!(ds.n_features(), 30);
}

#[test]
fn cervical_fixture_preprocesses_to_expected_shape() {
    let table: RawTable<f64> = ingest_csv(data_file("cervical_cancer.csv"), "Schiller").unwrap();
    assert_eq!(table.n_rows(), 808);
    assert_eq!(table.n_features(), 36);
    let heavy = table
        .missing_fraction
        .iter()
        .filter(|&&m| m > 0.5)
        .count();
    assert_eq!(heavy, 2, "exactly two columns above the 50% missing cut");

    let ds = drop_and_impute(&table, 0.5, 5).unwrap();
    assert_eq!((ds.len(), ds.n_features()), (668, 34));
    assert!(ds.positives() > 60, "fixture keeps a usable positive count");
}
