//! Interpretable candidate models and imbalance handling.

mod logistic;
mod smote;
mod tree;

pub use logistic::{
    logistic_gradient, logistic_loss, logistic_pair_pool, train_logistic, LogisticModel,
};
pub use smote::smote_balance;
pub use tree::{train_tree, tree_subsample_pool, TreeModel};

use crate::data::Matrix;
use crate::scalar::Scalar;

/// A trained binary classifier: deterministic, stateless after training.
pub trait Predictor<F: Scalar>: Send + Sync {
    /// Predict a single feature row (full dataset width).
    fn predict_row(&self, row: &[F]) -> bool;

    /// Human-readable identity (feature pair, tree id, ...).
    fn descriptor(&self) -> String;

    /// Predict every row of a feature matrix.
    fn predict(&self, features: &Matrix<F>) -> Vec<bool> {
        features.rows_iter().map(|row| self.predict_row(row)).collect()
    }
}

impl<F: Scalar, P: Predictor<F> + ?Sized> Predictor<F> for &P {
    fn predict_row(&self, row: &[F]) -> bool {
        (**self).predict_row(row)
    }

    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

impl<F: Scalar, P: Predictor<F> + ?Sized> Predictor<F> for Box<P> {
    fn predict_row(&self, row: &[F]) -> bool {
        (**self).predict_row(row)
    }

    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}
