//! Comparison regressors: ordinary least squares and a fully-connected network.

mod linear;
mod mlp;

pub use linear::{fit_linear, LinearModel};
pub use mlp::{mlp_forward, mlp_gradients, train_mlp, Layer, MLPModel, TrainConfig, TrainedMlp, HIDDEN_WIDTHS};

use alloc::vec::Vec;

use crate::gp::GPModel;
use crate::linalg::Matrix;
use crate::Result;

/// Point predictions for each row of a feature matrix.
pub trait Regressor {
    fn predict_points(&self, x: &Matrix) -> Result<Vec<f64>>;
}

impl Regressor for LinearModel {
    fn predict_points(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.predict(x)
    }
}

impl Regressor for MLPModel {
    fn predict_points(&self, x: &Matrix) -> Result<Vec<f64>> {
        mlp_forward(self, x)
    }
}

impl Regressor for GPModel {
    fn predict_points(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.predict_mean(x)
    }
}
