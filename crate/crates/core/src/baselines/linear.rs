use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky, cholesky_solve, dot, Matrix};
use crate::{Error, Result};

/// Ridge added to the centered Gram matrix when it cannot be factored, as a
/// fraction of its mean diagonal.
pub const RIDGE_SCALE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), got: x.cols() });
        }
        Ok(x.row_iter().map(|r| self.bias + dot(r, &self.weights)).collect())
    }
}

/// Least squares through the normal equations on centered data, so the bias
/// is never regularized. A rank-deficient or underdetermined design falls
/// back to a ridge of `RIDGE_SCALE · tr(G)/d`.
pub fn fit_linear(x: &Matrix, y: &[f64]) -> Result<LinearModel> {
    let (n, d) = (x.rows(), x.cols());
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let x_mean: Vec<f64> = (0..d).map(|j| x.row_iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;

    let mut gram = Matrix::zeros(d, d);
    let mut rhs = alloc::vec![0.0; d];
    let mut centered = alloc::vec![0.0; d];
    for (r, &yi) in x.row_iter().zip(y) {
        for j in 0..d {
            centered[j] = r[j] - x_mean[j];
        }
        let yc = yi - y_mean;
        for a in 0..d {
            let ca = centered[a];
            rhs[a] += ca * yc;
            for b in 0..=a {
                gram[(a, b)] += ca * centered[b];
            }
        }
    }
    if d == 0 {
        return Ok(LinearModel { weights: Vec::new(), bias: y_mean });
    }

    let max_diag = (0..d).map(|i| gram[(i, i)]).fold(0.0, f64::max);
    let well_posed = |l: &Matrix| (0..d).all(|i| l[(i, i)] * l[(i, i)] > 1e-12 * max_diag);
    let factor = if n > d { cholesky(&gram).filter(well_posed) } else { None };
    let l = match factor {
        Some(l) => l,
        None => {
            let trace: f64 = (0..d).map(|i| gram[(i, i)]).sum();
            let ridge = if trace > 0.0 { RIDGE_SCALE * trace / d as f64 } else { RIDGE_SCALE };
            for i in 0..d {
                gram[(i, i)] += ridge;
            }
            cholesky(&gram).ok_or(Error::SingularDesign)?
        }
    };
    let weights = cholesky_solve(&l, &rhs);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::SingularDesign);
    }
    let bias = y_mean - dot(&weights, &x_mean);
    Ok(LinearModel { weights, bias })
}
