//! Exact Gaussian-process regression with a squared-exponential kernel.
//!
//! The prior mean is the constant training-target mean. Fitting factors
//! `Σ + σ_n²·I = L·Lᵀ` once, so a posterior mean costs one kernel row and a
//! dot product, and a posterior variance one triangular solve.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::exec::{Executor, Sequential};
use crate::linalg::{cholesky, dot, solve_lower, solve_lower_transpose, squared_distance, Matrix};
use crate::{Error, Result};

/// Jitter added to the diagonal, relative to the signal variance.
pub const BASE_JITTER: f64 = 1e-10;
/// Retries after the first failed factorization, each with ten times more jitter.
pub const JITTER_RETRIES: usize = 3;
/// Negative variances down to this value are rounding noise and clamp to zero.
pub const VARIANCE_CLAMP: f64 = -1e-10;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SEHyperparams {
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl SEHyperparams {
    pub fn new(lengthscale: f64, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let h = SEHyperparams { lengthscale, signal_variance, noise_variance };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lengthscale.is_finite()
            && self.lengthscale > 0.0
            && self.signal_variance.is_finite()
            && self.signal_variance > 0.0
            && self.noise_variance.is_finite()
            && self.noise_variance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(alloc::format!("invalid SE hyperparameters {self:?}")))
        }
    }

    #[inline]
    fn at_sq_dist(&self, d2: f64) -> f64 {
        self.signal_variance * libm::exp(-d2 / (2.0 * self.lengthscale * self.lengthscale))
    }
}

/// `σ_f² · exp(-‖x - x′‖² / (2ℓ²))`.
pub fn se_kernel(x: &[f64], x_prime: &[f64], hyper: &SEHyperparams) -> Result<f64> {
    if x.len() != x_prime.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: x_prime.len() });
    }
    Ok(hyper.at_sq_dist(squared_distance(x, x_prime)))
}

/// Cross-covariance matrix, entry `(i, j) = k(a_i, b_j)`.
pub fn kernel_matrix(a: &Matrix, b: &Matrix, hyper: &SEHyperparams) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch { expected: a.cols(), got: b.cols() });
    }
    let mut k = Matrix::zeros(a.rows(), b.rows());
    for (i, ai) in a.row_iter().enumerate() {
        for (kij, bj) in k.row_mut(i).iter_mut().zip(b.row_iter()) {
            *kij = hyper.at_sq_dist(squared_distance(ai, bj));
        }
    }
    Ok(k)
}

/// Pairwise squared distances of the training inputs, shared by every
/// hyperparameter candidate during optimization.
#[derive(Debug, Clone)]
pub struct SqDistances {
    n: usize,
    d2: Vec<f64>,
}

impl SqDistances {
    pub fn new(x: &Matrix) -> Self {
        let n = x.rows();
        let mut d2 = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let v = squared_distance(x.row(i), x.row(j));
                d2[i * n + j] = v;
                d2[j * n + i] = v;
            }
        }
        SqDistances { n, d2 }
    }

    /// Lower triangle and diagonal of `Σ + (σ_n² + jitter)·I`.
    fn covariance(&self, hyper: &SEHyperparams, diag_extra: f64) -> Matrix {
        let n = self.n;
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            let row = k.row_mut(i);
            for j in 0..i {
                row[j] = hyper.at_sq_dist(self.d2[i * n + j]);
            }
            row[i] = hyper.signal_variance + diag_extra;
        }
        k
    }

    /// Factor with the jitter-escalation policy; returns the factor and the jitter used.
    fn factor(&self, hyper: &SEHyperparams) -> Result<(Matrix, f64)> {
        let mut jitter = BASE_JITTER * hyper.signal_variance;
        for attempt in 0..=JITTER_RETRIES {
            if attempt > 0 {
                jitter *= 10.0;
            }
            if let Some(l) = cholesky(&self.covariance(hyper, hyper.noise_variance + jitter)) {
                return Ok((l, jitter));
            }
        }
        Err(Error::NotPositiveDefinite { jitter })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GPModel {
    pub train_inputs: Matrix,
    pub train_targets_centered: Vec<f64>,
    pub target_mean: f64,
    pub hyper: SEHyperparams,
    /// Lower Cholesky factor of `Σ + (σ_n² + jitter)·I`.
    pub chol: Matrix,
    /// `(Σ + σ_n²·I)⁻¹ (f - m)`.
    pub alpha: Vec<f64>,
    /// Diagonal jitter that made the factorization succeed.
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub lower95: Vec<f64>,
    pub upper95: Vec<f64>,
}

fn check_training(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::EmptySample);
    }
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch { expected: x.rows(), got: y.len() });
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("training data contains non-finite values".into()));
    }
    Ok(())
}

fn centered(y: &[f64]) -> (f64, Vec<f64>) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    (mean, y.iter().map(|v| v - mean).collect())
}

pub fn fit(x: &Matrix, y: &[f64], hyper: SEHyperparams) -> Result<GPModel> {
    check_training(x, y)?;
    hyper.validate()?;
    fit_with_distances(x, &SqDistances::new(x), y, hyper)
}

fn fit_with_distances(x: &Matrix, dist: &SqDistances, y: &[f64], hyper: SEHyperparams) -> Result<GPModel> {
    let (target_mean, yc) = centered(y);
    let (chol, jitter) = dist.factor(&hyper)?;
    let alpha = solve_lower_transpose(&chol, &solve_lower(&chol, &yc));
    Ok(GPModel { train_inputs: x.clone(), train_targets_centered: yc, target_mean, hyper, chol, alpha, jitter })
}

impl GPModel {
    pub fn n_train(&self) -> usize {
        self.train_inputs.rows()
    }

    fn check_inputs(&self, xs: &Matrix) -> Result<()> {
        if xs.cols() != self.train_inputs.cols() {
            return Err(Error::DimensionMismatch { expected: self.train_inputs.cols(), got: xs.cols() });
        }
        Ok(())
    }

    /// Posterior mean only.
    pub fn predict_mean(&self, xs: &Matrix) -> Result<Vec<f64>> {
        self.check_inputs(xs)?;
        Ok(xs
            .row_iter()
            .map(|x| {
                let ks: Vec<f64> =
                    self.train_inputs.row_iter().map(|t| self.hyper.at_sq_dist(squared_distance(t, x))).collect();
                self.target_mean + dot(&ks, &self.alpha)
            })
            .collect())
    }

    pub fn predict(&self, xs: &Matrix) -> Result<Prediction> {
        self.check_inputs(xs)?;
        let m = xs.rows();
        let mut p = Prediction {
            mean: Vec::with_capacity(m),
            variance: Vec::with_capacity(m),
            lower95: Vec::with_capacity(m),
            upper95: Vec::with_capacity(m),
        };
        for x in xs.row_iter() {
            let ks: Vec<f64> =
                self.train_inputs.row_iter().map(|t| self.hyper.at_sq_dist(squared_distance(t, x))).collect();
            let mean = self.target_mean + dot(&ks, &self.alpha);
            let v = solve_lower(&self.chol, &ks);
            let mut var = self.hyper.signal_variance - dot(&v, &v);
            if var < 0.0 {
                if var < VARIANCE_CLAMP {
                    return Err(Error::NegativeVariance(var));
                }
                var = 0.0;
            }
            let half = Z95 * libm::sqrt(var);
            p.mean.push(mean);
            p.variance.push(var);
            p.lower95.push(mean - half);
            p.upper95.push(mean + half);
        }
        Ok(p)
    }

    /// `-½(f-m)ᵀα - Σ log Lᵢᵢ - (n/2)·log 2π`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        lml_from_factor(&self.chol, &self.train_targets_centered, &self.alpha)
    }
}

fn lml_from_factor(chol: &Matrix, yc: &[f64], alpha: &[f64]) -> f64 {
    let n = yc.len();
    let log_det_half: f64 = (0..n).map(|i| libm::log(chol[(i, i)])).sum();
    -0.5 * dot(yc, alpha) - log_det_half - 0.5 * n as f64 * libm::log(2.0 * PI)
}

/// Independent per-point draws from `N(mean_i, variance_i)`, one row per sample.
pub fn sample_posterior<R: Rng + ?Sized>(
    model: &GPModel,
    xs: &Matrix,
    rng: &mut R,
    n_samples: usize,
) -> Result<Matrix> {
    let pred = model.predict(xs)?;
    Ok(sample_prediction(&pred, rng, n_samples))
}

pub fn sample_prediction<R: Rng + ?Sized>(pred: &Prediction, rng: &mut R, n_samples: usize) -> Matrix {
    let m = pred.mean.len();
    let sd: Vec<f64> = pred.variance.iter().map(|v| libm::sqrt(*v)).collect();
    let mut out = Matrix::zeros(n_samples, m);
    for s in 0..n_samples {
        for (i, v) in out.row_mut(s).iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(rng);
            *v = pred.mean[i] + sd[i] * z;
        }
    }
    out
}

/// Budget and bounds of the marginal-likelihood search.
///
/// Grid axes are log-spaced; their bounds scale with the data (median pairwise
/// distance for ℓ, target variance for σ_f² and σ_n²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperSearch {
    pub grid_points: usize,
    pub nm_evaluations: usize,
    /// Lengthscale range as multiples of the median pairwise input distance.
    pub lengthscale_factor: (f64, f64),
    /// Signal variance range as multiples of the target variance.
    pub signal_factor: (f64, f64),
    /// Noise variance range as multiples of the target variance.
    pub noise_factor: (f64, f64),
    /// Nelder–Mead may leave the grid box by this much in natural-log units.
    pub log_margin: f64,
}

impl Default for HyperSearch {
    fn default() -> Self {
        HyperSearch {
            grid_points: 5,
            nm_evaluations: 200,
            lengthscale_factor: (0.1, 10.0),
            signal_factor: (0.01, 10.0),
            noise_factor: (1e-4, 1.0),
            log_margin: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub hyper: SEHyperparams,
    pub log_marginal_likelihood: f64,
    pub best_grid_lml: f64,
    pub evaluations: usize,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (libm::log(lo), libm::log(hi));
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct Objective<'a> {
    dist: &'a SqDistances,
    yc: &'a [f64],
}

impl Objective<'_> {
    fn hyper(theta: &[f64; 3]) -> SEHyperparams {
        SEHyperparams {
            lengthscale: libm::exp(theta[0]),
            signal_variance: libm::exp(theta[1]),
            noise_variance: libm::exp(theta[2]),
        }
    }

    /// Log marginal likelihood, or `-∞` when factorization fails.
    fn lml(&self, theta: &[f64; 3]) -> f64 {
        let hyper = Self::hyper(theta);
        match self.dist.factor(&hyper) {
            Ok((l, _)) => {
                let alpha = solve_lower_transpose(&l, &solve_lower(&l, self.yc));
                let v = lml_from_factor(&l, self.yc, &alpha);
                if v.is_finite() {
                    v
                } else {
                    f64::NEG_INFINITY
                }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

pub fn optimize_hyperparameters(x: &Matrix, y: &[f64], search: &HyperSearch) -> Result<SearchOutcome> {
    optimize_hyperparameters_with(x, y, search, &Sequential)
}

/// Grid-seeded Nelder–Mead on `(ln ℓ, ln σ_f², ln σ_n²)` maximizing the log
/// marginal likelihood. The grid is evaluated through `exec`.
pub fn optimize_hyperparameters_with<E: Executor>(
    x: &Matrix,
    y: &[f64],
    search: &HyperSearch,
    exec: &E,
) -> Result<SearchOutcome> {
    check_training(x, y)?;
    if x.rows() < 2 {
        return Err(Error::Config("hyperparameter optimization needs at least two points".into()));
    }
    let dist = SqDistances::new(x);
    let (_, yc) = centered(y);
    let var_y = {
        let v = dot(&yc, &yc) / yc.len() as f64;
        if v > 0.0 {
            v
        } else {
            1.0
        }
    };
    let mut pair_d: Vec<f64> = Vec::new();
    for i in 0..dist.n {
        for j in 0..i {
            pair_d.push(libm::sqrt(dist.d2[i * dist.n + j]));
        }
    }
    let med = median(pair_d);
    let med = if med > 0.0 { med } else { 1.0 };

    let g = search.grid_points.max(1);
    let axes = [
        log_grid(med * search.lengthscale_factor.0, med * search.lengthscale_factor.1, g),
        log_grid(var_y * search.signal_factor.0, var_y * search.signal_factor.1, g),
        log_grid(var_y * search.noise_factor.0, var_y * search.noise_factor.1, g),
    ];
    let objective = Objective { dist: &dist, yc: &yc };
    let grid_vals = exec.map_indexed(g * g * g, |idx| {
        let theta = [axes[0][idx / (g * g)], axes[1][(idx / g) % g], axes[2][idx % g]];
        (theta, objective.lml(&theta))
    });
    let (mut best_theta, best_grid) = grid_vals
        .iter()
        .copied()
        .fold(([0.0; 3], f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    if !best_grid.is_finite() {
        return Err(Error::OptimizationFailed);
    }

    let lower = [axes[0][0], axes[1][0], axes[2][0]].map(|v| v - search.log_margin);
    let upper = [axes[0][g - 1], axes[1][g - 1], axes[2][g - 1]].map(|v| v + search.log_margin);
    let step = if g > 1 { [0, 1, 2].map(|a| axes[a][1] - axes[a][0]) } else { [1.0; 3] };
    let clamp = |t: [f64; 3]| [0, 1, 2].map(|a| t[a].clamp(lower[a], upper[a]));
    let (nm_theta, nm_val, nm_evals) = nelder_mead(
        |t: &[f64; 3]| -objective.lml(&clamp(*t)),
        best_theta,
        [0, 1, 2].map(|a| 0.5 * step[a]),
        search.nm_evaluations,
    );
    let mut best = best_grid;
    if -nm_val > best {
        best = -nm_val;
        best_theta = clamp(nm_theta);
    }
    Ok(SearchOutcome {
        hyper: Objective::hyper(&best_theta),
        log_marginal_likelihood: best,
        best_grid_lml: best_grid,
        evaluations: g * g * g + nm_evals,
    })
}

/// Minimizes `f` starting from `x0` with an axis-aligned initial simplex.
/// Returns the best point, its value and the number of evaluations; the
/// returned value never exceeds `f(x0)`.
pub fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(f: F, x0: [f64; 3], scale: [f64; 3], max_evals: usize) -> ([f64; 3], f64, usize) {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;
    let evals = core::cell::Cell::new(0usize);
    let eval = |p: &[f64; 3]| {
        evals.set(evals.get() + 1);
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    let v0 = eval(&x0);
    simplex.push((x0, v0));
    for a in 0..3 {
        let mut p = x0;
        p[a] += scale[a];
        let v = eval(&p);
        simplex.push((p, v));
    }
    while evals.get() < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[3].1 - simplex[0].1).abs() < 1e-10 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let mut centroid = [0.0; 3];
        for (p, _) in &simplex[..3] {
            for a in 0..3 {
                centroid[a] += p[a] / 3.0;
            }
        }
        let worst = simplex[3];
        let along = |t: f64| [0, 1, 2].map(|a| centroid[a] + t * (worst.0[a] - centroid[a]));
        let xr = along(-ALPHA);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-GAMMA);
            let fe = eval(&xe);
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(-RHO);
                (xc, eval(&xc))
            } else {
                let xc = along(RHO);
                (xc, eval(&xc))
            };
            if fc < worst.1.min(fr) {
                simplex[3] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    let p = [0, 1, 2].map(|a| best[a] + SIGMA * (s.0[a] - best[a]));
                    *s = (p, eval(&p));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (p, v) = simplex[0];
    if v <= v0 {
        (p, v, evals.get())
    } else {
        (x0, v0, evals.get())
    }
}

/// Fits with optimized hyperparameters.
pub fn fit_optimized<E: Executor>(x: &Matrix, y: &[f64], search: &HyperSearch, exec: &E) -> Result<(GPModel, SearchOutcome)> {
    let outcome = optimize_hyperparameters_with(x, y, search, exec)?;
    let model = fit(x, y, outcome.hyper)?;
    Ok((model, outcome))
}
