use chaosid_core::gp::*;
use chaosid_core::rng::seeded;
use chaosid_core::Matrix;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

fn se(a: &[f64], b: &[f64], h: &SEHyperparams) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    h.signal_variance * (-d2 / (2.0 * h.lengthscale * h.lengthscale)).exp()
}

struct Oracle {
    mean: Vec<f64>,
    variance: Vec<f64>,
    lml: f64,
}

/// Posterior and evidence through an explicit inverse and determinant.
fn oracle(x: &Matrix, y: &[f64], xs: &Matrix, h: &SEHyperparams, jitter: f64) -> Oracle {
    let n = x.rows();
    let m = y.iter().sum::<f64>() / n as f64;
    let k = DMatrix::from_fn(n, n, |i, j| se(x.row(i), x.row(j), h))
        + DMatrix::identity(n, n) * (h.noise_variance + jitter);
    let kinv = k.clone().try_inverse().unwrap();
    let r = DVector::from_iterator(n, y.iter().map(|v| v - m));
    let w = &kinv * &r;
    let mut mean = Vec::new();
    let mut variance = Vec::new();
    for s in 0..xs.rows() {
        let ks = DVector::from_fn(n, |i, _| se(x.row(i), xs.row(s), h));
        mean.push(m + ks.dot(&w));
        variance.push(h.signal_variance - (ks.transpose() * &kinv * &ks)[(0, 0)]);
    }
    let lml = -0.5 * r.dot(&w) - 0.5 * k.determinant().ln() - 0.5 * n as f64 * (2.0 * PI).ln();
    Oracle { mean, variance, lml }
}

#[test]
fn matches_explicit_inverse_on_random_instances() {
    let mut rng = seeded(2024);
    for case in 0..100 {
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=3);
        let x = random_matrix(&mut rng, n, d, 2.0);
        let xs = random_matrix(&mut rng, 5, d, 3.0);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let hyper = SEHyperparams::new(
            rng.random_range(0.3..3.0),
            rng.random_range(0.2..3.0),
            rng.random_range(0.01..0.5),
        )
        .unwrap();
        let gp = fit(&x, &y, hyper).unwrap();
        let p = gp.predict(&xs).unwrap();
        let o = oracle(&x, &y, &xs, &hyper, gp.jitter);
        for i in 0..xs.rows() {
            assert!((p.mean[i] - o.mean[i]).abs() < 1e-8, "case {case} mean");
            assert!((p.variance[i] - o.variance[i]).abs() < 1e-8, "case {case} variance");
        }
        assert!((gp.log_marginal_likelihood() - o.lml).abs() < 1e-8, "case {case} lml");
    }
}

#[test]
fn two_point_case() {
    let x = Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
    let hyper = SEHyperparams::new(1.0, 1.0, 0.1).unwrap();
    let gp = fit(&x, &[0.0, 1.0], hyper).unwrap();
    let xs = Matrix::from_vec(1, 1, vec![0.5]).unwrap();
    let p = gp.predict(&xs).unwrap();
    // hand-inverted 2×2 system
    let k01 = (-0.5f64).exp();
    let k = [[1.1 + gp.jitter, k01], [k01, 1.1 + gp.jitter]];
    let det = k[0][0] * k[1][1] - k01 * k01;
    let inv = [[k[1][1] / det, -k01 / det], [-k01 / det, k[0][0] / det]];
    let ks = (-0.125f64).exp();
    let r = [-0.5, 0.5];
    let w = [inv[0][0] * r[0] + inv[0][1] * r[1], inv[1][0] * r[0] + inv[1][1] * r[1]];
    let mean = 0.5 + ks * (w[0] + w[1]);
    let var = 1.0 - ks * ks * (inv[0][0] + inv[0][1] + inv[1][0] + inv[1][1]);
    assert!((p.mean[0] - mean).abs() < 1e-10);
    assert!((p.variance[0] - var).abs() < 1e-10);
}

#[test]
fn single_point_evidence() {
    let x = Matrix::from_vec(1, 2, vec![0.3, -0.2]).unwrap();
    let gp = fit(&x, &[4.0], SEHyperparams::new(1.0, 0.75, 0.25).unwrap()).unwrap();
    assert!((gp.log_marginal_likelihood() + 0.918_938_533_204_672_7).abs() < 1e-9);
}

#[test]
fn kernel_matrix_is_positive_semidefinite() {
    let mut rng = seeded(6);
    for _ in 0..20 {
        let a = random_matrix(&mut rng, 6, 3, 1.0);
        let hyper = SEHyperparams::new(rng.random_range(0.2..5.0), 1.0, 1e-6).unwrap();
        let k = kernel_matrix(&a, &a, &hyper).unwrap();
        let m = DMatrix::from_fn(6, 6, |i, j| k[(i, j)] + if i == j { 1e-6 } else { 0.0 });
        let min = m.symmetric_eigen().eigenvalues.min();
        assert!(min >= 0.0, "smallest eigenvalue {min}");
    }
}

#[test]
fn kernel_decays_with_distance() {
    let hyper = SEHyperparams::new(1.3, 2.0, 0.0).unwrap();
    assert_eq!(se_kernel(&[1.0, 2.0], &[1.0, 2.0], &hyper).unwrap(), 2.0);
    let vals: Vec<f64> = (0..50).map(|i| se_kernel(&[0.0], &[i as f64 * 0.5], &hyper).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    assert!(vals[49] < 1e-30);
    assert!(se_kernel(&[0.0], &[0.0, 1.0], &hyper).is_err());
}

#[test]
fn evidence_scaling_identity() {
    let mut rng = seeded(9);
    let n = 7;
    let x = random_matrix(&mut rng, n, 2, 2.0);
    let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let m = y.iter().sum::<f64>() / n as f64;
    y.iter_mut().for_each(|v| *v -= m);
    let base = fit(&x, &y, SEHyperparams::new(0.8, 1.2, 0.3).unwrap()).unwrap();
    let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
    let scaled = fit(&x, &y2, SEHyperparams::new(0.8, 4.8, 1.2).unwrap()).unwrap();
    let diff = scaled.log_marginal_likelihood() - base.log_marginal_likelihood();
    assert!((diff + n as f64 * 2f64.ln()).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_variance_below_prior(seed in any::<u64>(), n in 1usize..12, noise in 0.0f64..0.5) {
        let mut rng = seeded(seed);
        let x = random_matrix(&mut rng, n, 2, 2.0);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hyper = SEHyperparams::new(1.0, 1.5, noise).unwrap();
        let gp = fit(&x, &y, hyper).unwrap();
        let p = gp.predict(&random_matrix(&mut rng, 10, 2, 3.0)).unwrap();
        for (v, (lo, hi)) in p.variance.iter().zip(p.lower95.iter().zip(&p.upper95)) {
            prop_assert!(*v >= 0.0 && *v <= 1.5 + 1e-10);
            prop_assert!(lo <= hi);
        }
    }

    #[test]
    fn translation_invariance(seed in any::<u64>(), shift in prop::array::uniform2(-50.0f64..50.0)) {
        let mut rng = seeded(seed);
        let x = random_matrix(&mut rng, 6, 2, 2.0);
        let xs = random_matrix(&mut rng, 4, 2, 2.0);
        let y: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hyper = SEHyperparams::new(0.9, 1.0, 0.05).unwrap();
        let moved = |m: &Matrix| Matrix::from_rows(2, m.row_iter().map(|r| [r[0] + shift[0], r[1] + shift[1]])).unwrap();
        let a = fit(&x, &y, hyper).unwrap().predict(&xs).unwrap();
        let b = fit(&moved(&x), &y, hyper).unwrap().predict(&moved(&xs)).unwrap();
        for i in 0..4 {
            prop_assert!((a.mean[i] - b.mean[i]).abs() < 1e-10);
            prop_assert!((a.variance[i] - b.variance[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn more_data_never_raises_variance(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = seeded(seed);
        let x = random_matrix(&mut rng, n + 1, 1, 3.0);
        let y: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xs = random_matrix(&mut rng, 6, 1, 4.0);
        let hyper = SEHyperparams::new(1.0, 1.0, 0.0).unwrap();
        let fewer = fit(&x.select_rows(&(0..n).collect::<Vec<_>>()), &y[..n], hyper).unwrap();
        let all = fit(&x, &y, hyper).unwrap();
        let (pf, pa) = (fewer.predict(&xs).unwrap(), all.predict(&xs).unwrap());
        for i in 0..6 {
            prop_assert!(pa.variance[i] <= pf.variance[i] + 1e-8);
        }
    }
}

#[test]
fn interpolates_without_noise_and_recovers_prior_far_away() {
    let x = Matrix::from_vec(3, 1, vec![-1.0, 0.0, 2.0]).unwrap();
    let y = [0.3, -0.4, 1.1];
    let gp = fit(&x, &y, SEHyperparams::new(1.0, 2.0, 0.0).unwrap()).unwrap();
    let p = gp.predict(&x).unwrap();
    for i in 0..3 {
        assert!((p.mean[i] - y[i]).abs() < 1e-8);
        assert!(p.variance[i].abs() < 1e-8);
    }
    let far = gp.predict(&Matrix::from_vec(1, 1, vec![1e3]).unwrap()).unwrap();
    assert!((far.mean[0] - gp.target_mean).abs() < 1e-12);
    assert!((far.variance[0] - 2.0).abs() < 1e-12);
}

/// One joint draw of an SE-GP at `x`, via nalgebra's Cholesky.
fn draw_function<R: Rng>(x: &Matrix, hyper: &SEHyperparams, rng: &mut R) -> Vec<f64> {
    let n = x.rows();
    let k = DMatrix::from_fn(n, n, |i, j| se(x.row(i), x.row(j), hyper) + if i == j { 1e-8 } else { 0.0 });
    let l = k.cholesky().unwrap().l();
    let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    (l * z).iter().copied().collect()
}

#[test]
fn intervals_are_calibrated_on_own_prior() {
    let mut rng = seeded(77);
    let hyper = SEHyperparams::new(1.0, 1.0, 0.01).unwrap();
    let n = 200;
    let all = random_matrix(&mut rng, 2 * n, 1, 10.0);
    let f = draw_function(&all, &hyper, &mut rng);
    let train: Vec<usize> = (0..n).collect();
    let test: Vec<usize> = (n..2 * n).collect();
    let y: Vec<f64> = train.iter().map(|&i| f[i] + 0.1 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
    let gp = fit(&all.select_rows(&train), &y, hyper).unwrap();
    // latent-function bounds checked against the latent function
    let p = gp.predict(&all.select_rows(&test)).unwrap();
    let hits = test.iter().enumerate().filter(|(r, &i)| p.lower95[*r] <= f[i] && f[i] <= p.upper95[*r]).count();
    let coverage = hits as f64 / n as f64;
    assert!((0.85..=0.99).contains(&coverage), "coverage {coverage}");
}

#[test]
fn recovers_lengthscale() {
    let mut rng = seeded(3);
    let truth = SEHyperparams::new(1.0, 1.0, 0.01).unwrap();
    let x = random_matrix(&mut rng, 50, 1, 5.0);
    let f = draw_function(&x, &truth, &mut rng);
    let y: Vec<f64> = f.iter().map(|v| v + 0.1 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
    let out = optimize_hyperparameters(&x, &y, &HyperSearch::default()).unwrap();
    let l = out.hyper.lengthscale;
    assert!((0.5..=2.0).contains(&l), "lengthscale {l}");
    assert!(out.log_marginal_likelihood >= out.best_grid_lml);
    assert!(out.evaluations <= 125 + 200);
}

#[test]
fn pure_noise_goes_to_noise_variance() {
    // single draws can show spurious short-range structure; the property holds on average
    let mut ratios = Vec::new();
    for seed in 0..10 {
        let mut rng = seeded(100 + seed);
        let x = random_matrix(&mut rng, 60, 3, 1.0);
        let y: Vec<f64> = (0..60).map(|_| StandardNormal.sample(&mut rng)).collect();
        let h = optimize_hyperparameters(&x, &y, &HyperSearch::default()).unwrap().hyper;
        ratios.push(h.signal_variance / (h.signal_variance + h.noise_variance));
    }
    let mean = ratios.iter().sum::<f64>() / 10.0;
    assert!(mean < 0.5, "ratios {ratios:?}");
}

#[test]
fn sampling_respects_clt_bound() {
    let x = Matrix::from_vec(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
    let gp = fit(&x, &[1.0, 2.0, 0.5], SEHyperparams::new(1.0, 1.0, 0.2).unwrap()).unwrap();
    let xs = Matrix::from_vec(1, 1, vec![1.5]).unwrap();
    let p = gp.predict(&xs).unwrap();
    let draws = sample_posterior(&gp, &xs, &mut seeded(8), 10_000).unwrap();
    let mean = draws.column(0).iter().sum::<f64>() / 1e4;
    assert!((mean - p.mean[0]).abs() < 4.0 * (p.variance[0] / 1e4).sqrt());
    let again = sample_posterior(&gp, &xs, &mut seeded(8), 10_000).unwrap();
    assert_eq!(draws, again);
}

#[test]
fn zero_variance_samples_equal_mean() {
    let p = Prediction { mean: vec![0.25, -1.0], variance: vec![0.0, 0.0], lower95: vec![0.25, -1.0], upper95: vec![0.25, -1.0] };
    let s = sample_prediction(&p, &mut seeded(1), 20);
    assert!(s.row_iter().all(|r| r == [0.25, -1.0]));
}

#[test]
fn nelder_mead_finds_quadratic_minimum() {
    let f = |t: &[f64; 3]| (t[0] - 1.0).powi(2) + 2.0 * (t[1] + 0.5).powi(2) + 0.5 * (t[2] - 3.0).powi(2);
    let (x, v, evals) = nelder_mead(f, [0.0; 3], [1.0; 3], 400);
    assert!(v < 1e-6 && evals <= 400);
    assert!((x[0] - 1.0).abs() < 1e-2 && (x[1] + 0.5).abs() < 1e-2 && (x[2] - 3.0).abs() < 1e-2);
}
