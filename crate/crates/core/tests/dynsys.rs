use chaosid_core::dynsys::*;
use chaosid_core::rng::seeded;
use chaosid_core::Error;
use proptest::prelude::*;
use rand::Rng;

/// Reference right-hand side written over `Y[k][j]` with explicit carries
/// between neighbouring blocks.
fn oracle(state: &L96State, p: &L96Params) -> (Vec<f64>, Vec<f64>) {
    let (k, j) = (p.k as isize, p.j as isize);
    let x = |i: isize| state.x[i.rem_euclid(k) as usize];
    let y = |kk: isize, jj: isize| {
        let carry = jj.div_euclid(j);
        let kk = (kk + carry).rem_euclid(k);
        state.y[(kk * j + jj.rem_euclid(j)) as usize]
    };
    let mut dx = Vec::new();
    let mut dy = Vec::new();
    for kk in 0..k {
        let mut sum = 0.0;
        for jj in 0..j {
            sum += y(kk, jj);
        }
        dx.push(-x(kk - 1) * (x(kk - 2) - x(kk + 1)) - x(kk) + p.forcing - p.h * p.c * sum / j as f64);
    }
    for kk in 0..k {
        for jj in 0..j {
            dy.push(
                -p.c * p.b * y(kk, jj + 1) * (y(kk, jj + 2) - y(kk, jj - 1)) - p.c * y(kk, jj)
                    + p.h * p.c / j as f64 * x(kk),
            );
        }
    }
    (dx, dy)
}

fn random_state(p: &L96Params, seed: u64) -> L96State {
    let mut rng = seeded(seed);
    L96State {
        x: (0..p.k).map(|_| rng.random_range(-10.0..15.0)).collect(),
        y: (0..p.k * p.j).map(|_| rng.random_range(-2.0..2.0)).collect(),
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= tol * (1.0 + u.abs().max(v.abs())))
}

proptest! {
    #[test]
    fn derivative_matches_blockwise_oracle(
        k in 4usize..9, j in 1usize..9, f in 0.0f64..25.0, h in 0.0f64..2.0, b in 1.0f64..20.0,
        c in 1.0f64..20.0, seed in any::<u64>(),
    ) {
        let p = L96Params::new(k, j, f, b, c, h).unwrap();
        let s = random_state(&p, seed);
        let d = l96_derivative(&s, &p).unwrap();
        let (dx, dy) = oracle(&s, &p);
        prop_assert!(close(&d.x, &dx, 1e-12));
        prop_assert!(close(&d.y, &dy, 1e-12));
    }

    #[test]
    fn ybar_is_block_mean(k in 4usize..9, j in 1usize..9, seed in any::<u64>()) {
        let p = L96Params::new(k, j, 10.0, 10.0, 10.0, 1.0).unwrap();
        let s = random_state(&p, seed);
        let yb = l96_ybar(&s, &p).unwrap();
        for kk in 0..k {
            let mean = (0..j).map(|jj| s.y[kk * j + jj]).sum::<f64>() / j as f64;
            prop_assert!((yb[kk] - mean).abs() < 1e-12);
        }
    }
}

#[test]
fn resting_state_is_fixed_point() {
    for (k, j, f) in [(4, 4, 10.0), (8, 8, 20.0), (5, 3, 7.5)] {
        let p = L96Params::new(k, j, f, 10.0, 10.0, 0.0).unwrap();
        let s = L96State { x: vec![f; k], y: vec![0.0; k * j] };
        let d = l96_derivative(&s, &p).unwrap();
        assert!(d.x.iter().chain(&d.y).all(|v| *v == 0.0));
    }
}

#[test]
fn rotation_equivariance() {
    let p = L96Params::new(8, 4, 20.0, 10.0, 10.0, 1.3).unwrap();
    let rotate = |s: &L96State| {
        let mut x = s.x.clone();
        let mut y = s.y.clone();
        x.rotate_right(1);
        y.rotate_right(p.j);
        L96State { x, y }
    };
    for seed in 0..100 {
        let s = random_state(&p, seed);
        let d_rot = l96_derivative(&rotate(&s), &p).unwrap();
        let rot_d = rotate(&l96_derivative(&s, &p).unwrap());
        assert!(close(&d_rot.x, &rot_d.x, 1e-12));
        assert!(close(&d_rot.y, &rot_d.y, 1e-12));
    }
}

#[test]
fn shape_errors() {
    let p = L96Params::new(4, 4, 10.0, 10.0, 10.0, 1.0).unwrap();
    let bad = L96State { x: vec![0.0; 4], y: vec![0.0; 15] };
    assert!(matches!(l96_derivative(&bad, &p), Err(Error::InvalidState(_))));
    assert!(L96Params::new(3, 4, 10.0, 10.0, 10.0, 1.0).is_err());
}

fn decay_error(dt: f64) -> f64 {
    let n = (1.0 / dt).round() as usize;
    let mut y = vec![1.0];
    for _ in 0..n {
        y = rk4_step(|s: &[f64], o: &mut [f64]| o[0] = -s[0], &y, dt).unwrap();
    }
    (y[0] - (-1.0f64).exp()).abs()
}

#[test]
fn rk4_is_fourth_order() {
    for dt in [0.1, 0.05, 0.02] {
        let ratio = decay_error(dt) / decay_error(dt / 2.0);
        assert!((14.0..=18.0).contains(&ratio), "dt={dt} ratio={ratio}");
    }
}

#[test]
fn rk4_single_step_exact_for_cubic() {
    // y' = t² encoded as an autonomous system (y, t)
    let next = rk4_step(|s: &[f64], o: &mut [f64]| {
        o[0] = s[1] * s[1];
        o[1] = 1.0;
    }, &[0.0, 0.0], 0.5)
    .unwrap();
    assert!((next[0] - 0.125 / 3.0).abs() < 1e-15);
}

#[test]
fn small_perturbation_grows_past_one() {
    let p = L96Params::new(8, 8, 10.0, 10.0, 10.0, 1.0).unwrap();
    let init = random_initial_state(&p, &mut seeded(11));
    let spun = integrate(&init, &p, 0.005, 1, 1999).unwrap();
    let base = spun.flat_state(0).to_vec();
    let mut bumped = base.clone();
    bumped[0] += 1e-8;
    let a = integrate_from(&base, &p, 0.005, 1, 1000).unwrap();
    let b = integrate_from(&bumped, &p, 0.005, 1, 1000).unwrap();
    let dim = p.dim();
    let max_sep = (0..=1000).map(|i| (a[i * dim] - b[i * dim]).abs()).fold(0.0, f64::max);
    assert!(max_sep > 1.0, "max separation {max_sep}");
}

#[test]
fn initial_states_stay_near_forcing() {
    let p = L96Params::new(8, 8, 20.0, 10.0, 10.0, 1.0).unwrap();
    for seed in 0..1000 {
        let s = random_initial_state(&p, &mut seeded(seed));
        assert!(s.x.iter().all(|x| (x - 20.0).abs() < 5.0));
        assert!(s.y.iter().all(|y| y.abs() < 1.0));
    }
}

#[test]
fn trajectory_bookkeeping() {
    let p = L96Params::new(4, 4, 10.0, 10.0, 10.0, 0.5).unwrap();
    let init = random_initial_state(&p, &mut seeded(1));
    let t = integrate_substepped(&init, &p, 0.005, 2, 50, 30).unwrap();
    assert_eq!(t.len(), 50);
    assert!((t.time(0) - 0.15).abs() < 1e-12);
    let whole = integrate_from(&init.to_flat(), &p, 0.005, 2, 80).unwrap();
    // retained state i is the state after n_discard + i + 1 steps
    assert_eq!(t.flat_state(0), &whole[31 * p.dim()..32 * p.dim()]);
    assert_eq!(t.x_series(2)[49], whole[80 * p.dim() + 2]);
}
