//! Two-level Lorenz-96 system and a fixed-step classical RK4 integrator.
//!
//! Slow variables `X` (length `K`) are cyclic modulo `K`. The fast variables
//! are stored as one flat cyclic chain `Z` of length `K·J` where `Z[j + J·k]`
//! is fast variable `j` of sector `k`; the chain wraps across sectors.
//!
//! ```text
//! dX_k/dt = -X_{k-1}(X_{k-2} - X_{k+1}) - X_k + F - h·c·Ȳ_k
//! dZ_i/dt = -c·b·Z_{i+1}(Z_{i+2} - Z_{i-1}) - c·Z_i + (h·c/J)·X_{⌊i/J⌋}
//! ```

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L96Params {
    /// Number of slow variables.
    pub k: usize,
    /// Fast variables per slow variable.
    pub j: usize,
    pub forcing: f64,
    /// Amplitude of the fast nonlinearity.
    pub b: f64,
    /// Time-scale ratio between fast and slow variables.
    pub c: f64,
    /// Slow–fast coupling strength.
    pub h: f64,
}

impl L96Params {
    pub fn new(k: usize, j: usize, forcing: f64, b: f64, c: f64, h: f64) -> Result<Self> {
        let p = L96Params { k, j, forcing, b, c, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 4 {
            return Err(Error::InvalidParams(format!("K must be at least 4, got {}", self.k)));
        }
        if self.j < 1 {
            return Err(Error::InvalidParams(format!("J must be at least 1, got {}", self.j)));
        }
        if !(self.b > 0.0) || !(self.c > 0.0) {
            return Err(Error::InvalidParams(format!("b and c must be positive, got b={} c={}", self.b, self.c)));
        }
        if !self.forcing.is_finite() || !self.h.is_finite() || !self.b.is_finite() || !self.c.is_finite() {
            return Err(Error::InvalidParams(format!("non-finite parameter in {:?}", self)));
        }
        Ok(())
    }

    /// Length of the flat `[X, Z]` vector.
    pub fn dim(&self) -> usize {
        self.k * (1 + self.j)
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L96State {
    pub x: Vec<f64>,
    /// Flat fast chain, `y[j + J·k]` belongs to slow variable `k`.
    pub y: Vec<f64>,
}

impl L96State {
    pub fn zeros(params: &L96Params) -> Self {
        L96State { x: vec![0.0; params.k], y: vec![0.0; params.k * params.j] }
    }

    pub fn check(&self, params: &L96Params) -> Result<()> {
        if self.x.len() != params.k {
            return Err(Error::InvalidState(format!("X has length {}, expected K = {}", self.x.len(), params.k)));
        }
        if self.y.len() != params.k * params.j {
            return Err(Error::InvalidState(format!(
                "Y has length {}, expected K·J = {}",
                self.y.len(),
                params.k * params.j
            )));
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("state contains non-finite entries".into()));
        }
        Ok(())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x.len() + self.y.len());
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.y);
        v
    }

    pub fn from_flat(flat: &[f64], k: usize) -> Self {
        L96State { x: flat[..k].to_vec(), y: flat[k..].to_vec() }
    }
}

/// Mean of the fast variables attached to each slow variable.
pub fn l96_ybar(state: &L96State, params: &L96Params) -> Result<Vec<f64>> {
    state.check(params)?;
    Ok(ybar_flat(&state.y, params.j))
}

fn ybar_flat(y: &[f64], j: usize) -> Vec<f64> {
    y.chunks_exact(j).map(|block| block.iter().sum::<f64>() / j as f64).collect()
}

/// Time derivative of the full state.
pub fn l96_derivative(state: &L96State, params: &L96Params) -> Result<L96State> {
    state.check(params)?;
    let flat = state.to_flat();
    let mut out = vec![0.0; flat.len()];
    derivative_flat(params, &flat, &mut out);
    Ok(L96State::from_flat(&out, params.k))
}

/// Right-hand side on the flat `[X, Z]` layout; no allocation.
pub fn derivative_flat(p: &L96Params, state: &[f64], out: &mut [f64]) {
    let (k, j) = (p.k, p.j);
    let (x, z) = state.split_at(k);
    let (dx, dz) = out.split_at_mut(k);
    let nz = k * j;
    let hc = p.h * p.c;
    let inv_j = 1.0 / j as f64;

    for i in 0..k {
        let xm1 = x[(i + k - 1) % k];
        let xm2 = x[(i + k - 2) % k];
        let xp1 = x[(i + 1) % k];
        let ybar = z[i * j..(i + 1) * j].iter().sum::<f64>() * inv_j;
        dx[i] = -xm1 * (xm2 - xp1) - x[i] + p.forcing - hc * ybar;
    }

    let cb = p.c * p.b;
    let coupling = hc * inv_j;
    for i in 0..nz {
        let zp1 = z[(i + 1) % nz];
        let zp2 = z[(i + 2) % nz];
        let zm1 = z[(i + nz - 1) % nz];
        dz[i] = -cb * zp1 * (zp2 - zm1) - p.c * z[i] + coupling * x[i / j];
    }
}

/// Reusable RK4 stepper holding its stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
    steps: usize,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
            steps: 0,
        }
    }

    /// Number of steps taken so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Advances `state` in place by `dt`. A non-finite stage derivative leaves
    /// `state` untouched and reports the index of the failing step.
    pub fn step<F>(&mut self, mut deriv: F, state: &mut [f64], dt: f64) -> Result<()>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let step = self.steps;
        let half = 0.5 * dt;
        let overflow = |k: &[f64]| k.iter().any(|v| !v.is_finite());

        deriv(state, &mut self.k1);
        if overflow(&self.k1) {
            return Err(Error::NumericOverflow { step });
        }
        for ((t, &s), &k) in self.tmp.iter_mut().zip(state.iter()).zip(&self.k1) {
            *t = s + half * k;
        }
        deriv(&self.tmp, &mut self.k2);
        if overflow(&self.k2) {
            return Err(Error::NumericOverflow { step });
        }
        for ((t, &s), &k) in self.tmp.iter_mut().zip(state.iter()).zip(&self.k2) {
            *t = s + half * k;
        }
        deriv(&self.tmp, &mut self.k3);
        if overflow(&self.k3) {
            return Err(Error::NumericOverflow { step });
        }
        for ((t, &s), &k) in self.tmp.iter_mut().zip(state.iter()).zip(&self.k3) {
            *t = s + dt * k;
        }
        deriv(&self.tmp, &mut self.k4);
        if overflow(&self.k4) {
            return Err(Error::NumericOverflow { step });
        }
        let sixth = dt / 6.0;
        for (i, s) in state.iter_mut().enumerate() {
            *s += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        self.steps += 1;
        Ok(())
    }
}

/// One classical RK4 step: `state + (dt/6)(k1 + 2k2 + 2k3 + k4)`.
pub fn rk4_step<F>(deriv: F, state: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if !(dt > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {dt}")));
    }
    let mut next = state.to_vec();
    Rk4::new(state.len()).step(deriv, &mut next, dt)?;
    Ok(next)
}

/// Retained part of an integration, stored flat: state `i` occupies
/// `data[i·dim..(i+1)·dim]` in `[X, Z]` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    /// Model time of the first retained state.
    pub t0: f64,
    k: usize,
    j: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.data.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.k, self.j)
    }

    fn dim(&self) -> usize {
        self.k * (1 + self.j)
    }

    pub fn flat_state(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn state(&self, i: usize) -> L96State {
        L96State::from_flat(self.flat_state(i), self.k)
    }

    pub fn states(&self) -> impl Iterator<Item = L96State> + '_ {
        (0..self.len()).map(move |i| self.state(i))
    }

    /// Time series of slow variable `index` (0-based).
    pub fn x_series(&self, index: usize) -> Vec<f64> {
        self.data.chunks_exact(self.dim()).map(|s| s[index]).collect()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }
}

/// Advances `n_discard + n_keep` steps from `initial` and keeps the last `n_keep` states.
///
/// The first retained state is the one reached after `n_discard + 1` steps, at
/// model time `t0 = n_discard·dt`.
pub fn integrate(
    initial: &L96State,
    params: &L96Params,
    dt: f64,
    n_keep: usize,
    n_discard: usize,
) -> Result<Trajectory> {
    integrate_substepped(initial, params, dt, 1, n_keep, n_discard)
}

/// Like [`integrate`], but each output step of size `dt` is made of
/// `substeps` RK4 steps of size `dt / substeps`. Divergence is reported with
/// the index of the output step.
pub fn integrate_substepped(
    initial: &L96State,
    params: &L96Params,
    dt: f64,
    substeps: usize,
    n_keep: usize,
    n_discard: usize,
) -> Result<Trajectory> {
    params.validate()?;
    initial.check(params)?;
    if !(dt > 0.0) || n_keep == 0 || substeps == 0 {
        return Err(Error::Config(format!(
            "need dt > 0, n_keep > 0 and substeps > 0, got dt={dt}, n_keep={n_keep}, substeps={substeps}"
        )));
    }
    let dim = params.dim();
    let mut state = initial.to_flat();
    let mut stepper = Stepper::new(params, dt, substeps);
    let mut data = Vec::with_capacity(n_keep * dim);
    for step in 0..n_discard + n_keep {
        stepper.advance(&mut state).map_err(|_| Error::Diverged { step })?;
        if step >= n_discard {
            data.extend_from_slice(&state);
        }
    }
    Ok(Trajectory { dt, t0: n_discard as f64 * dt, k: params.k, j: params.j, data })
}

/// Output-step integrator for the Lorenz-96 system.
struct Stepper<'a> {
    params: &'a L96Params,
    rk: Rk4,
    h: f64,
    substeps: usize,
}

impl<'a> Stepper<'a> {
    fn new(params: &'a L96Params, dt: f64, substeps: usize) -> Self {
        Stepper { params, rk: Rk4::new(params.dim()), h: dt / substeps as f64, substeps }
    }

    fn advance(&mut self, state: &mut [f64]) -> Result<()> {
        let p = self.params;
        for _ in 0..self.substeps {
            self.rk.step(|s: &[f64], o: &mut [f64]| derivative_flat(p, s, o), state, self.h)?;
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow { step: self.rk.steps() });
        }
        Ok(())
    }
}

/// Integrates `n_steps` output steps from `initial`, returning every state
/// in flat layout, prefixed by the initial state itself.
pub fn integrate_from(initial: &[f64], params: &L96Params, dt: f64, substeps: usize, n_steps: usize) -> Result<Vec<f64>> {
    if !(dt > 0.0) || substeps == 0 {
        return Err(Error::Config(format!("need dt > 0 and substeps > 0, got dt={dt}, substeps={substeps}")));
    }
    let dim = params.dim();
    let mut state = initial.to_vec();
    let mut stepper = Stepper::new(params, dt, substeps);
    let mut out = Vec::with_capacity((n_steps + 1) * dim);
    out.extend_from_slice(&state);
    for step in 0..n_steps {
        stepper.advance(&mut state).map_err(|_| Error::Diverged { step })?;
        out.extend_from_slice(&state);
    }
    Ok(out)
}

/// `X_k = F + 0.5·ε_k`, `Y = 0.05·δ` with standard normal `ε`, `δ`.
pub fn random_initial_state<R: Rng + ?Sized>(params: &L96Params, rng: &mut R) -> L96State {
    let x = (0..params.k)
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            params.forcing + 0.5 * e
        })
        .collect();
    let y = (0..params.k * params.j)
        .map(|_| {
            let d: f64 = StandardNormal.sample(rng);
            0.05 * d
        })
        .collect();
    L96State { x, y }
}
