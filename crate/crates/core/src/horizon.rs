//! Axisymmetric waves on an extremal collar [M, M + δ_c] in ingoing
//! coordinates, the conserved horizon charge, and the transversal
//! non-decay check.
//!
//! Angles are sampled at Gauss–Legendre nodes in x = cosθ, so the axis is
//! never a grid point and the angular operator is applied through the exact
//! Legendre transform on those nodes.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{BandLu, BandMatrix};
use crate::modes::legendre_p;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HorizonError {
    #[error("background is not extremal: a^2 + Q^2 - M^2 = {0:e}")]
    NotExtremal(f64),
    #[error("run to v = {requested} exceeds the domain-of-dependence window v <= {limit}")]
    DomainOfDependenceExceeded { requested: f64, limit: f64 },
    #[error("step failure: {0}")]
    StepFailure(String),
    #[error("need {need} horizon samples, have {have}")]
    InsufficientHistory { have: usize, need: usize },
    #[error("scheme mismatch: {0}")]
    WrongScheme(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub const EXTREMAL_TOL: f64 = 1e-12;
const HISTORY: usize = 3;

/// Gauss–Legendre nodes and weights on [−1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n {
        let mut z = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_p(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_p(n, z);
        x[n - 1 - k] = z;
        w[n - 1 - k] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// d/dx((1 − x²) d/dx) on the nodes, via the nodal Legendre transform.
fn angular_operator(x: &[f64], w: &[f64]) -> Vec<f64> {
    let n = x.len();
    let p: Vec<Vec<f64>> = (0..n).map(|l| x.iter().map(|&xi| legendre_p(l, xi).0).collect()).collect();
    let mut op = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            op[j * n + k] = (0..n)
                .map(|l| {
                    let lf = l as f64;
                    -lf * (lf + 1.0) * p[l][j] * (2.0 * lf + 1.0) / 2.0 * w[k] * p[l][k]
                })
                .sum();
        }
    }
    op
}

#[derive(Clone, Debug, Serialize)]
pub struct HorizonTrace {
    pub v: f64,
    pub u: Vec<f64>,
    pub ur: Vec<f64>,
    pub p: Vec<f64>,
}

/// Samples on the collar. Arrays are indexed `i * n_theta + j` with i the
/// radial node (i = 0 on the horizon) and j the angular node.
#[derive(Clone, Debug)]
pub struct ExtremalState {
    pub mass: f64,
    pub a: f64,
    pub q: f64,
    pub delta_c: f64,
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub weights: Vec<f64>,
    pub u: Vec<f64>,
    pub ur: Vec<f64>,
    /// ∂_v u.
    pub p: Vec<f64>,
    pub v: f64,
    lap: Vec<f64>,
    u_outer: Vec<f64>,
    history: VecDeque<HorizonTrace>,
}

impl ExtremalState {
    /// `data(r, x)` returns (u, ∂_r u, ∂_v u) at v = 0.
    pub fn new(
        mass: f64,
        a: f64,
        q: f64,
        delta_c: f64,
        n_r: usize,
        n_theta: usize,
        data: impl Fn(f64, f64) -> (f64, f64, f64),
    ) -> Result<Self, HorizonError> {
        let excess = a * a + q * q - mass * mass;
        if !(mass > 0.0) || excess.abs() > EXTREMAL_TOL * mass * mass {
            return Err(HorizonError::NotExtremal(excess));
        }
        if n_r < 4 || n_theta < 1 || !(delta_c > 0.0) {
            return Err(HorizonError::InvalidGrid(format!("n_r = {n_r}, n_theta = {n_theta}, delta_c = {delta_c}")));
        }
        let h = delta_c / n_r as f64;
        let r: Vec<f64> = (0..=n_r).map(|i| mass + h * i as f64).collect();
        let (x, weights) = gauss_legendre(n_theta);
        let lap = angular_operator(&x, &weights);
        let mut u = Vec::with_capacity(r.len() * n_theta);
        let mut ur = Vec::with_capacity(u.capacity());
        let mut p = Vec::with_capacity(u.capacity());
        for &ri in &r {
            for &xj in &x {
                let (a0, a1, a2) = data(ri, xj);
                u.push(a0);
                ur.push(a1);
                p.push(a2);
            }
        }
        let u_outer = u[n_r * n_theta..].to_vec();
        let mut s = ExtremalState {
            mass,
            a,
            q,
            delta_c,
            r,
            x,
            weights,
            u,
            ur,
            p,
            v: 0.0,
            lap,
            u_outer,
            history: VecDeque::new(),
        };
        s.record();
        Ok(s)
    }

    pub fn constant(mass: f64, a: f64, q: f64, c: f64, n_r: usize, n_theta: usize) -> Result<Self, HorizonError> {
        Self::new(mass, a, q, 0.5 * mass, n_r, n_theta, |_, _| (c, 0.0, 0.0))
    }

    pub fn n_theta(&self) -> usize {
        self.x.len()
    }

    pub fn n_r(&self) -> usize {
        self.r.len() - 1
    }

    pub fn h(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    fn delta(&self, r: f64) -> f64 {
        (r - self.mass) * (r - self.mass)
    }

    fn horizon(&self, f: &[f64]) -> Vec<f64> {
        f[..self.n_theta()].to_vec()
    }

    fn record(&mut self) {
        let t = HorizonTrace {
            v: self.v,
            u: self.horizon(&self.u),
            ur: self.horizon(&self.ur),
            p: self.horizon(&self.p),
        };
        self.history.push_back(t);
        while self.history.len() > HISTORY {
            self.history.pop_front();
        }
    }

    fn apply_lap(&self, f: &[f64], i: usize) -> Vec<f64> {
        let n = self.n_theta();
        (0..n)
            .map(|j| (0..n).map(|k| self.lap[j * n + k] * f[i * n + k]).sum())
            .collect()
    }

    /// ½∫ f(M, θ) sinθ dθ.
    pub fn horizon_mean(&self, f: &[f64]) -> f64 {
        0.5 * self.weights.iter().zip(f).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Outgoing travel time from the collar midpoint to its outer edge,
    /// ∫ 2(r² + a²)/Δ dr over [M + δ_c/2, M + δ_c].
    pub fn dependence_window(&self) -> f64 {
        let (y1, y2) = (0.5 * self.delta_c, self.delta_c);
        let m = self.mass;
        2.0 * ((y2 - y1) + 2.0 * m * (y2 / y1).ln() + (m * m + self.a * self.a) * (1.0 / y1 - 1.0 / y2))
    }
}

/// Axisymmetric form ∫₀^π (2(M² + a²)∂_r u + 2Mu + a² sin²θ ∂_v u) sinθ dθ on r = M.
pub fn extremal_charge(state: &ExtremalState) -> f64 {
    let (m, a) = (state.mass, state.a);
    let n = state.n_theta();
    (0..n)
        .map(|j| {
            let s2 = 1.0 - state.x[j] * state.x[j];
            state.weights[j] * (2.0 * (m * m + a * a) * state.ur[j] + 2.0 * m * state.u[j] + a * a * s2 * state.p[j])
        })
        .sum()
}

/// Full-sphere form (includes the φ-integral).
pub fn extremal_charge_sphere(state: &ExtremalState) -> f64 {
    2.0 * std::f64::consts::PI * extremal_charge(state)
}

/// ∫ ∂_θ(sinθ ∂_θ u) dθ on the horizon slice.
pub fn pole_term(state: &ExtremalState) -> f64 {
    let lu = state.apply_lap(&state.u, 0);
    state.weights.iter().zip(&lu).map(|(w, v)| w * v).sum()
}

/// θ-integrated horizon equation at the latest sample, with second-order
/// backward differences in v.
pub fn horizon_equation_residual(state: &ExtremalState) -> Result<f64, HorizonError> {
    let hs = &state.history;
    if hs.len() < HISTORY {
        return Err(HorizonError::InsufficientHistory { have: hs.len(), need: HISTORY });
    }
    let (t0, t1, t2) = (&hs[0], &hs[1], &hs[2]);
    let dv = t2.v - t1.v;
    if ((t1.v - t0.v) - dv).abs() > 1e-12 * dv.abs().max(1.0) {
        return Err(HorizonError::StepFailure("non-uniform history".into()));
    }
    let d = |f0: &[f64], f1: &[f64], f2: &[f64], j: usize| (3.0 * f2[j] - 4.0 * f1[j] + f0[j]) / (2.0 * dv);
    let (m, a) = (state.mass, state.a);
    let lu = state.apply_lap(&state.u, 0);
    Ok((0..state.n_theta())
        .map(|j| {
            let s2 = 1.0 - state.x[j] * state.x[j];
            let res = 2.0 * (m * m + a * a) * d(&t0.ur, &t1.ur, &t2.ur, j)
                + 2.0 * m * d(&t0.u, &t1.u, &t2.u, j)
                + a * a * s2 * d(&t0.p, &t1.p, &t2.p, j)
                + lu[j];
            state.weights[j] * res
        })
        .sum())
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ChargeSeries {
    pub v: Vec<f64>,
    pub charge: Vec<f64>,
    pub drift: f64,
    pub mean_ur: Vec<f64>,
    pub mean_u: Vec<f64>,
    pub mean_p: Vec<f64>,
}

impl ChargeSeries {
    fn push(&mut self, s: &ExtremalState) {
        let n = s.n_theta();
        self.v.push(s.v);
        let c = extremal_charge(s);
        if let Some(&c0) = self.charge.first() {
            self.drift = self.drift.max((c - c0).abs());
        }
        self.charge.push(c);
        self.mean_ur.push(s.horizon_mean(&s.ur[..n]));
        self.mean_u.push(s.horizon_mean(&s.u[..n]));
        self.mean_p.push(s.horizon_mean(&s.p[..n]));
    }
}

fn check_window(state: &ExtremalState, dv: f64, n_steps: usize) -> Result<(), HorizonError> {
    let requested = state.v + dv * n_steps as f64;
    let limit = state.dependence_window();
    if requested > limit * (1.0 + 1e-12) {
        return Err(HorizonError::DomainOfDependenceExceeded { requested, limit });
    }
    Ok(())
}

/// Second-order radial derivative, one-sided at both ends.
fn radial_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len() - 1;
    (0..=n)
        .map(|i| {
            if i == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
            } else if i == n {
                (3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * h)
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

struct RnFields {
    u: Vec<f64>,
    ur: Vec<f64>,
}

impl ExtremalState {
    /// Recover u from W = 2r∂_r(ru) by trapezoidal integration inward from
    /// the frozen outer trace.
    fn rn_recover(&self, w: &[f64], outer: &[f64]) -> RnFields {
        let (nt, nr, h) = (self.n_theta(), self.n_r(), self.h());
        let mut u = vec![0.0; w.len()];
        let mut ur = vec![0.0; w.len()];
        for j in 0..nt {
            let mut ru = self.r[nr] * outer[j];
            u[nr * nt + j] = outer[j];
            for i in (0..nr).rev() {
                let g1 = w[(i + 1) * nt + j] / (2.0 * self.r[i + 1]);
                let g0 = w[i * nt + j] / (2.0 * self.r[i]);
                ru -= 0.5 * h * (g0 + g1);
                u[i * nt + j] = ru / self.r[i];
            }
            for i in 0..=nr {
                let (ri, k) = (self.r[i], i * nt + j);
                ur[k] = (w[k] - 2.0 * ri * u[k]) / (2.0 * ri * ri);
            }
        }
        RnFields { u, ur }
    }

    /// ∂_v W = −∂_r(Δ∂_r u) − Δ_θ u.
    fn rn_rhs(&self, w: &[f64]) -> (Vec<f64>, RnFields) {
        let (nt, nr, h) = (self.n_theta(), self.n_r(), self.h());
        let f = self.rn_recover(w, &self.u_outer);
        let mut out = vec![0.0; w.len()];
        for j in 0..nt {
            let flux: Vec<f64> = (0..=nr).map(|i| self.delta(self.r[i]) * f.ur[i * nt + j]).collect();
            let mut g = radial_derivative(&flux, h);
            // the charge leaks only through this stencil; close it at third order
            g[0] = (-11.0 * flux[0] + 18.0 * flux[1] - 9.0 * flux[2] + 2.0 * flux[3]) / (6.0 * h);
            for i in 0..=nr {
                out[i * nt + j] = -g[i];
            }
        }
        for i in 0..=nr {
            let lu = self.apply_lap(&f.u, i);
            for j in 0..nt {
                out[i * nt + j] -= lu[j];
            }
        }
        (out, f)
    }

    fn rn_w(&self) -> Vec<f64> {
        let nt = self.n_theta();
        (0..self.u.len())
            .map(|k| {
                let r = self.r[k / nt];
                2.0 * r * r * self.ur[k] + 2.0 * r * self.u[k]
            })
            .collect()
    }
}

/// Characteristic RK4 evolution for extremal Reissner–Nordström.
pub fn evolve_extremal_rn(
    mut state: ExtremalState,
    dv: f64,
    n_steps: usize,
) -> Result<(ExtremalState, ChargeSeries), HorizonError> {
    if state.a != 0.0 {
        return Err(HorizonError::WrongScheme("characteristic scheme needs a = 0".into()));
    }
    check_window(&state, dv, n_steps)?;
    let mut w = state.rn_w();
    let zero_outer = vec![0.0; state.n_theta()];
    let sync = |state: &mut ExtremalState, w: &[f64]| {
        let (dw, f) = state.rn_rhs(w);
        // ∂_v u from ∂_v W with a fixed outer trace
        let dvf = state.rn_recover(&dw, &zero_outer);
        state.u = f.u;
        state.ur = f.ur;
        state.p = dvf.u;
    };
    sync(&mut state, &w);
    let mut series = ChargeSeries::default();
    series.push(&state);
    state.history.clear();
    state.record();
    for _ in 0..n_steps {
        let k1 = state.rn_rhs(&w).0;
        let axpy = |c: f64, k: &[f64]| -> Vec<f64> { w.iter().zip(k).map(|(a, b)| a + c * b).collect() };
        let k2 = state.rn_rhs(&axpy(0.5 * dv, &k1)).0;
        let k3 = state.rn_rhs(&axpy(0.5 * dv, &k2)).0;
        let k4 = state.rn_rhs(&axpy(dv, &k3)).0;
        for k in 0..w.len() {
            w[k] += dv / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(HorizonError::StepFailure(format!("non-finite state at v = {}", state.v + dv)));
        }
        state.v += dv;
        sync(&mut state, &w);
        state.record();
        series.push(&state);
    }
    Ok((state, series))
}

/// Implicit-midpoint evolution for extremal Kerr–Newman on the slices
/// τ = v − r, which stay spacelike when a ≠ 0 (constant-v slices do not).
/// With p = ∂_τ u = ∂_v u the equation reads
///   c ∂_τ p = ∂_r(Δ∂_r u) + 2(r² + a² − Δ)∂_r p + (2r − Δ′)p + Δ_θ u,
///   c = 2(r² + a²) − Δ − a² sin²θ,
/// with radial derivatives along the slice. Data are posed on τ = 0.
/// EXPERIMENTAL: only constant solutions and the refinement order of the
/// charge drift are checked.
pub fn evolve_extremal_kn(
    mut state: ExtremalState,
    dv: f64,
    n_steps: usize,
) -> Result<(ExtremalState, ChargeSeries), HorizonError> {
    if state.a == 0.0 {
        return Err(HorizonError::WrongScheme("the (u, p) scheme needs a != 0".into()));
    }
    check_window(&state, dv, n_steps)?;
    let (nt, nr, h) = (state.n_theta(), state.n_r(), state.h());
    let (m, a) = (state.mass, state.a);
    let dl = |r: f64| (r - m) * (r - m);
    let dim = 2 * (nr + 1) * nt;
    let idx = |i: usize, j: usize, c: usize| 2 * (i * nt + j) + c;
    let kl = 4 * 2 * nt;
    let mut lhs = BandMatrix::<f64>::new(dim, kl, kl);
    let mut rhs_op = BandMatrix::<f64>::new(dim, kl, kl);
    let d1 = |i: usize| -> Vec<(usize, f64)> {
        if i == 0 {
            vec![(0, -1.5 / h), (1, 2.0 / h), (2, -0.5 / h)]
        } else {
            vec![(i - 1, -0.5 / h), (i + 1, 0.5 / h)]
        }
    };
    // ∂_r(Δ∂_r u); at the horizon the flux Δ∂_r u vanishes
    let d2 = |i: usize| -> Vec<(usize, f64)> {
        if i == 0 {
            let mut out = Vec::new();
            for (k, c) in [(1usize, 2.0 / h), (2, -0.5 / h)] {
                let s = dl(state.r[k]) / (2.0 * h);
                out.push((k + 1, c * s));
                out.push((k - 1, -c * s));
            }
            out
        } else {
            let (rl, rr) = (0.5 * (state.r[i - 1] + state.r[i]), 0.5 * (state.r[i] + state.r[i + 1]));
            let (a_l, a_r) = (dl(rl) / (h * h), dl(rr) / (h * h));
            vec![(i - 1, a_l), (i, -a_l - a_r), (i + 1, a_r)]
        }
    };
    for i in 0..=nr {
        for j in 0..nt {
            let (ru, rp) = (idx(i, j, 0), idx(i, j, 1));
            lhs.add(ru, ru, 1.0);
            rhs_op.add(ru, ru, 1.0);
            lhs.add(rp, rp, 1.0);
            if i == nr {
                // frozen outer trace: u fixed, p = 0
                continue;
            }
            rhs_op.add(rp, rp, 1.0);
            lhs.add(ru, rp, -0.5 * dv);
            rhs_op.add(ru, rp, 0.5 * dv);
            let ri = state.r[i];
            let s2 = 1.0 - state.x[j] * state.x[j];
            let c = 2.0 * (ri * ri + a * a) - dl(ri) - a * a * s2;
            let mut k_entries: Vec<(usize, f64)> = Vec::new();
            for (i2, w) in d1(i) {
                k_entries.push((idx(i2, j, 1), 2.0 * (ri * ri + a * a - dl(ri)) * w / c));
            }
            k_entries.push((rp, (2.0 * ri - 2.0 * (ri - m)) / c));
            for (i2, w) in d2(i) {
                k_entries.push((idx(i2, j, 0), w / c));
            }
            for k in 0..nt {
                k_entries.push((idx(i, k, 0), state.lap[j * nt + k] / c));
            }
            for (col, w) in k_entries {
                lhs.add(rp, col, -0.5 * dv * w);
                rhs_op.add(rp, col, 0.5 * dv * w);
            }
        }
    }
    let lu: BandLu<f64> = lhs.factor().map_err(|e| HorizonError::StepFailure(e.to_string()))?;
    let mut y = vec![0.0; dim];
    for i in 0..=nr {
        for j in 0..nt {
            y[idx(i, j, 0)] = state.u[i * nt + j];
            y[idx(i, j, 1)] = if i == nr { 0.0 } else { state.p[i * nt + j] };
        }
    }
    // ∂_r at fixed v is the slice derivative minus p
    let unpack = |state: &mut ExtremalState, y: &[f64]| {
        for i in 0..=nr {
            for j in 0..nt {
                state.u[i * nt + j] = y[idx(i, j, 0)];
                state.p[i * nt + j] = y[idx(i, j, 1)];
            }
        }
        for j in 0..nt {
            let col: Vec<f64> = (0..=nr).map(|i| state.u[i * nt + j]).collect();
            let d = radial_derivative(&col, h);
            for i in 0..=nr {
                state.ur[i * nt + j] = d[i] - state.p[i * nt + j];
            }
        }
    };
    unpack(&mut state, &y);
    let mut series = ChargeSeries::default();
    series.push(&state);
    state.history.clear();
    state.record();
    for _ in 0..n_steps {
        let b = rhs_op.matvec(&y);
        y = lu.solve(&b).map_err(|e| HorizonError::StepFailure(e.to_string()))?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(HorizonError::StepFailure(format!("non-finite state at v = {}", state.v + dv)));
        }
        state.v += dv;
        unpack(&mut state, &y);
        state.record();
        series.push(&state);
    }
    Ok((state, series))
}

/// log₂ of the drift ratio between a run and its refinement.
pub fn refinement_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[derive(Clone, Debug, Serialize)]
pub struct NonDecayReport {
    pub charge: f64,
    /// 𝔄₀/(4(M² + a²)), the limit of the sinθ-weighted mean of ∂_r u.
    pub predicted_mean_ur: f64,
    pub late_mean_ur: f64,
    /// max |⟨u⟩| over the last quarter of the window over the first quarter.
    pub tangential_decay_ratio: f64,
    pub tangential_decay: bool,
    pub obstruction: bool,
}

/// The transversal mean stays at least half its predicted limit while the
/// charge is nonzero. The tangential-decay hypothesis is reported, not
/// enforced.
pub fn nondecay_report(state: &ExtremalState, series: &ChargeSeries) -> NonDecayReport {
    let charge = series.charge.first().copied().unwrap_or(0.0);
    let predicted = charge / (4.0 * (state.mass * state.mass + state.a * state.a));
    let n = series.v.len();
    let q = (n / 4).max(1);
    let late = &series.mean_ur[n - q..];
    let late_mean_ur = late.iter().sum::<f64>() / late.len() as f64;
    let peak = |s: &[f64]| s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let early_u = peak(&series.mean_u[..q]).max(peak(&series.mean_p[..q]));
    let late_u = peak(&series.mean_u[n - q..]).max(peak(&series.mean_p[n - q..]));
    let ratio = if early_u > 0.0 { late_u / early_u } else { 0.0 };
    let tangential_decay = ratio < 1.0;
    NonDecayReport {
        charge,
        predicted_mean_ur: predicted,
        late_mean_ur,
        tangential_decay_ratio: ratio,
        tangential_decay,
        obstruction: charge.abs() > 1e-12 && late_mean_ur.abs() >= 0.5 * predicted.abs(),
    }
}
