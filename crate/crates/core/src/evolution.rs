//! Per-mode slab wave equation M_A u_tt − 2im G_B u_t + H u = 0 advanced
//! with the implicit midpoint rule, plus the threshold split u = c₀ + c₁t + v
//! and the boundedness / non-decay experiments.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{weighted_dot, BandLu, LinAlgError};
use crate::slab::{assemble_operators, weighted_mean, DiscreteSlab, OperatorPair};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(#[from] LinAlgError),
    #[error("threshold decomposition requires m = 0, got m = {0}")]
    WrongMode(i32),
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("Poincare constant unavailable: {0}")]
    NoGap(String),
}

pub type CVec = Vec<Complex64>;

#[derive(Clone, Debug)]
pub struct FieldState<'a> {
    pub u: CVec,
    pub ut: CVec,
    pub t: f64,
    pub ops: &'a OperatorPair,
    pub m: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub mean_u: [f64; 2],
    pub mean_ut: [f64; 2],
    /// E(t) − E(0) relative to E(0) (absolute when E(0) = 0).
    pub drift: f64,
}

fn check_len(ops: &OperatorPair, v: &[Complex64]) -> Result<(), EvolutionError> {
    if v.len() != ops.len() {
        return Err(EvolutionError::DimensionMismatch {
            expected: ops.len(),
            got: v.len(),
        });
    }
    Ok(())
}

pub fn real_to_complex(v: &[f64]) -> CVec {
    v.iter().map(|x| Complex64::new(*x, 0.0)).collect()
}

pub fn init_state<'a>(ops: &'a OperatorPair, u0: CVec, u1: CVec) -> Result<FieldState<'a>, EvolutionError> {
    check_len(ops, &u0)?;
    check_len(ops, &u1)?;
    Ok(FieldState {
        u: u0,
        ut: u1,
        t: 0.0,
        ops,
        m: ops.m,
    })
}

/// ½ u_tᴴM_A u_t + ½ uᴴHu, with the kinetic and potential halves.
pub fn energy_parts(ops: &OperatorPair, u: &[Complex64], ut: &[Complex64]) -> (f64, f64) {
    (0.5 * ops.mass_norm2(ut), 0.5 * ops.quadratic_form(u))
}

pub fn energy_and_average(state: &FieldState, initial_energy: f64) -> EnergyReport {
    let (kinetic, potential) = energy_parts(state.ops, &state.u, &state.ut);
    let energy = kinetic + potential;
    let mu = weighted_mean(state.ops, &state.u);
    let mut_ = weighted_mean(state.ops, &state.ut);
    let drift = if initial_energy > 0.0 {
        (energy - initial_energy) / initial_energy
    } else {
        energy - initial_energy
    };
    EnergyReport {
        energy,
        kinetic,
        potential,
        mean_u: [mu.re, mu.im],
        mean_ut: [mut_.re, mut_.im],
        drift,
    }
}

/// Factored implicit-midpoint step for a fixed dt:
/// (M − imdtG + dt²/4 H)p⁺ = (M + imdtG − dt²/4 H)p − dt Hu, u⁺ = u + dt/2 (p + p⁺).
pub struct MidpointStepper<'a> {
    ops: &'a OperatorPair,
    dt: f64,
    lu: BandLu<Complex64>,
}

impl<'a> MidpointStepper<'a> {
    /// `dt` may be negative, which runs the scheme backwards.
    pub fn new(ops: &'a OperatorPair, dt: f64) -> Result<Self, EvolutionError> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(EvolutionError::BadStep(dt));
        }
        let md = ops.m as f64 * dt;
        let lhs = ops.band(
            Complex64::new(0.25 * dt * dt, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -md),
        );
        Ok(MidpointStepper {
            ops,
            dt,
            lu: lhs.factor()?,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, state: &mut FieldState) -> Result<(), EvolutionError> {
        let ops = self.ops;
        let dt = self.dt;
        let md = ops.m as f64 * dt;
        let hp = ops.apply_h(&state.ut);
        let hu = ops.apply_h(&state.u);
        let mut rhs: CVec = (0..ops.len())
            .map(|k| {
                let p = state.ut[k];
                p * Complex64::new(ops.mass[k], md * ops.gyro[k]) - hp[k] * (0.25 * dt * dt) - hu[k] * dt
            })
            .collect();
        self.lu.solve_in_place(&mut rhs)?;
        for ((u, p), pn) in state.u.iter_mut().zip(&state.ut).zip(&rhs) {
            *u += (p + pn) * (0.5 * dt);
        }
        state.ut = rhs;
        state.t += dt;
        Ok(())
    }
}

/// One step with a freshly factored matrix.
pub fn step_midpoint<'a>(state: &FieldState<'a>, dt: f64) -> Result<FieldState<'a>, EvolutionError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EvolutionError::BadStep(dt));
    }
    let mut next = state.clone();
    MidpointStepper::new(state.ops, dt)?.step(&mut next)?;
    Ok(next)
}

/// (c₀, c₁) = (Π₀u₀, Π₀u₁) and the complementary state.
pub fn threshold_decompose<'a>(
    state: &FieldState<'a>,
) -> Result<(Complex64, Complex64, FieldState<'a>), EvolutionError> {
    if state.m != 0 {
        return Err(EvolutionError::WrongMode(state.m));
    }
    let c0 = weighted_mean(state.ops, &state.u);
    let c1 = weighted_mean(state.ops, &state.ut);
    let mut v = state.clone();
    v.u.iter_mut().for_each(|x| *x -= c0);
    v.ut.iter_mut().for_each(|x| *x -= c1);
    Ok((c0, c1, v))
}

/// Coefficient extrema and the derived coercivity constants, for the
/// threshold complement of one mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityConstants {
    pub a_minus: f64,
    pub a_plus: f64,
    pub phi_minus: f64,
    pub phi_plus: f64,
    pub dr_minus: f64,
    pub dr_plus: f64,
    pub dx_minus: f64,
    pub dx_plus: f64,
    pub m_grad: f64,
    pub big_m_grad: f64,
    /// ‖u‖²_{L²} ≤ C_P q[u,u] on the complement (unweighted L²).
    pub c_poincare: f64,
    pub c_low: f64,
    pub c_high: f64,
    pub c_stab: f64,
    /// ‖u‖²_A ≤ κ q[u,u] on the complement.
    pub kappa_weighted: f64,
    /// Same bound in the norm ‖u‖²_A + q[u,u] + ‖u_t‖²_A.
    pub c_stab_weighted: f64,
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

/// `lambda1` is the first nonzero eigenvalue of the m = 0 pencil; it is
/// ignored for m ≠ 0, where m²Φ already controls the L² norm.
pub fn stability_constants(slab: &DiscreteSlab, lambda1: f64) -> Result<StabilityConstants, EvolutionError> {
    let (a_minus, a_plus) = min_max(&slab.a);
    let (phi_minus, phi_plus) = min_max(&slab.phi);
    let (dr_minus, dr_plus) = min_max(&slab.delta_r_faces);
    let (dx_minus, dx_plus) = min_max(&slab.delta_x_faces);
    let m_grad = phi_minus.min(dr_minus).min(dx_minus);
    let big_m_grad = phi_plus.max(dr_plus).max(dx_plus);
    let m2 = (slab.m as f64).powi(2);
    let (c_poincare, kappa_weighted) = if slab.m == 0 {
        if !(lambda1 > 0.0) {
            return Err(EvolutionError::NoGap(format!("lambda_1 = {lambda1}")));
        }
        (1.0 / (a_minus * lambda1), 1.0 / lambda1)
    } else {
        (1.0 / (m2 * phi_minus), a_plus / (m2 * phi_minus))
    };
    let c_low = (0.5 * a_minus).min(0.5 / (c_poincare + 1.0 / m_grad));
    let c_high = 0.5 * a_plus.max(big_m_grad);
    Ok(StabilityConstants {
        a_minus,
        a_plus,
        phi_minus,
        phi_plus,
        dr_minus,
        dr_plus,
        dx_minus,
        dx_plus,
        m_grad,
        big_m_grad,
        c_poincare,
        c_low,
        c_high,
        c_stab: (c_high / c_low).sqrt(),
        kappa_weighted,
        c_stab_weighted: (1.0 + kappa_weighted).sqrt(),
    })
}

/// Default step 0.2·h/c with c² = max Δ / min A.
pub fn default_dt(slab: &DiscreteSlab) -> f64 {
    let (a_minus, _) = min_max(&slab.a);
    let d_plus = min_max(&slab.delta_r_faces).1.max(min_max(&slab.delta_x_faces).1);
    let h = slab.grid.hr.min(slab.grid.hx);
    0.2 * h / (d_plus / a_minus).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeSample {
    pub t: f64,
    pub energy: f64,
    pub mean_u: f64,
    pub mean_ut: f64,
    /// Unweighted discrete H¹ norm of v.
    pub v_norm: f64,
    /// Unweighted L² norm of v_t.
    pub vt_norm: f64,
    /// Unweighted L² norm of the full u.
    pub u_norm: f64,
    /// (‖u‖²_A + q + ‖u_t‖²_A)^{1/2} of the complement.
    pub v_weighted: f64,
    pub v_energy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeSeries {
    pub m: i32,
    pub dt: f64,
    pub steps: usize,
    pub samples: Vec<TimeSample>,
    pub constants: StabilityConstants,
    pub max_energy_drift: f64,
    /// Largest |second difference| of Π₀u over consecutive steps (m = 0).
    pub max_affine_defect: f64,
    pub sup_ratio: f64,
    pub sup_ratio_weighted: f64,
    pub bound_holds: bool,
    pub bound_holds_weighted: bool,
    /// min over the last quarter of E(v) / E(v)(0).
    pub late_energy_ratio: f64,
    pub non_decay: bool,
}

struct Norms {
    unit: OperatorPair,
}

impl Norms {
    fn new(slab: &DiscreteSlab) -> Self {
        let spec = crate::metric::SlabSpec {
            r_minus: slab.grid.r[0],
            r_plus: *slab.grid.r.last().unwrap(),
            x_minus: slab.grid.x[0],
            x_plus: *slab.grid.x.last().unwrap(),
            margin: 1.0,
        };
        let unit = DiscreteSlab::flat(&spec, slab.grid.r.len() - 1, slab.grid.x.len() - 1, slab.m);
        Norms {
            unit: assemble_operators(&unit),
        }
    }

    fn l2(&self, v: &[Complex64]) -> f64 {
        self.unit.mass_norm2(v).sqrt()
    }

    /// ‖v‖² + ‖∇_{φ,r,x} v‖² with unit coefficients.
    fn h1(&self, v: &[Complex64]) -> f64 {
        (self.unit.mass_norm2(v) + self.unit.quadratic_form(v)).sqrt()
    }
}

fn complement(ops: &OperatorPair, state: &FieldState) -> (CVec, CVec) {
    if ops.m != 0 {
        return (state.u.clone(), state.ut.clone());
    }
    let c0 = weighted_mean(ops, &state.u);
    let c1 = weighted_mean(ops, &state.ut);
    (
        state.u.iter().map(|x| x - c0).collect(),
        state.ut.iter().map(|x| x - c1).collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunSettings {
    pub horizon: f64,
    pub dt: f64,
    pub record_every: usize,
}

/// Evolves to `horizon`, sampling every `record_every` steps, and compares
/// the complement's norm with C_stab in both the unweighted and the
/// coefficient-weighted norms.
pub fn run_boundedness_experiment(
    slab: &DiscreteSlab,
    ops: &OperatorPair,
    lambda1: f64,
    data: (CVec, CVec),
    run: RunSettings,
) -> Result<TimeSeries, EvolutionError> {
    let RunSettings { horizon, dt, record_every } = run;
    let (u0, u1) = data;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EvolutionError::BadStep(dt));
    }
    let constants = stability_constants(slab, lambda1)?;
    let norms = Norms::new(slab);
    let mut state = init_state(ops, u0, u1)?;
    let stepper = MidpointStepper::new(ops, dt)?;
    let steps = (horizon / dt).round().max(1.0) as usize;
    let record_every = record_every.max(1);

    let e0 = {
        let (k, p) = energy_parts(ops, &state.u, &state.ut);
        k + p
    };
    let sample = |state: &FieldState| {
        let (v, vt) = complement(ops, state);
        let (k, p) = energy_parts(ops, &state.u, &state.ut);
        let (vk, vp) = energy_parts(ops, &v, &vt);
        let v_norm = norms.h1(&v);
        let vt_norm = norms.l2(&vt);
        TimeSample {
            t: state.t,
            energy: k + p,
            mean_u: weighted_mean(ops, &state.u).re,
            mean_ut: weighted_mean(ops, &state.ut).re,
            v_norm,
            vt_norm,
            u_norm: norms.l2(&state.u),
            v_weighted: (ops.mass_norm2(&v) + 2.0 * (vk + vp)).sqrt(),
            v_energy: vk + vp,
        }
    };
    let first = sample(&state);
    let proj0 = first.v_norm.hypot(first.vt_norm);
    let proj0_w = first.v_weighted;
    let mut samples = vec![first.clone()];
    let (mut sup, mut sup_w) = (proj0, proj0_w);
    let mut max_drift: f64 = 0.0;
    let mut max_affine: f64 = 0.0;
    let mass_total = ops.total_mass();
    let avg = |s: &FieldState| weighted_dot(&ops.ones::<Complex64>(), &ops.mass, &s.u) / mass_total;
    let mut history = [avg(&state), avg(&state)];
    let mut late_min = f64::INFINITY;
    let late_start = steps - steps / 4;

    for n in 1..=steps {
        stepper.step(&mut state)?;
        let cur = avg(&state);
        if ops.m == 0 && n >= 2 {
            max_affine = max_affine.max((cur - history[1] * 2.0 + history[0]).norm());
        }
        history = [history[1], cur];
        let (k, p) = energy_parts(ops, &state.u, &state.ut);
        let drift = if e0 > 0.0 { ((k + p) - e0).abs() / e0 } else { (k + p - e0).abs() };
        max_drift = max_drift.max(drift);
        if n % record_every == 0 || n == steps || n >= late_start {
            let s = sample(&state);
            sup = sup.max(s.v_norm.hypot(s.vt_norm));
            sup_w = sup_w.max(s.v_weighted);
            if n >= late_start {
                late_min = late_min.min(s.v_energy);
            }
            if n % record_every == 0 || n == steps {
                samples.push(s);
            }
        }
    }
    let ratio = |sup: f64, init: f64| if init > 0.0 { sup / init } else { 0.0 };
    let sup_ratio = ratio(sup, proj0);
    let sup_ratio_weighted = ratio(sup_w, proj0_w);
    let late_energy_ratio = if first.v_energy > 0.0 {
        late_min / first.v_energy
    } else {
        0.0
    };
    Ok(TimeSeries {
        m: ops.m,
        dt,
        steps,
        samples,
        bound_holds: sup_ratio <= constants.c_stab,
        bound_holds_weighted: sup_ratio_weighted <= constants.c_stab_weighted,
        constants,
        max_energy_drift: max_drift,
        max_affine_defect: max_affine,
        sup_ratio,
        sup_ratio_weighted,
        late_energy_ratio,
        non_decay: late_energy_ratio >= 0.99,
    })
}
