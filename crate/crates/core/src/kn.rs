//! Kerr–Newman exterior checks: horizon constants, the radial sign factor
//! behind subphoton nontrapping on a wall collar, and the wall identity that
//! rules out a Jordan companion of the constant state.

use differential_equations::prelude::{ExplicitRungeKutta, IVP, ODE};
use serde::Serialize;
use thiserror::Error;

use crate::poly::{SparsePoly, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnError {
    #[error("superextremal parameters: a^2 + Q^2 - M^2 = {0:e}")]
    Superextremal(f64),
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("wall radius {r_w} outside ({lo}, {hi})")]
    WallRange { r_w: f64, lo: f64, hi: f64 },
    #[error("extremal parameters are not allowed here")]
    Extremal,
    #[error("integration failed: {0}")]
    IntegratorFailure(String),
}

/// Relative size of M² − a² − Q² treated as zero.
pub const EXTREMAL_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonConstants {
    pub mass: f64,
    pub a: f64,
    pub q: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    pub omega_h: f64,
    pub kappa_plus: f64,
    pub extremal: bool,
}

/// Δ = r² − 2Mr + a² + Q².
pub fn delta(mass: f64, a: f64, q: f64, r: f64) -> f64 {
    r * r - 2.0 * mass * r + a * a + q * q
}

pub fn horizon_constants(mass: f64, a: f64, q: f64) -> Result<HorizonConstants, KnError> {
    if !(mass > 0.0) {
        return Err(KnError::NonPositiveMass(mass));
    }
    let disc = mass * mass - a * a - q * q;
    let extremal = disc.abs() <= EXTREMAL_TOL * mass * mass;
    if disc < 0.0 && !extremal {
        return Err(KnError::Superextremal(-disc));
    }
    let s = if extremal { 0.0 } else { disc.sqrt() };
    let (r_plus, r_minus) = (mass + s, mass - s);
    let area = r_plus * r_plus + a * a;
    Ok(HorizonConstants {
        mass,
        a,
        q,
        r_plus,
        r_minus,
        omega_h: a / area,
        kappa_plus: (r_plus - r_minus) / (2.0 * area),
        extremal,
    })
}

/// 4rΔ − (r² + a²)Δ′ − 2(r²(r − 3M) + a²(r + M) + 2Q²r) as an exact
/// polynomial in (r, M, a, Q²), with Q² carried by the C₃ slot.
pub fn sign_factor_identity() -> SparsePoly {
    let r = SparsePoly::var(Var::R);
    let m = SparsePoly::var(Var::M);
    let a2 = SparsePoly::var(Var::A).pow(2);
    let q2 = SparsePoly::var(Var::C3);
    let two = SparsePoly::int(2);
    let delta = r.pow(2).sub(&two.mul(&m).mul(&r)).add(&a2).add(&q2);
    let d_delta = delta.diff(Var::R);
    let lhs = SparsePoly::int(4)
        .mul(&r)
        .mul(&delta)
        .sub(&r.pow(2).add(&a2).mul(&d_delta));
    let rhs = two.mul(
        &r.pow(2)
            .mul(&r.sub(&SparsePoly::int(3).mul(&m)))
            .add(&a2.mul(&r.add(&m)))
            .add(&two.mul(&q2).mul(&r)),
    );
    lhs.sub(&rhs)
}

/// 2(r²(r − 3M) + a²(r + M) + 2Q²r).
pub fn sign_factor(mass: f64, a: f64, q: f64, r: f64) -> f64 {
    2.0 * (r * r * (r - 3.0 * mass) + a * a * (r + mass) + 2.0 * q * q * r)
}

/// ∂_r of (r² + a²)²/Δ.
pub fn a_derivative(mass: f64, a: f64, q: f64, r: f64) -> f64 {
    let d = delta(mass, a, q, r);
    let dd = 2.0 * r - 2.0 * mass;
    let w = r * r + a * a;
    w * (4.0 * r * d - w * dd) / (d * d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TrappingVerdict {
    Nontrapping,
    Trapping,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginReport {
    pub constants: HorizonConstants,
    pub r_wall: f64,
    pub identity_is_zero: bool,
    /// max of the sign factor over [r₊, R_w].
    pub max_factor: f64,
    pub argmax: f64,
    pub verdict: TrappingVerdict,
    /// The sign of ∂_rA matches the sign factor at every sample in (r₊, R_w].
    pub derivative_signs_agree: bool,
    pub samples: usize,
}

/// Maximum of the cubic sign factor over [r₊, R_w]: endpoints plus interior
/// critical points, so the value is exact up to rounding.
pub fn factor_max(mass: f64, a: f64, q: f64, r_lo: f64, r_hi: f64) -> (f64, f64) {
    let mut cands = vec![r_lo, r_hi];
    // f′/2 = 3r² − 6Mr + a² + 2Q²
    let disc = 36.0 * mass * mass - 12.0 * (a * a + 2.0 * q * q);
    if disc >= 0.0 {
        let s = disc.sqrt();
        for root in [(6.0 * mass - s) / 6.0, (6.0 * mass + s) / 6.0] {
            if root > r_lo && root < r_hi {
                cands.push(root);
            }
        }
    }
    cands
        .into_iter()
        .map(|r| (sign_factor(mass, a, q, r), r))
        .fold((f64::NEG_INFINITY, r_lo), |acc, v| if v.0 > acc.0 { v } else { acc })
}

pub fn wall_range(mass: f64) -> (f64, f64) {
    (2.0 * mass, 8.0 * mass / 3.0)
}

fn check_wall(mass: f64, r_wall: f64, c: &HorizonConstants) -> Result<(), KnError> {
    let (lo, hi) = wall_range(mass);
    if !(r_wall > lo && r_wall < hi && r_wall > c.r_plus) {
        return Err(KnError::WallRange { r_w: r_wall, lo: lo.max(c.r_plus), hi });
    }
    Ok(())
}

pub fn nontrapping_margin(mass: f64, a: f64, q: f64, r_wall: f64, resolution: usize) -> Result<MarginReport, KnError> {
    let constants = horizon_constants(mass, a, q)?;
    if constants.extremal {
        return Err(KnError::Extremal);
    }
    check_wall(mass, r_wall, &constants)?;
    let identity_is_zero = sign_factor_identity().is_zero();
    let (max_factor, argmax) = factor_max(mass, a, q, constants.r_plus, r_wall);
    let n = resolution.max(2);
    let derivative_signs_agree = (1..=n).all(|i| {
        let r = constants.r_plus + (r_wall - constants.r_plus) * i as f64 / n as f64;
        let f = sign_factor(mass, a, q, r);
        let d = a_derivative(mass, a, q, r);
        (f < 0.0) == (d < 0.0)
    });
    Ok(MarginReport {
        constants,
        r_wall,
        identity_is_zero,
        max_factor,
        argmax,
        verdict: if max_factor < 0.0 {
            TrappingVerdict::Nontrapping
        } else {
            TrappingVerdict::Trapping
        },
        derivative_signs_agree,
        samples: n,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ObstructionReport {
    pub constants: HorizonConstants,
    pub r_wall: f64,
    /// C = 2Mr₊ − Q².
    pub flux_constant: f64,
    /// ψ₀′(R_w) + H′(R_w) from the integrated spherical mean.
    pub numeric: f64,
    /// (r₊² + a²)/Δ(R_w).
    pub closed_form: f64,
    pub relative_gap: f64,
    /// max |ψ₀′ + H′ − C/Δ| / (C/Δ) at interior radii.
    pub pointwise_defect: f64,
    pub psi0_wall: f64,
}

/// (ψ₀, w = Δψ₀′) with w′ = −2M from the mean of the companion equation.
struct SphericalMean {
    mass: f64,
    a: f64,
    q: f64,
    r_plus: f64,
}

impl ODE<f64, [f64; 2]> for SphericalMean {
    fn diff(&self, r: f64, y: &[f64; 2], dy: &mut [f64; 2]) {
        let d = delta(self.mass, self.a, self.q, r);
        // w and Δ both vanish at r₊; use the limit w′/Δ′ there
        dy[0] = if (r - self.r_plus).abs() < 1e-10 {
            -2.0 * self.mass / (2.0 * (self.r_plus - self.mass))
        } else {
            y[1] / d
        };
        dy[1] = -2.0 * self.mass;
    }
}

pub fn wall_jordan_obstruction(mass: f64, a: f64, q: f64, r_wall: f64, tol: f64) -> Result<ObstructionReport, KnError> {
    let constants = horizon_constants(mass, a, q)?;
    if constants.extremal {
        return Err(KnError::Extremal);
    }
    check_wall(mass, r_wall, &constants)?;
    let rp = constants.r_plus;
    let flux_constant = 2.0 * mass * rp - q * q;
    let sys = SphericalMean { mass, a, q, r_plus: rp };
    let h_prime = |r: f64| (2.0 * mass * r - q * q) / delta(mass, a, q, r);
    let segments = 10;
    let mut y = [0.0, 0.0];
    let mut pointwise_defect: f64 = 0.0;
    let mut numeric = 0.0;
    for i in 0..segments {
        let r0 = rp + (r_wall - rp) * i as f64 / segments as f64;
        let r1 = rp + (r_wall - rp) * (i + 1) as f64 / segments as f64;
        let sol = IVP::ode(&sys, r0, r1, y)
            .method(ExplicitRungeKutta::dop853().rtol(tol).atol(tol * 1e-2).max_steps(1_000_000))
            .solve()
            .map_err(|e| KnError::IntegratorFailure(format!("{e:?}")))?;
        y = *sol.y.last().ok_or_else(|| KnError::IntegratorFailure("empty solution".into()))?;
        let psi_prime = y[1] / delta(mass, a, q, r1);
        let sum = psi_prime + h_prime(r1);
        let target = flux_constant / delta(mass, a, q, r1);
        if i + 1 < segments {
            pointwise_defect = pointwise_defect.max((sum - target).abs() / target.abs());
        } else {
            numeric = sum;
        }
    }
    let closed_form = (rp * rp + a * a) / delta(mass, a, q, r_wall);
    Ok(ObstructionReport {
        constants,
        r_wall,
        flux_constant,
        numeric,
        closed_form,
        relative_gap: (numeric - closed_form).abs() / closed_form.abs(),
        pointwise_defect,
        psi0_wall: y[0],
    })
}
