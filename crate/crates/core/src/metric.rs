//! Carter metric family: parameters, quartic coefficient functions, the
//! stationary (t, φ) block and its inverse, slab positivity, and the
//! Kerr–Newman embedding.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("degenerate point r={r}, x={x}: {what} vanishes")]
    DegeneratePoint { r: f64, x: f64, what: &'static str },
    #[error("stability operations require k = 0, got k = {0}")]
    NonzeroK(f64),
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("invalid slab: {0}")]
    InvalidSlab(String),
}

/// Scalars shared by the exact and floating backends.
pub trait Field: Clone + Debug + Num + Neg<Output = Self> + PartialOrd {
    fn ratio(n: i64, d: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn int(n: i64) -> Self {
        Self::ratio(n, 1)
    }
}

impl Field for f64 {
    fn ratio(n: i64, d: i64) -> Self {
        n as f64 / d as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Field for BigRational {
    fn ratio(n: i64, d: i64) -> Self {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Arithmetic backend selector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    #[default]
    Float,
}

/// Raw background parameters. Derived coefficients are always recomputed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarterParams<T> {
    pub m: T,
    pub a: T,
    pub lambda: T,
    pub k: T,
    pub c: [T; 5],
}

/// `c4 x⁴ + c2 x² + c1 x + c0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quartic<T> {
    pub c4: T,
    pub c2: T,
    pub c1: T,
    pub c0: T,
}

impl<T: Field> Quartic<T> {
    pub fn eval(&self, x: &T) -> T {
        let x2 = x.clone() * x.clone();
        self.c4.clone() * x2.clone() * x2.clone()
            + self.c2.clone() * x2
            + self.c1.clone() * x.clone()
            + self.c0.clone()
    }

    pub fn d1(&self, x: &T) -> T {
        let x2 = x.clone() * x.clone();
        T::int(4) * self.c4.clone() * x2 * x.clone()
            + T::int(2) * self.c2.clone() * x.clone()
            + self.c1.clone()
    }

    pub fn d2(&self, x: &T) -> T {
        T::int(12) * self.c4.clone() * x.clone() * x.clone() + T::int(2) * self.c2.clone()
    }
}

impl<T: Field> CarterParams<T> {
    pub fn new(m: T, a: T, lambda: T, k: T, c: [T; 5]) -> Self {
        CarterParams { m, a, lambda, k, c }
    }

    /// Kerr corner: k = Λ = 0 and all family constants zero.
    pub fn kerr(m: T, a: T) -> Self {
        let z = T::zero();
        CarterParams {
            m,
            a,
            lambda: z.clone(),
            k: z.clone(),
            c: [z.clone(), z.clone(), z.clone(), z.clone(), z],
        }
    }

    /// Radial quartic: α₂ = 1 − Λa²/3 + C₁/2, α₁ = C₂ − 2M, α₀ = a² + C₃.
    pub fn alpha(&self) -> Quartic<T> {
        let a2 = self.a.clone() * self.a.clone();
        Quartic {
            c4: -(self.k.clone() * T::ratio(1, 12)),
            c2: T::one() - self.lambda.clone() * a2.clone() * T::ratio(1, 3)
                + self.c[0].clone() * T::ratio(1, 2),
            c1: self.c[1].clone() - T::int(2) * self.m.clone(),
            c0: a2 + self.c[2].clone(),
        }
    }

    /// Angular quartic: β₂ = −α₂, β₁ = −C₄, β₀ = 1 + C₅.
    pub fn beta(&self) -> Quartic<T> {
        let a2 = self.a.clone() * self.a.clone();
        Quartic {
            c4: -(self.k.clone() * a2 * T::ratio(1, 12)),
            c2: -self.alpha().c2,
            c1: -self.c[3].clone(),
            c0: T::one() + self.c[4].clone(),
        }
    }

    /// Einstein defect δ = C₃ − a²C₅.
    pub fn delta(&self) -> T {
        self.c[2].clone() - self.a.clone() * self.a.clone() * self.c[4].clone()
    }

    pub fn require_k_zero(&self) -> Result<(), MetricError> {
        if self.k.is_zero() {
            Ok(())
        } else {
            Err(MetricError::NonzeroK(self.k.to_f64()))
        }
    }

    pub fn to_f64(&self) -> CarterParams<f64> {
        CarterParams {
            m: self.m.to_f64(),
            a: self.a.to_f64(),
            lambda: self.lambda.to_f64(),
            k: self.k.to_f64(),
            c: [0, 1, 2, 3, 4].map(|i| self.c[i].to_f64()),
        }
    }
}

pub fn einstein_defect<T: Field>(p: &CarterParams<T>) -> T {
    p.delta()
}

/// Kerr–Newman as a Carter member: C₃ = Q², everything else zero.
pub fn kn_embed<T: Field>(m: T, a: T, q: T) -> Result<CarterParams<T>, MetricError> {
    if m <= T::zero() {
        return Err(MetricError::NonPositiveMass(m.to_f64()));
    }
    let mut p = CarterParams::kerr(m, a);
    p.c[2] = q.clone() * q;
    Ok(p)
}

/// Evaluators for the coefficient functions of one background.
#[derive(Clone, Debug)]
pub struct CoefficientSet<T> {
    pub params: CarterParams<T>,
    pub alpha: Quartic<T>,
    pub beta: Quartic<T>,
}

pub fn build_coefficients<T: Field>(p: &CarterParams<T>) -> CoefficientSet<T> {
    CoefficientSet {
        params: p.clone(),
        alpha: p.alpha(),
        beta: p.beta(),
    }
}

/// Inverse metric rescaled by ρ², and the covariant stationary block.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseBlockSample<T> {
    pub rho2: T,
    pub delta_r: T,
    pub delta_x: T,
    pub rho2_g_tt: T,
    pub rho2_g_tphi: T,
    pub rho2_g_phiphi: T,
    pub rho2_g_rr: T,
    pub rho2_g_xx: T,
    pub g_tt: T,
    pub g_tphi: T,
    pub g_phiphi: T,
}

impl<T: Field> InverseBlockSample<T> {
    pub fn block_det(&self) -> T {
        self.g_tt.clone() * self.g_phiphi.clone() - self.g_tphi.clone() * self.g_tphi.clone()
    }

    /// A = −ρ²g^{tt}.
    pub fn a_coef(&self) -> T {
        -self.rho2_g_tt.clone()
    }

    /// B = ρ²g^{tφ}.
    pub fn b_coef(&self) -> T {
        self.rho2_g_tphi.clone()
    }

    /// Φ = ρ²g^{φφ}.
    pub fn phi_coef(&self) -> T {
        self.rho2_g_phiphi.clone()
    }
}

impl<T: Field> CoefficientSet<T> {
    pub fn a(&self) -> &T {
        &self.params.a
    }

    pub fn delta_r(&self, r: &T) -> T {
        self.alpha.eval(r)
    }

    pub fn delta_r_d1(&self, r: &T) -> T {
        self.alpha.d1(r)
    }

    pub fn delta_r_d2(&self, r: &T) -> T {
        self.alpha.d2(r)
    }

    pub fn delta_x(&self, x: &T) -> T {
        self.beta.eval(x)
    }

    pub fn delta_x_d1(&self, x: &T) -> T {
        self.beta.d1(x)
    }

    pub fn rho2(&self, r: &T, x: &T) -> T {
        let a = self.a().clone();
        r.clone() * r.clone() + a.clone() * a * x.clone() * x.clone()
    }

    /// A·Δ_rΔ_x = (r²+a²)²Δ_x − a²(1−x²)²Δ_r.
    pub fn a_times_deltas(&self, r: &T, x: &T) -> T {
        let a2 = self.a().clone() * self.a().clone();
        let s = r.clone() * r.clone() + a2.clone();
        let w = T::one() - x.clone() * x.clone();
        s.clone() * s * self.delta_x(x) - a2 * w.clone() * w * self.delta_r(r)
    }

    /// Φ·Δ_rΔ_x = Δ_r − a²Δ_x.
    pub fn phi_times_deltas(&self, r: &T, x: &T) -> T {
        let a2 = self.a().clone() * self.a().clone();
        self.delta_r(r) - a2 * self.delta_x(x)
    }

    pub fn evaluate_blocks(&self, r: &T, x: &T) -> Result<InverseBlockSample<T>, MetricError> {
        let dr = self.delta_r(r);
        let dx = self.delta_x(x);
        let rho2 = self.rho2(r, x);
        let degenerate = |what| MetricError::DegeneratePoint {
            r: r.to_f64(),
            x: x.to_f64(),
            what,
        };
        if dr.is_zero() {
            return Err(degenerate("Delta_r"));
        }
        if dx.is_zero() {
            return Err(degenerate("Delta_x"));
        }
        if rho2.is_zero() {
            return Err(degenerate("rho^2"));
        }
        let a = self.a().clone();
        let a2 = a.clone() * a.clone();
        let s = r.clone() * r.clone() + a2.clone();
        let w = T::one() - x.clone() * x.clone();
        let rho2_g_tt = -(s.clone() * s.clone()) / dr.clone() + a2.clone() * w.clone() * w.clone() / dx.clone();
        let rho2_g_tphi = -(a.clone() * s.clone()) / dr.clone() + a.clone() * w.clone() / dx.clone();
        let rho2_g_phiphi = -a2.clone() / dr.clone() + T::one() / dx.clone();
        let g_tt = (a2.clone() * dx.clone() - dr.clone()) / rho2.clone();
        let g_tphi = (a.clone() * w.clone() * dr.clone() - a * s.clone() * dx.clone()) / rho2.clone();
        let g_phiphi = (s.clone() * s * dx.clone() - a2 * w.clone() * w * dr.clone()) / rho2.clone();
        Ok(InverseBlockSample {
            rho2,
            rho2_g_rr: dr.clone(),
            rho2_g_xx: dx.clone(),
            delta_r: dr,
            delta_x: dx,
            rho2_g_tt,
            rho2_g_tphi,
            rho2_g_phiphi,
            g_tt,
            g_tphi,
            g_phiphi,
        })
    }
}

/// Bounded coordinate rectangle with a positivity margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabSpec {
    pub r_minus: f64,
    pub r_plus: f64,
    pub x_minus: f64,
    pub x_plus: f64,
    pub margin: f64,
}

impl SlabSpec {
    pub fn new(r: (f64, f64), x: (f64, f64), margin: f64) -> Result<Self, MetricError> {
        let s = SlabSpec {
            r_minus: r.0,
            r_plus: r.1,
            x_minus: x.0,
            x_plus: x.1,
            margin,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if !(self.r_minus < self.r_plus) {
            return Err(MetricError::InvalidSlab(format!(
                "r_minus {} must be below r_plus {}",
                self.r_minus, self.r_plus
            )));
        }
        if !(self.x_minus < self.x_plus) {
            return Err(MetricError::InvalidSlab(format!(
                "x_minus {} must be below x_plus {}",
                self.x_minus, self.x_plus
            )));
        }
        if !(self.margin > 0.0) {
            return Err(MetricError::InvalidSlab(format!(
                "margin {} must be positive",
                self.margin
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coefficient {
    Rho2,
    DeltaR,
    DeltaX,
    A,
    Phi,
}

impl Coefficient {
    pub const ALL: [Coefficient; 5] = [
        Coefficient::Rho2,
        Coefficient::DeltaR,
        Coefficient::DeltaX,
        Coefficient::A,
        Coefficient::Phi,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientBound {
    pub coefficient: Coefficient,
    pub sampled_min: f64,
    /// Lipschitz allowance for points between samples.
    pub allowance: f64,
    pub certified_min: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SlabVerdict {
    Strict,
    Reject(Coefficient),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlabClassification {
    pub bounds: Vec<CoefficientBound>,
    pub verdict: SlabVerdict,
}

impl SlabClassification {
    pub fn is_strict(&self) -> bool {
        self.verdict == SlabVerdict::Strict
    }

    /// Smallest certified lower bound minus the required margin.
    pub fn safety_margin(&self, margin: f64) -> f64 {
        self.bounds
            .iter()
            .map(|b| b.certified_min - margin)
            .fold(f64::INFINITY, f64::min)
    }
}

fn coefficient_value(c: &CoefficientSet<f64>, which: Coefficient, r: f64, x: f64) -> f64 {
    let dr = c.delta_r(&r);
    let dx = c.delta_x(&x);
    let v = match which {
        Coefficient::Rho2 => c.rho2(&r, &x),
        Coefficient::DeltaR => dr,
        Coefficient::DeltaX => dx,
        Coefficient::A => c.a_times_deltas(&r, &x) / (dr * dx),
        Coefficient::Phi => c.phi_times_deltas(&r, &x) / (dr * dx),
    };
    if v.is_finite() {
        v
    } else {
        f64::NEG_INFINITY
    }
}

/// Samples the five positivity coefficients on a tensor grid and certifies
/// a lower bound using a finite-difference Lipschitz allowance.
pub fn classify_slab(c: &CoefficientSet<f64>, s: &SlabSpec, resolution: usize) -> SlabClassification {
    let n = resolution.max(2);
    let hr = (s.r_plus - s.r_minus) / (n - 1) as f64;
    let hx = (s.x_plus - s.x_minus) / (n - 1) as f64;
    let mut bounds = Vec::with_capacity(5);
    for which in Coefficient::ALL {
        let vals: Vec<f64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                coefficient_value(c, which, s.r_minus + i as f64 * hr, s.x_minus + j as f64 * hx)
            })
            .collect();
        let sampled_min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let (mut lr, mut lx) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                let v = vals[i * n + j];
                if i + 1 < n {
                    lr = lr.max(((vals[(i + 1) * n + j] - v) / hr).abs());
                }
                if j + 1 < n {
                    lx = lx.max(((vals[i * n + j + 1] - v) / hx).abs());
                }
            }
        }
        // twice the half-cell bound, to absorb slope underestimation
        let allowance = lr * hr + lx * hx;
        let certified_min = if sampled_min.is_finite() && allowance.is_finite() {
            sampled_min - allowance
        } else {
            f64::NEG_INFINITY
        };
        bounds.push(CoefficientBound {
            coefficient: which,
            sampled_min,
            allowance,
            certified_min,
        });
    }
    let verdict = bounds
        .iter()
        .find(|b| !(b.certified_min > s.margin))
        .map(|b| SlabVerdict::Reject(b.coefficient))
        .unwrap_or(SlabVerdict::Strict);
    SlabClassification { bounds, verdict }
}
