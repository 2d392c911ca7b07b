//! Separated radial and angular equations at fixed (Ω, m): Frobenius data
//! at simple zeros, Wronskian-monitored radial integration, Prüfer shooting
//! for angular eigenvalues, Legendre functions and the zero-frequency
//! branch classification.

use num_complex::Complex64;
use differential_equations::prelude::{ExplicitRungeKutta, IVP, ODE};
use serde::Serialize;
use thiserror::Error;

use crate::metric::{CoefficientSet, Quartic};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeError {
    #[error("{location} is not a simple zero: Delta' = {derivative:e}")]
    NotSimpleZero { location: f64, derivative: f64 },
    #[error("{location} is not a zero of Delta (value {value:e})")]
    NotAZero { location: f64, value: f64 },
    #[error("integration failed: {0}")]
    StepFailure(String),
    #[error("could not bracket eigenvalue {index}: {reason}")]
    BracketFailure { index: usize, reason: String },
    #[error("parameters outside the family's domain: {0}")]
    ParameterDomain(String),
}

/// Tolerance for recognising a zero of Δ at an endpoint.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ModeParams {
    pub omega: Complex64,
    pub m: i32,
    pub lambda: Complex64,
    pub coeffs: CoefficientSet<f64>,
}

type CPoly = Vec<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> CPoly {
    let mut out = vec![c(0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[Complex64], b: &[Complex64]) -> CPoly {
    let mut out = vec![c(0.0); a.len().max(b.len())];
    a.iter().enumerate().for_each(|(i, x)| out[i] += x);
    b.iter().enumerate().for_each(|(i, x)| out[i] += x);
    out
}

/// Coefficients of p(x₀ + s·y) in powers of y.
fn taylor_shift(p: &[Complex64], x0: f64, s: f64) -> CPoly {
    let n = p.len();
    let mut out = vec![c(0.0); n];
    for (k, pk) in p.iter().enumerate() {
        // (x₀ + s y)^k = Σ_j C(k,j) x₀^{k−j} s^j y^j
        let mut binom = 1.0;
        for j in 0..=k {
            out[j] += pk * binom * x0.powi((k - j) as i32) * s.powi(j as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    out
}

fn quartic_poly(q: &Quartic<f64>) -> CPoly {
    vec![c(q.c0), c(q.c1), c(q.c2), c(0.0), c(q.c4)]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EndpointKind {
    Radial,
    Angular,
}

/// Local data at a simple zero of Δ_r or Δ_x. The series is in the inward
/// distance y = |coordinate − location|.
#[derive(Clone, Debug, Serialize)]
pub struct FrobeniusData {
    pub kind: EndpointKind,
    pub location: f64,
    /// +1 if the domain lies above the endpoint, −1 if below.
    pub inward: f64,
    /// Δ′ at the endpoint.
    pub kappa: f64,
    /// (s₊, s₋).
    pub exponents: [Complex64; 2],
    /// Exponent of the branch whose series is returned.
    pub regular_exponent: Complex64,
    /// Roots differ by an integer (including coincident roots): the second
    /// branch may carry a logarithm.
    pub log_branch: bool,
    pub coefficients: Vec<Complex64>,
    /// Taylor coefficients in y of Δ and of the potential numerator.
    delta_y: CPoly,
    potential_y: CPoly,
}

impl FrobeniusData {
    /// (value, Δ·d/dcoordinate) of the regular branch at inward distance y.
    pub fn eval(&self, y: f64) -> (Complex64, Complex64) {
        let s = self.regular_exponent;
        let ly = y.ln();
        let (mut v, mut dv) = (c(0.0), c(0.0));
        for (n, cn) in self.coefficients.iter().enumerate() {
            let e = s + n as f64;
            let p = (e * ly).exp();
            v += cn * p;
            dv += cn * e * p / y;
        }
        let delta: Complex64 = self.delta_y.iter().rev().fold(c(0.0), |acc, d| acc * y + d);
        (v, delta * dv * self.inward)
    }

    /// Residual of Δ(ΔR′)′ + P·R for the truncated series, evaluated in y.
    pub fn residual(&self, y: f64) -> f64 {
        let s = self.regular_exponent;
        let ly = y.ln();
        let d: Complex64 = self.delta_y.iter().rev().fold(c(0.0), |acc, d| acc * y + d);
        let dd: Complex64 = self
            .delta_y
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(c(0.0), |acc, (k, d)| acc * y + d * k as f64);
        let p: Complex64 = self.potential_y.iter().rev().fold(c(0.0), |acc, d| acc * y + d);
        let (mut r, mut r1, mut r2) = (c(0.0), c(0.0), c(0.0));
        for (n, cn) in self.coefficients.iter().enumerate() {
            let e = s + n as f64;
            let pw = (e * ly).exp();
            r += cn * pw;
            r1 += cn * e * pw / y;
            r2 += cn * e * (e - 1.0) * pw / (y * y);
        }
        // Δ(ΔR′)′ = Δ(Δ′R′ + ΔR″)
        (d * (dd * r1 + d * r2) + p * r).norm()
    }
}

fn frobenius_series(delta_y: &[Complex64], potential_y: &[Complex64], s: Complex64, order: usize) -> Vec<Complex64> {
    let dcoef = |i: usize| delta_y.get(i).copied().unwrap_or(c(0.0));
    let pcoef = |k: usize| potential_y.get(k).copied().unwrap_or(c(0.0));
    let f = |k: usize, t: Complex64| {
        let mut acc = pcoef(k);
        for j in 1..=k + 1 {
            let i = k + 2 - j;
            if i >= 1 {
                acc += dcoef(i) * dcoef(j) * t * (t + (j as f64 - 1.0));
            }
        }
        acc
    };
    let mut cs = vec![c(1.0)];
    for n in 1..=order {
        let mut rhs = c(0.0);
        for k in 1..=n {
            rhs -= cs[n - k] * f(k, s + (n - k) as f64);
        }
        let f0 = f(0, s + n as f64);
        cs.push(if f0.norm() > 0.0 { rhs / f0 } else { c(0.0) });
    }
    cs
}

fn radial_frequency_poly(coeffs: &CoefficientSet<f64>, omega: Complex64, m: i32) -> CPoly {
    let a = coeffs.params.a;
    // N(r) = (r² + a²)Ω − am
    vec![omega * a * a - a * m as f64, c(0.0), omega]
}

fn angular_frequency_poly(coeffs: &CoefficientSet<f64>, omega: Complex64, m: i32) -> CPoly {
    let a = coeffs.params.a;
    // ν(x) = a(1 − x²)Ω − m
    vec![omega * a - m as f64, c(0.0), -(omega * a)]
}

/// Numerator P of the potential after multiplying the equation by Δ:
/// radial N² + (k r²/3 − λ)Δ_r, angular −ν² + (k a² x²/3 + λ)Δ_x.
fn potential_numerator(kind: EndpointKind, coeffs: &CoefficientSet<f64>, omega: Complex64, m: i32, lambda: Complex64) -> CPoly {
    let k = coeffs.params.k;
    let a = coeffs.params.a;
    match kind {
        EndpointKind::Radial => {
            let n = radial_frequency_poly(coeffs, omega, m);
            let shift = vec![-lambda, c(0.0), c(k / 3.0)];
            poly_add(&poly_mul(&n, &n), &poly_mul(&shift, &quartic_poly(&coeffs.alpha)))
        }
        EndpointKind::Angular => {
            let nu = angular_frequency_poly(coeffs, omega, m);
            let shift = vec![lambda, c(0.0), c(k * a * a / 3.0)];
            let nn: CPoly = poly_mul(&nu, &nu).into_iter().map(|v| -v).collect();
            poly_add(&nn, &poly_mul(&shift, &quartic_poly(&coeffs.beta)))
        }
    }
}

/// Indicial exponents and the regular-branch series at a simple zero.
/// `inward` is +1 when the domain lies above `location`.
pub fn frobenius_data(
    coeffs: &CoefficientSet<f64>,
    kind: EndpointKind,
    location: f64,
    inward: f64,
    omega: Complex64,
    m: i32,
    lambda: Complex64,
    order: usize,
) -> Result<FrobeniusData, ModeError> {
    let q = match kind {
        EndpointKind::Radial => &coeffs.alpha,
        EndpointKind::Angular => &coeffs.beta,
    };
    let value = q.eval(&location);
    let scale = 1.0 + q.c0.abs() + q.c1.abs() + q.c2.abs() + q.c4.abs();
    if value.abs() > ZERO_TOL * scale * (1.0 + location * location) {
        return Err(ModeError::NotAZero { location, value });
    }
    let kappa = q.d1(&location);
    if kappa.abs() <= 1e-9 * scale {
        return Err(ModeError::NotSimpleZero { location, derivative: kappa });
    }
    let inward = if inward >= 0.0 { 1.0 } else { -1.0 };
    let mut delta_y = taylor_shift(&quartic_poly(q), location, inward);
    delta_y[0] = c(0.0);
    let potential_y = taylor_shift(&potential_numerator(kind, coeffs, omega, m, lambda), location, inward);
    let (exponents, regular) = match kind {
        EndpointKind::Radial => {
            let n = radial_frequency_poly(coeffs, omega, m);
            let nh = n[0] + n[2] * location * location;
            let sigma = nh / kappa;
            let i = Complex64::new(0.0, 1.0);
            // e^{−iΩt+imφ} is smooth across the horizon only on |y|^{−iσ_h}
            ([i * sigma, -i * sigma], -i * sigma)
        }
        EndpointKind::Angular => {
            let nu = angular_frequency_poly(coeffs, omega, m);
            let ns = nu[0] + nu[2] * location * location;
            let s = ns / kappa;
            let (sp, sm) = if s.re >= 0.0 { (s, -s) } else { (-s, s) };
            ([sp, sm], sp)
        }
    };
    let diff = exponents[0] - exponents[1];
    let log_branch = diff.im.abs() < 1e-12 && (diff.re - diff.re.round()).abs() < 1e-12;
    let coefficients = frobenius_series(&delta_y, &potential_y, regular, order);
    Ok(FrobeniusData {
        kind,
        location,
        inward,
        kappa,
        exponents,
        regular_exponent: regular,
        log_branch,
        coefficients,
        delta_y,
        potential_y,
    })
}

/// Samples of an ODE solution at `samples` equal steps from x₀ to x₁ (either
/// direction). Each interval is a separate DOP853 solve: the step endpoints
/// are accurate to the tolerance while the crate's interpolant is not.
fn integrate_sampled<const N: usize, S: ODE<f64, [f64; N]>>(
    sys: &S,
    x0: f64,
    x1: f64,
    samples: usize,
    y0: [f64; N],
    rtol: f64,
    atol: f64,
) -> Result<(Vec<f64>, Vec<[f64; N]>), ModeError> {
    let samples = samples.max(1);
    let h = (x1 - x0) / samples as f64;
    let mut xs = vec![x0];
    let mut ys = vec![y0];
    let mut y = y0;
    for i in 0..samples {
        let a = x0 + h * i as f64;
        let b = if i + 1 == samples { x1 } else { x0 + h * (i + 1) as f64 };
        let method = ExplicitRungeKutta::dop853().rtol(rtol).atol(atol).max_steps(1_000_000);
        let sol = IVP::ode(sys, a, b, y)
            .method(method)
            .solve()
            .map_err(|e| ModeError::StepFailure(format!("{e:?}")))?;
        y = *sol.y.last().ok_or_else(|| ModeError::StepFailure("empty solution".into()))?;
        xs.push(b);
        ys.push(y);
    }
    Ok((xs, ys))
}

/// Radial first-order system in (R, Π = Δ_r R′), split into real parts.
struct RadialSystem {
    alpha: Quartic<f64>,
    n: CPoly,
    k: f64,
    lambda: Complex64,
}

impl RadialSystem {
    fn rhs(&self, r: f64, big_r: Complex64, pi: Complex64) -> (Complex64, Complex64) {
        let d = self.alpha.eval(&r);
        let n = self.n[0] + self.n[2] * r * r;
        let v = n * n / d + self.k * r * r / 3.0 - self.lambda;
        (pi / d, -v * big_r)
    }
}

impl ODE<f64, [f64; 4]> for RadialSystem {
    fn diff(&self, r: f64, y: &[f64; 4], dy: &mut [f64; 4]) {
        let (a, b) = self.rhs(r, Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]));
        dy[0] = a.re;
        dy[1] = a.im;
        dy[2] = b.re;
        dy[3] = b.im;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialTrajectory {
    pub r: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Δ_r R′.
    pub flux: Vec<Complex64>,
    /// 𝔚 = R̄Π − Π̄R (purely imaginary).
    pub wronskian: Vec<Complex64>,
    pub max_drift: f64,
}

impl RadialTrajectory {
    /// R′ from the stored flux.
    pub fn derivative(&self, coeffs: &CoefficientSet<f64>) -> Vec<Complex64> {
        self.r
            .iter()
            .zip(&self.flux)
            .map(|(r, p)| p / coeffs.delta_r(r))
            .collect()
    }
}

/// Δ(R₁R₂′ − R₁′R₂) sampled along two trajectories on the same grid.
pub fn pair_wronskian(a: &RadialTrajectory, b: &RadialTrajectory) -> Vec<Complex64> {
    a.values
        .iter()
        .zip(&a.flux)
        .zip(b.values.iter().zip(&b.flux))
        .map(|((r1, p1), (r2, p2))| r1 * p2 - p1 * r2)
        .collect()
}

/// Integrates the radial equation from r_span.0 to r_span.1 with Δ_r R′
/// prescribed through `d_r0` = R′(r₀). Samples are returned on `samples`
/// equal steps.
pub fn integrate_radial(
    params: &ModeParams,
    r_span: (f64, f64),
    r0: Complex64,
    d_r0: Complex64,
    tol: f64,
    samples: usize,
) -> Result<RadialTrajectory, ModeError> {
    let (a, b) = r_span;
    let coeffs = &params.coeffs;
    let probes = 400;
    for i in 0..=probes {
        let r = a + (b - a) * i as f64 / probes as f64;
        if !(coeffs.delta_r(&r) > 0.0) {
            return Err(ModeError::StepFailure(format!(
                "Delta_r = {} at r = {r}; start from a Frobenius series off the endpoint",
                coeffs.delta_r(&r)
            )));
        }
    }
    let sys = RadialSystem {
        alpha: coeffs.alpha.clone(),
        n: radial_frequency_poly(coeffs, params.omega, params.m),
        k: coeffs.params.k,
        lambda: params.lambda,
    };
    let pi0 = d_r0 * coeffs.delta_r(&a);
    let y0 = [r0.re, r0.im, pi0.re, pi0.im];
    let (r, ys) = integrate_sampled(&sys, a, b, samples, y0, tol, tol * 1e-3)?;
    let values: Vec<Complex64> = ys.iter().map(|y| Complex64::new(y[0], y[1])).collect();
    let flux: Vec<Complex64> = ys.iter().map(|y| Complex64::new(y[2], y[3])).collect();
    let wronskian: Vec<Complex64> = values
        .iter()
        .zip(&flux)
        .map(|(r, p)| r.conj() * p - p.conj() * r)
        .collect();
    let w0 = wronskian[0];
    let max_drift = wronskian.iter().map(|w| (w - w0).norm()).fold(0.0, f64::max);
    Ok(RadialTrajectory {
        r,
        values,
        flux,
        wronskian,
        max_drift,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngularBc {
    Neumann,
    Dirichlet,
    /// Δ_x vanishes simply at the endpoint; the Frobenius branch with the
    /// larger exponent is imposed.
    RegularEndpoint,
}

/// Angular Sturm–Liouville data at real Ω.
struct AngularProblem {
    beta: Quartic<f64>,
    nu: [f64; 3],
    k_term: f64,
}

impl AngularProblem {
    fn new(coeffs: &CoefficientSet<f64>, omega: f64, m: i32) -> Self {
        let a = coeffs.params.a;
        AngularProblem {
            beta: coeffs.beta.clone(),
            nu: [a * omega - m as f64, 0.0, -a * omega],
            k_term: coeffs.params.k * a * a / 3.0,
        }
    }

    /// V = ν²/Δ_x − k a² x²/3.
    fn potential(&self, x: f64) -> f64 {
        let nu = self.nu[0] + self.nu[2] * x * x;
        nu * nu / self.beta.eval(&x) - self.k_term * x * x
    }
}

struct Prufer<'a> {
    p: &'a AngularProblem,
    lambda: f64,
}

impl ODE<f64, f64> for Prufer<'_> {
    fn diff(&self, x: f64, y: &f64, dy: &mut f64) {
        let (s, c) = y.sin_cos();
        let d = self.p.beta.eval(&x);
        *dy = c * c / d + (self.lambda - self.p.potential(x)) * s * s;
    }
}

struct AngularLinear<'a> {
    p: &'a AngularProblem,
    lambda: f64,
}

impl ODE<f64, [f64; 2]> for AngularLinear<'_> {
    fn diff(&self, x: f64, y: &[f64; 2], dy: &mut [f64; 2]) {
        dy[0] = y[1] / self.p.beta.eval(&x);
        dy[1] = (self.p.potential(x) - self.lambda) * y[0];
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AngularSpectrum {
    pub omega: f64,
    pub m: i32,
    pub interval: (f64, f64),
    pub bc: AngularBc,
    pub values: Vec<f64>,
    /// Indices whose neighbours lie within 1e−8 (relative).
    pub near_degenerate: Vec<usize>,
}

pub const ANGULAR_TOL: f64 = 1e-12;

struct AngularShooter<'a> {
    coeffs: &'a CoefficientSet<f64>,
    problem: AngularProblem,
    omega: f64,
    m: i32,
    interval: (f64, f64),
    bc: AngularBc,
    offset: f64,
}

impl<'a> AngularShooter<'a> {
    fn new(
        coeffs: &'a CoefficientSet<f64>,
        omega: f64,
        m: i32,
        interval: (f64, f64),
        bc: AngularBc,
    ) -> Result<Self, ModeError> {
        if !(interval.0 < interval.1) {
            return Err(ModeError::ParameterDomain(format!("empty interval {interval:?}")));
        }
        let probes = 200;
        for i in 1..probes {
            let x = interval.0 + (interval.1 - interval.0) * i as f64 / probes as f64;
            if !(coeffs.delta_x(&x) > 0.0) {
                return Err(ModeError::ParameterDomain(format!("Delta_x <= 0 at x = {x}")));
            }
        }
        let shooter = AngularShooter {
            coeffs,
            problem: AngularProblem::new(coeffs, omega, m),
            omega,
            m,
            interval,
            bc,
            offset: 10.0 * ANGULAR_TOL.sqrt(),
        };
        if bc == AngularBc::RegularEndpoint {
            shooter.endpoint(true, 0.0)?;
            shooter.endpoint(false, 0.0)?;
        }
        Ok(shooter)
    }

    fn endpoint(&self, left: bool, lambda: f64) -> Result<FrobeniusData, ModeError> {
        let (loc, inward) = if left { (self.interval.0, 1.0) } else { (self.interval.1, -1.0) };
        frobenius_data(
            self.coeffs,
            EndpointKind::Angular,
            loc,
            inward,
            c(self.omega),
            self.m,
            c(lambda),
            40,
        )
    }

    /// (x_start, S, Δ_x S′) at the start of a shot from one end.
    fn start(&self, left: bool, lambda: f64) -> Result<(f64, f64, f64), ModeError> {
        let x_end = if left { self.interval.0 } else { self.interval.1 };
        Ok(match self.bc {
            AngularBc::Neumann => (x_end, 1.0, 0.0),
            AngularBc::Dirichlet => (x_end, 0.0, if left { 1.0 } else { -1.0 }),
            AngularBc::RegularEndpoint => {
                let f = self.endpoint(left, lambda)?;
                let (v, dv) = f.eval(self.offset);
                let x = x_end + f.inward * self.offset;
                (x, v.re, dv.re)
            }
        })
    }

    fn phase(&self, left: bool, lambda: f64) -> Result<f64, ModeError> {
        let (x0, s, ds) = self.start(left, lambda)?;
        let mut theta = s.atan2(ds);
        if left {
            if theta < 0.0 {
                theta += std::f64::consts::PI;
            }
            if theta >= std::f64::consts::PI {
                theta -= std::f64::consts::PI;
            }
        } else if theta <= 0.0 {
            theta += std::f64::consts::PI;
        }
        let mid = 0.5 * (self.interval.0 + self.interval.1);
        let sys = Prufer {
            p: &self.problem,
            lambda,
        };
        let sol = IVP::ode(&sys, x0, mid, theta)
            .method(ExplicitRungeKutta::dop853().rtol(ANGULAR_TOL).atol(ANGULAR_TOL).max_steps(1_000_000))
            .solve()
            .map_err(|e| ModeError::StepFailure(format!("{e:?}")))?;
        Ok(sol.y.last().copied().unwrap_or(theta))
    }

    /// Increasing in λ; the j-th eigenvalue solves mismatch = jπ.
    fn mismatch(&self, lambda: f64) -> Result<f64, ModeError> {
        Ok(self.phase(true, lambda)? - self.phase(false, lambda)?)
    }

    fn lower_bound(&self) -> f64 {
        let (a, b) = self.interval;
        (0..=200)
            .map(|i| {
                let x = a + (b - a) * (0.005 + 0.99 * i as f64 / 200.0);
                self.problem.potential(x)
            })
            .fold(f64::INFINITY, f64::min)
            .min(0.0)
            - 1.0
    }

    fn eigenvalue(&self, j: usize) -> Result<f64, ModeError> {
        let target = j as f64 * std::f64::consts::PI;
        let g = |l: f64| self.mismatch(l).map(|v| v - target);
        let mut lo = self.lower_bound();
        let mut glo = g(lo)?;
        let mut tries = 0;
        while glo > 0.0 {
            lo = 2.0 * lo - 1.0;
            glo = g(lo)?;
            tries += 1;
            if tries > 60 {
                return Err(ModeError::BracketFailure {
                    index: j,
                    reason: "no lower bracket".into(),
                });
            }
        }
        let mut hi = lo.abs().max(1.0) + (j as f64 + 1.0).powi(2);
        let mut ghi = g(hi)?;
        tries = 0;
        while ghi < 0.0 {
            lo = hi;
            glo = ghi;
            hi *= 2.0;
            ghi = g(hi)?;
            tries += 1;
            if tries > 80 {
                return Err(ModeError::BracketFailure {
                    index: j,
                    reason: "no upper bracket".into(),
                });
            }
        }
        // Illinois false position, safeguarded by bisection
        let mut side = 0;
        for _ in 0..200 {
            if (hi - lo).abs() <= 1e-13 * hi.abs().max(1.0) {
                break;
            }
            let mut x = (lo * ghi - hi * glo) / (ghi - glo);
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            let gx = g(x)?;
            if gx == 0.0 {
                return Ok(x);
            }
            if gx < 0.0 {
                lo = x;
                glo = gx;
                if side == -1 {
                    ghi *= 0.5;
                }
                side = -1;
            } else {
                hi = x;
                ghi = gx;
                if side == 1 {
                    glo *= 0.5;
                }
                side = 1;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// First `count` eigenvalues of −(Δ_x S′)′ + V S = λS by Prüfer shooting.
pub fn angular_eigenvalues(
    coeffs: &CoefficientSet<f64>,
    omega: f64,
    m: i32,
    interval: (f64, f64),
    bc: AngularBc,
    count: usize,
) -> Result<AngularSpectrum, ModeError> {
    let shooter = AngularShooter::new(coeffs, omega, m, interval, bc)?;
    let values = (0..count)
        .map(|j| shooter.eigenvalue(j))
        .collect::<Result<Vec<_>, _>>()?;
    let near_degenerate = values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[1] - w[0]).abs() <= 1e-8 * w[1].abs().max(1.0))
        .map(|(i, _)| i)
        .collect();
    Ok(AngularSpectrum {
        omega,
        m,
        interval,
        bc,
        values,
        near_degenerate,
    })
}

/// Samples (x, S, Δ_x S′) of the solution launched from the left end with
/// separation constant `lambda`.
pub fn angular_solution(
    coeffs: &CoefficientSet<f64>,
    omega: f64,
    m: i32,
    interval: (f64, f64),
    bc: AngularBc,
    lambda: f64,
    samples: usize,
) -> Result<Vec<(f64, f64, f64)>, ModeError> {
    let shooter = AngularShooter::new(coeffs, omega, m, interval, bc)?;
    let (x0, s, ds) = shooter.start(true, lambda)?;
    let x1 = match bc {
        AngularBc::RegularEndpoint => interval.1 - shooter.offset,
        _ => interval.1,
    };
    let sys = AngularLinear {
        p: &shooter.problem,
        lambda,
    };
    let (xs, ys) = integrate_sampled(&sys, x0, x1, samples, [s, ds], ANGULAR_TOL, ANGULAR_TOL)?;
    Ok(xs.iter().zip(&ys).map(|(x, y)| (*x, y[0], y[1])).collect())
}

/// (P_ℓ(x), P_ℓ′(x)) by the three-term recurrence.
pub fn legendre_p(l: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if l == 0 {
        return (1.0, 0.0);
    }
    for n in 1..l {
        let p2 = ((2 * n + 1) as f64 * x * p1 - n as f64 * p0) / (n + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    // (x² − 1)P_ℓ′ = ℓ(xP_ℓ − P_{ℓ−1}); at x = ±1 use P_ℓ′(±1) = (±1)^{ℓ+1} ℓ(ℓ+1)/2
    let d = if (x * x - 1.0).abs() < 1e-14 {
        x.signum().powi(l as i32 + 1) * (l * (l + 1)) as f64 / 2.0
    } else {
        l as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Q_ℓ on the log form ½ln|(1 + x)/(1 − x)|. For |x| > 1 the recurrence
/// runs backward (Miller) from an order where the minimal solution has
/// decayed below rounding. Inside (−1, 1), and just outside where
/// P_ℓ/Q_ℓ grows by less than 1e4 over ℓ steps, forward recurrence loses
/// at most that factor and is used instead.
pub fn legendre_q(l: usize, x: f64) -> (f64, f64) {
    let q0 = 0.5 * ((1.0 + x) / (1.0 - x)).abs().ln();
    let rho = x.abs() + (x * x - 1.0).max(0.0).sqrt();
    let forward = |n_max: usize| {
        let mut v = vec![q0, x * q0 - 1.0];
        for n in 1..n_max {
            let next = ((2 * n + 1) as f64 * x * v[n] - n as f64 * v[n - 1]) / (n + 1) as f64;
            v.push(next);
        }
        v
    };
    let values: Vec<f64> = if x.abs() < 1.0 || 2.0 * l as f64 * rho.ln() < 4.0 * 10f64.ln() {
        forward(l)
    } else {
        let start = l + 10 + (20.0 / rho.ln()).ceil() as usize;
        let mut v = vec![0.0; start + 2];
        v[start] = 1e-300;
        for n in (1..=start).rev() {
            v[n - 1] = ((2 * n + 1) as f64 * x * v[n] - (n + 1) as f64 * v[n + 1]) / n as f64;
            if v[n - 1].abs() > 1e250 {
                v.iter_mut().for_each(|t| *t *= 1e-250);
            }
        }
        let scale = q0 / v[0];
        v.iter().map(|t| t * scale).collect()
    };
    let q = values[l];
    let d = if l == 0 {
        1.0 / (1.0 - x * x)
    } else {
        l as f64 * (x * q - values[l - 1]) / (x * x - 1.0)
    };
    (q, d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Kerr,
    ReissnerNordstrom,
    KerrNewman,
    ExtremalKerrNewman,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RegularBranch {
    /// P_ℓ((r − M)/α).
    LegendreP,
    /// y^ℓ with y = r − M.
    PowerY,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SingularBranch {
    /// Q_ℓ, logarithmic at the horizon.
    LegendreQLog,
    /// y^{−ℓ−1}.
    InversePower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InfinityBehavior {
    Constant,
    Grows { power: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchReport {
    pub family: Family,
    pub ell: usize,
    pub separation_constant: f64,
    /// √(M² − a² − Q²); zero in the extremal case.
    pub alpha: f64,
    pub indicial_roots: [f64; 2],
    pub log_at_horizon: bool,
    pub regular_branch: RegularBranch,
    pub singular_branch: SingularBranch,
    pub infinity: InfinityBehavior,
    pub admissible_state_exists: bool,
    /// Max ODE residual of both branches on sampled points.
    pub branch_residual: f64,
    /// Slope of log|regular| against log r at large r.
    pub growth_exponent: f64,
    /// dQ_ℓ/d ln y near the horizon (−½ for every ℓ); extremal: the measured
    /// exponent of the singular branch.
    pub singular_rate: f64,
}

/// Zero-frequency axisymmetric branches of (ΔR′)′ = ℓ(ℓ+1)R on the exterior.
pub fn zero_frequency_classify(family: Family, mass: f64, a: f64, q: f64, ell: usize) -> Result<BranchReport, ModeError> {
    if !(mass > 0.0) {
        return Err(ModeError::ParameterDomain(format!("M = {mass} must be positive")));
    }
    let charge2 = a * a + q * q;
    let gap = mass * mass - charge2;
    match family {
        Family::Kerr if q != 0.0 => return Err(ModeError::ParameterDomain("Kerr needs Q = 0".into())),
        Family::ReissnerNordstrom if a != 0.0 => {
            return Err(ModeError::ParameterDomain("Reissner-Nordstrom needs a = 0".into()))
        }
        Family::ExtremalKerrNewman if gap.abs() > 1e-12 * mass * mass => {
            return Err(ModeError::ParameterDomain(format!("a^2 + Q^2 - M^2 = {} is not zero", -gap)))
        }
        Family::Kerr | Family::ReissnerNordstrom | Family::KerrNewman if !(gap > 0.0) => {
            return Err(ModeError::ParameterDomain("needs a^2 + Q^2 < M^2".into()))
        }
        _ => {}
    }
    let l = ell as f64;
    let sep = l * (l + 1.0);
    let infinity = if ell == 0 {
        InfinityBehavior::Constant
    } else {
        InfinityBehavior::Grows { power: ell }
    };
    if family == Family::ExtremalKerrNewman {
        // y²R″ + 2yR′ − ℓ(ℓ+1)R = 0
        let resid = |p: f64, y: f64| {
            let (r, r1, r2) = (y.powf(p), p * y.powf(p - 1.0), p * (p - 1.0) * y.powf(p - 2.0));
            (y * y * r2 + 2.0 * y * r1 - sep * r).abs() / (sep.max(1.0) * r.abs())
        };
        let ys = [1e-3, 0.1, 1.0, 10.0, 1e3];
        let branch_residual = ys
            .iter()
            .flat_map(|&y| [resid(l, y), resid(-l - 1.0, y)])
            .fold(0.0, f64::max);
        let slope = |p: f64, y0: f64, y1: f64| (y1.powf(p).abs().ln() - y0.powf(p).abs().ln()) / (y1.ln() - y0.ln());
        return Ok(BranchReport {
            family,
            ell,
            separation_constant: sep,
            alpha: 0.0,
            indicial_roots: [l, -l - 1.0],
            log_at_horizon: false,
            regular_branch: RegularBranch::PowerY,
            singular_branch: SingularBranch::InversePower,
            infinity,
            admissible_state_exists: false,
            branch_residual,
            growth_exponent: slope(l, 1e3, 1e4),
            singular_rate: slope(-l - 1.0, 1e-6, 1e-5),
        });
    }
    let alpha = gap.sqrt();
    // x = (r − M)/α turns the equation into ((x² − 1)R′)′ = ℓ(ℓ+1)R
    let resid = |f: &dyn Fn(f64) -> (f64, f64), x: f64| {
        let h = 1e-4 * x.abs().max(1.0);
        let flux = |t: f64| (t * t - 1.0) * f(t).1;
        let lhs = (flux(x + h) - flux(x - h)) / (2.0 * h);
        (lhs - sep * f(x).0).abs() / (sep.max(1.0) * f(x).0.abs().max(1e-300))
    };
    let xs = [1.5, 2.0, 3.0, 7.0];
    let p = |x: f64| legendre_p(ell, x);
    let qf = |x: f64| legendre_q(ell, x);
    let branch_residual = xs
        .iter()
        .flat_map(|&x| [resid(&p, x), resid(&qf, x)])
        .fold(0.0, f64::max);
    let (x0, x1) = (1e4, 1e5);
    let growth_exponent = (p(x1).0.abs().ln() - p(x0).0.abs().ln()) / (x1 / x0).ln();
    let (e0, e1) = (1e-9, 1e-7);
    let singular_rate = (qf(1.0 + e1).0 - qf(1.0 + e0).0) / (e1 / e0).ln();
    Ok(BranchReport {
        family,
        ell,
        separation_constant: sep,
        alpha,
        indicial_roots: [0.0, 0.0],
        log_at_horizon: true,
        regular_branch: RegularBranch::LegendreP,
        singular_branch: SingularBranch::LegendreQLog,
        infinity,
        admissible_state_exists: false,
        branch_residual,
        growth_exponent,
        singular_rate,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReassemblyReport {
    pub lambda: f64,
    /// max |residual| / max |individual term| over the sampled grid.
    pub max_residual: f64,
}

/// Assembles u = e^{−iΩt+imφ} R(r) S(x) from numerical radial and angular
/// solutions and evaluates the full operator with the metric coefficients
/// A, B, Φ (not the separated potentials).
pub fn reassembly_check(
    coeffs: &CoefficientSet<f64>,
    omega: f64,
    m: i32,
    angular: ((f64, f64), AngularBc, usize),
    r_span: (f64, f64),
) -> Result<ReassemblyReport, ModeError> {
    let (interval, bc, j) = angular;
    let lambda = *angular_eigenvalues(coeffs, omega, m, interval, bc, j + 1)?
        .values
        .last()
        .unwrap();
    let n = 400;
    let ang = angular_solution(coeffs, omega, m, interval, bc, lambda, n)?;
    let params = ModeParams {
        omega: c(omega),
        m,
        lambda: c(lambda),
        coeffs: coeffs.clone(),
    };
    let rad = integrate_radial(&params, r_span, c(1.0), Complex64::new(0.2, 0.5), 1e-13, n)?;
    // five-point derivative of the flux variables on the dense output grid
    let d5 = |v: &dyn Fn(usize) -> Complex64, i: usize, h: f64| {
        (-v(i + 2) + v(i + 1) * 8.0 - v(i - 1) * 8.0 + v(i - 2)) / (12.0 * h)
    };
    let hr = rad.r[1] - rad.r[0];
    let hx = ang[1].0 - ang[0].0;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in (n / 10..n - n / 10).step_by(n / 20) {
        let r = rad.r[i];
        let big_r = rad.values[i];
        let dr_flux = d5(&|k| rad.flux[k], i, hr);
        for jx in (n / 10..n - n / 10).step_by(n / 20) {
            let (x, s, _) = ang[jx];
            let dx_flux = d5(&|k| c(ang[k].2), jx, hx).re;
            let blocks = coeffs
                .evaluate_blocks(&r, &x)
                .map_err(|e| ModeError::ParameterDomain(e.to_string()))?;
            let mf = m as f64;
            let pot = omega * omega * blocks.a_coef() + 2.0 * omega * mf * blocks.b_coef()
                - mf * mf * blocks.phi_coef()
                + coeffs.params.k / 3.0 * blocks.rho2;
            let terms = [dr_flux * s, big_r * dx_flux, big_r * s * pot];
            let res: Complex64 = terms.iter().sum();
            worst = worst.max(res.norm());
            scale = terms.iter().map(|t| t.norm()).fold(scale, f64::max);
        }
    }
    Ok(ReassemblyReport {
        lambda,
        max_residual: worst / scale,
    })
}
