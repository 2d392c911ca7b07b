//! Exact curvature certificates for the Carter family: Christoffel symbols,
//! Ricci tensor, scalar curvature and the trace-free Ricci defect, all as
//! rational functions over structured denominators.

use std::time::Instant;

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metric::CarterParams;
use crate::poly::{rat, Denominators, Factor, Mono, RatFun, SparsePoly, Var, NVARS};

/// Coordinate order used by every table: t, r, x, φ.
pub const T: usize = 0;
pub const R: usize = 1;
pub const X: usize = 2;
pub const PHI: usize = 3;
const NAMES: [&str; 4] = ["t", "r", "x", "phi"];

/// Default ceiling on numerator terms before the symbolic run gives up.
pub const DEFAULT_TERM_CEILING: usize = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("certificate {component} failed: coefficient {coefficient} of monomial {monomial} is nonzero")]
    CertificateFailure {
        component: String,
        monomial: String,
        coefficient: String,
    },
    #[error("term ceiling {ceiling} exceeded at {stage} ({terms} terms); use the spot check instead")]
    TermCeiling {
        stage: String,
        terms: usize,
        ceiling: usize,
    },
    #[error("sampled point hits a zero of a structured denominator")]
    EvaluationAtPole,
    #[error("spot check needs at least one point")]
    NoPoints,
}

/// Deliberate modifications of the metric for negative controls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Flips the sign of the Δ_r term in g_tφ, leaving the inverse untouched.
    FlipGtphiTerm,
}

/// Background parameters as polynomials: ring variables for the generic run,
/// constants for specialized runs.
#[derive(Clone, Debug)]
pub struct SymParams {
    pub a: SparsePoly,
    pub k: SparsePoly,
    pub lambda: SparsePoly,
    pub m: SparsePoly,
    pub c: [SparsePoly; 5],
}

impl SymParams {
    pub fn generic() -> Self {
        SymParams {
            a: SparsePoly::var(Var::A),
            k: SparsePoly::var(Var::K),
            lambda: SparsePoly::var(Var::Lambda),
            m: SparsePoly::var(Var::M),
            c: [Var::C1, Var::C2, Var::C3, Var::C4, Var::C5].map(SparsePoly::var),
        }
    }

    pub fn specialized(p: &CarterParams<BigRational>) -> Self {
        SymParams {
            a: SparsePoly::constant(p.a.clone()),
            k: SparsePoly::constant(p.k.clone()),
            lambda: SparsePoly::constant(p.lambda.clone()),
            m: SparsePoly::constant(p.m.clone()),
            c: [0, 1, 2, 3, 4].map(|i| SparsePoly::constant(p.c[i].clone())),
        }
    }

    /// Generic run with C₃ = Q² and every other constant zero, Q² kept as
    /// the variable C₃.
    pub fn kn_generic() -> Self {
        let z = SparsePoly::zero();
        SymParams {
            a: SparsePoly::var(Var::A),
            k: z.clone(),
            lambda: z.clone(),
            m: SparsePoly::var(Var::M),
            c: [z.clone(), z.clone(), SparsePoly::var(Var::C3), z.clone(), z],
        }
    }

    pub fn delta(&self) -> SparsePoly {
        self.c[2].sub(&self.a.mul(&self.a).mul(&self.c[4]))
    }
}

/// The metric and its inverse as structured rational functions.
pub struct Geometry {
    pub den: Denominators,
    pub params: SymParams,
    pub g: [[RatFun; 4]; 4],
    pub ginv: [[RatFun; 4]; 4],
    pub delta_r: SparsePoly,
    pub delta_x: SparsePoly,
}

fn zero_table() -> [[RatFun; 4]; 4] {
    std::array::from_fn(|_| std::array::from_fn(|_| RatFun::zero()))
}

impl Geometry {
    pub fn new(p: SymParams, fault: Fault) -> Self {
        let r = SparsePoly::var(Var::R);
        let x = SparsePoly::var(Var::X);
        let r2 = r.mul(&r);
        let x2 = x.mul(&x);
        let a = p.a.clone();
        let a2 = a.mul(&a);
        let alpha2 = SparsePoly::one()
            .sub(&p.lambda.mul(&a2).scale(&rat(1, 3)))
            .add(&p.c[0].scale(&rat(1, 2)));
        let delta_r = p
            .k
            .mul(&r2.mul(&r2))
            .scale(&rat(-1, 12))
            .add(&alpha2.mul(&r2))
            .add(&p.c[1].sub(&p.m.scale(&rat(2, 1))).mul(&r))
            .add(&a2.add(&p.c[2]));
        let delta_x = p
            .k
            .mul(&a2)
            .mul(&x2.mul(&x2))
            .scale(&rat(-1, 12))
            .sub(&alpha2.mul(&x2))
            .sub(&p.c[3].mul(&x))
            .add(&SparsePoly::one().add(&p.c[4]));
        let rho2 = r2.add(&a2.mul(&x2));
        let s = r2.add(&a2);
        let w = SparsePoly::one().sub(&x2);

        let mut g = zero_table();
        g[T][T] = RatFun::new(a2.mul(&delta_x).sub(&delta_r), [1, 0, 0]);
        let tphi_first = a.mul(&w).mul(&delta_r);
        let tphi_first = match fault {
            Fault::None => tphi_first,
            Fault::FlipGtphiTerm => tphi_first.neg(),
        };
        g[T][PHI] = RatFun::new(tphi_first.sub(&a.mul(&s).mul(&delta_x)), [1, 0, 0]);
        g[PHI][T] = g[T][PHI].clone();
        g[PHI][PHI] = RatFun::new(
            s.mul(&s).mul(&delta_x).sub(&a2.mul(&w).mul(&w).mul(&delta_r)),
            [1, 0, 0],
        );
        g[R][R] = RatFun::new(rho2.clone(), [0, 1, 0]);
        g[X][X] = RatFun::new(rho2.clone(), [0, 0, 1]);

        // closed-form inverse, over ρ²Δ_rΔ_x
        let mut ginv = zero_table();
        ginv[T][T] = RatFun::new(
            s.mul(&s).mul(&delta_x).neg().add(&a2.mul(&w).mul(&w).mul(&delta_r)),
            [1, 1, 1],
        );
        ginv[T][PHI] = RatFun::new(
            a.mul(&s).mul(&delta_x).neg().add(&a.mul(&w).mul(&delta_r)),
            [1, 1, 1],
        );
        ginv[PHI][T] = ginv[T][PHI].clone();
        ginv[PHI][PHI] = RatFun::new(a2.mul(&delta_x).neg().add(&delta_r), [1, 1, 1]);
        ginv[R][R] = RatFun::new(delta_r.clone(), [1, 0, 0]);
        ginv[X][X] = RatFun::new(delta_x.clone(), [1, 0, 0]);

        let den = Denominators::new(rho2, delta_r.clone(), delta_x.clone());
        Geometry {
            den,
            params: p,
            g,
            ginv,
            delta_r,
            delta_x,
        }
    }

    fn d(&self, f: &RatFun, c: usize) -> RatFun {
        match c {
            R => self.den.diff(f, Var::R),
            X => self.den.diff(f, Var::X),
            _ => RatFun::zero(),
        }
    }

    /// Residual of g·g⁻¹ − I; empty when the inverse is consistent.
    pub fn inverse_residuals(&self) -> Vec<(usize, usize, RatFun)> {
        let mut out = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                let terms: Vec<RatFun> = (0..4)
                    .map(|k| self.den.mul(&self.g[i][k], &self.ginv[k][j]))
                    .collect();
                let mut sum = self.den.sum(terms.iter());
                if i == j {
                    sum = self.den.sub(&sum, &RatFun::poly(SparsePoly::one()));
                }
                let sum = self.den.reduce(&sum);
                if !sum.is_zero() {
                    out.push((i, j, sum));
                }
            }
        }
        out
    }

    /// Γ^λ_{μν} with t- and φ-derivatives set to zero; `gamma[l][m][n]`.
    pub fn christoffel(&self) -> Vec<Vec<Vec<RatFun>>> {
        let dg: Vec<Vec<Vec<RatFun>>> = (0..4)
            .map(|c| {
                (0..4)
                    .map(|i| (0..4).map(|j| self.d(&self.g[i][j], c)).collect())
                    .collect()
            })
            .collect();
        let half = rat(1, 2);
        let jobs: Vec<(usize, usize, usize)> = (0..4)
            .flat_map(|l| (0..4).flat_map(move |m| (m..4).map(move |n| (l, m, n))))
            .collect();
        let vals: Vec<RatFun> = jobs
            .par_iter()
            .map(|&(l, m, n)| {
                let terms: Vec<RatFun> = (0..4)
                    .filter(|&al| !self.ginv[l][al].is_zero())
                    .map(|al| {
                        let inner = self.den.sum(
                            [dg[m][al][n].clone(), dg[n][al][m].clone(), dg[al][m][n].neg()]
                                .iter(),
                        );
                        self.den.mul(&self.ginv[l][al], &inner)
                    })
                    .collect();
                self.den.reduce(&self.den.sum(terms.iter()).scale(&half))
            })
            .collect();
        let mut gamma = vec![vec![vec![RatFun::zero(); 4]; 4]; 4];
        for (&(l, m, n), v) in jobs.iter().zip(vals) {
            gamma[l][n][m] = v.clone();
            gamma[l][m][n] = v;
        }
        gamma
    }

    /// Covariant Ricci tensor R_{μν}.
    pub fn ricci(&self, gamma: &[Vec<Vec<RatFun>>]) -> [[RatFun; 4]; 4] {
        let contracted: Vec<RatFun> = (0..4)
            .map(|b| self.den.reduce(&self.den.sum((0..4).map(|a| &gamma[a][a][b]))))
            .collect();
        let jobs: Vec<(usize, usize)> = (0..4).flat_map(|m| (m..4).map(move |n| (m, n))).collect();
        let vals: Vec<RatFun> = jobs
            .par_iter()
            .map(|&(m, n)| {
                let mut parts: Vec<RatFun> = Vec::new();
                for a in [R, X] {
                    parts.push(self.d(&gamma[a][m][n], a));
                }
                parts.push(self.d(&contracted[m], n).neg());
                for b in 0..4 {
                    parts.push(self.den.mul(&contracted[b], &gamma[b][m][n]));
                }
                for a in 0..4 {
                    for b in 0..4 {
                        parts.push(self.den.mul(&gamma[a][n][b], &gamma[b][m][a]).neg());
                    }
                }
                self.den.reduce(&self.den.sum(parts.iter()))
            })
            .collect();
        let mut ric = zero_table();
        for (&(m, n), v) in jobs.iter().zip(vals) {
            ric[n][m] = v.clone();
            ric[m][n] = v;
        }
        ric
    }

    /// Mixed components R^μ_ν = g^{μα} R_{αν}.
    pub fn mixed(&self, ric: &[[RatFun; 4]; 4]) -> [[RatFun; 4]; 4] {
        let jobs: Vec<(usize, usize)> = (0..4).flat_map(|m| (0..4).map(move |n| (m, n))).collect();
        let vals: Vec<RatFun> = jobs
            .par_iter()
            .map(|&(m, n)| {
                let terms: Vec<RatFun> = (0..4)
                    .map(|a| self.den.mul(&self.ginv[m][a], &ric[a][n]))
                    .collect();
                self.den.reduce(&self.den.sum(terms.iter()))
            })
            .collect();
        let mut out = zero_table();
        for (&(m, n), v) in jobs.iter().zip(vals) {
            out[m][n] = v;
        }
        out
    }

    /// Closed forms of the trace-free Ricci components proportional to δ.
    pub fn defect_closed_forms(&self) -> Vec<(&'static str, usize, usize, RatFun)> {
        let p = &self.params;
        let delta = p.delta();
        let a = &p.a;
        let a2 = a.mul(a);
        let r2 = SparsePoly::var(Var::R).pow(2);
        let x2 = SparsePoly::var(Var::X).pow(2);
        let tt = delta.mul(&a2.mul(&x2).sub(&r2).sub(&a2.scale(&rat(2, 1))));
        let tphi = delta
            .mul(a)
            .scale(&rat(2, 1))
            .mul(&r2.add(&a2))
            .mul(&SparsePoly::one().sub(&x2));
        let phit = delta.mul(a).scale(&rat(-2, 1));
        vec![
            ("S^t_t", T, T, RatFun::new(tt.clone(), [3, 0, 0])),
            ("S^t_phi", T, PHI, RatFun::new(tphi, [3, 0, 0])),
            ("S^phi_t", PHI, T, RatFun::new(phit, [3, 0, 0])),
            ("S^phi_phi", PHI, PHI, RatFun::new(tt.neg(), [3, 0, 0])),
            ("S^r_r", R, R, RatFun::new(delta.neg(), [2, 0, 0])),
            ("S^x_x", X, X, RatFun::new(delta, [2, 0, 0])),
        ]
    }
}

/// Everything the certificate needs, computed once.
pub struct CurvatureData {
    pub mixed_ricci: [[RatFun; 4]; 4],
    pub scalar: RatFun,
    pub trace_free: [[RatFun; 4]; 4],
    pub christoffel_terms: usize,
    pub ricci_terms: usize,
}

fn check_ceiling(stage: &str, items: &[&RatFun], ceiling: usize) -> Result<usize, CertError> {
    let terms: usize = items.iter().map(|f| f.num.len()).sum();
    let worst = items.iter().map(|f| f.num.len()).max().unwrap_or(0);
    if worst > ceiling {
        return Err(CertError::TermCeiling {
            stage: stage.to_string(),
            terms: worst,
            ceiling,
        });
    }
    Ok(terms)
}

pub fn curvature(geo: &Geometry, ceiling: usize) -> Result<CurvatureData, CertError> {
    let gamma = geo.christoffel();
    let flat: Vec<&RatFun> = gamma.iter().flatten().flatten().collect();
    let christoffel_terms = check_ceiling("christoffel", &flat, ceiling)?;
    let ric = geo.ricci(&gamma);
    let flat: Vec<&RatFun> = ric.iter().flatten().collect();
    let ricci_terms = check_ceiling("ricci", &flat, ceiling)?;
    let mixed_ricci = geo.mixed(&ric);
    let scalar = geo
        .den
        .reduce(&geo.den.sum((0..4).map(|i| &mixed_ricci[i][i])));
    let quarter = scalar.scale(&rat(1, 4));
    let mut trace_free = zero_table();
    for m in 0..4 {
        for n in 0..4 {
            trace_free[m][n] = if m == n {
                geo.den.reduce(&geo.den.sub(&mixed_ricci[m][n], &quarter))
            } else {
                mixed_ricci[m][n].clone()
            };
        }
    }
    Ok(CurvatureData {
        mixed_ricci,
        scalar,
        trace_free,
        christoffel_terms,
        ricci_terms,
    })
}

/// One certificate numerator after cancellation.
#[derive(Clone, Debug)]
pub struct Numerator {
    pub name: String,
    /// Terms of the two sides before they are combined.
    pub terms_before_cancel: usize,
    /// Degrees in r and x of the two sides before they are combined.
    pub degree_r: u32,
    pub degree_x: u32,
    pub residual: RatFun,
}

fn numerator(name: &str, l: SparsePoly, r: SparsePoly, den: [u32; 3], d: &Denominators) -> Numerator {
    Numerator {
        name: name.to_string(),
        terms_before_cancel: l.len() + r.len(),
        degree_r: l.degree_in(Var::R).max(r.degree_in(Var::R)),
        degree_x: l.degree_in(Var::X).max(r.degree_in(Var::X)),
        residual: d.reduce(&RatFun::new(l.sub(&r), den)),
    }
}

/// N_R = ρ²R + Δ_r″ + Δ_x″, followed by the six defect numerators formed by
/// multiplying S^μ_ν minus its closed form by the displayed ρ-power.
pub fn ricci_defect_numerators(geo: &Geometry, data: &CurvatureData) -> Vec<Numerator> {
    let mut out = Vec::with_capacity(7);
    let rho2 = RatFun::poly(geo.den.factor(Factor::Rho2).clone());
    let lhs = geo.den.mul(&rho2, &data.scalar);
    let rhs = RatFun::poly(
        geo.delta_r
            .diff(Var::R)
            .diff(Var::R)
            .add(&geo.delta_x.diff(Var::X).diff(Var::X)),
    );
    let full_den = [0, 1, 2].map(|i| lhs.den[i].max(rhs.den[i]));
    let (l, r) = (geo.den.lift(&lhs, full_den), geo.den.lift(&rhs, full_den));
    out.push(numerator("N_R", l, r.neg(), full_den, &geo.den));
    let defects: Vec<Numerator> = geo
        .defect_closed_forms()
        .into_par_iter()
        .map(|(name, m, n, closed)| {
            let s = &data.trace_free[m][n];
            let rho_pow = closed.den[0];
            let rho = geo.den.power(0, rho_pow);
            let scaled = geo.den.mul(&RatFun::poly((*rho).clone()), s);
            let full_den = [0, 1, 2].map(|i| scaled.den[i]);
            let l = geo.den.lift(&scaled, full_den);
            let target = RatFun::poly(closed.num.clone());
            let r = geo.den.lift(&target, full_den);
            numerator(name, l, r, full_den, &geo.den)
        })
        .collect();
    out.extend(defects);
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentFlag {
    pub component: String,
    pub residual_is_zero: bool,
    pub terms_before_cancel: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertReport {
    pub scalar_ok: bool,
    pub inverse_ok: bool,
    pub trace_free_ok: bool,
    pub defect_components: Vec<ComponentFlag>,
    pub christoffel_terms: usize,
    pub ricci_terms: usize,
    #[serde(skip)]
    pub elapsed: f64,
}

impl CertReport {
    pub fn passed(&self) -> bool {
        self.scalar_ok
            && self.inverse_ok
            && self.trace_free_ok
            && self.defect_components.iter().all(|c| c.residual_is_zero)
    }
}

fn first_nonzero(component: &str, f: &RatFun) -> CertError {
    let (m, c) = f.num.leading().cloned().unwrap_or((Mono::ONE, BigRational::zero()));
    CertError::CertificateFailure {
        component: component.to_string(),
        monomial: m.to_string(),
        coefficient: c.to_string(),
    }
}

/// Runs the full protocol. Returns the report, or the first failing
/// numerator with its leading nonzero term.
pub fn verify_certificates(params: SymParams, fault: Fault) -> Result<CertReport, CertError> {
    verify_with_ceiling(params, fault, DEFAULT_TERM_CEILING)
}

pub fn verify_with_ceiling(
    params: SymParams,
    fault: Fault,
    ceiling: usize,
) -> Result<CertReport, CertError> {
    let start = Instant::now();
    let geo = Geometry::new(params, fault);
    let data = curvature(&geo, ceiling)?;
    let numerators = ricci_defect_numerators(&geo, &data);
    let trace = geo
        .den
        .reduce(&geo.den.sum([T, R, X, PHI].iter().map(|&i| &data.trace_free[i][i])));
    let inverse = geo.inverse_residuals();
    let report = CertReport {
        scalar_ok: numerators[0].residual.is_zero(),
        inverse_ok: inverse.is_empty(),
        trace_free_ok: trace.is_zero(),
        defect_components: numerators[1..]
            .iter()
            .map(|n| ComponentFlag {
                component: n.name.clone(),
                residual_is_zero: n.residual.is_zero(),
                terms_before_cancel: n.terms_before_cancel,
            })
            .collect(),
        christoffel_terms: data.christoffel_terms,
        ricci_terms: data.ricci_terms,
        elapsed: start.elapsed().as_secs_f64(),
    };
    if let Some(n) = numerators.iter().find(|n| !n.residual.is_zero()) {
        return Err(first_nonzero(&n.name, &n.residual));
    }
    if let Some((i, j, f)) = inverse.first() {
        return Err(first_nonzero(&format!("g.ginv[{}][{}]", NAMES[*i], NAMES[*j]), f));
    }
    if !trace.is_zero() {
        return Err(first_nonzero("trace", &trace));
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpotReport {
    pub points: usize,
    pub resampled: usize,
    pub all_zero: bool,
    /// Largest degrees in r and x of the numerators before cancellation.
    pub max_degree_r: u32,
    pub max_degree_x: u32,
    #[serde(skip)]
    pub elapsed: f64,
}

/// Point for the seeded fallback: small random rationals for every ring
/// variable, drawn so that no single variable is zero.
fn sample_point(rng: &mut ChaCha8Rng) -> [BigRational; NVARS] {
    std::array::from_fn(|_| {
        let mut n = 0;
        while n == 0 {
            n = rng.random_range(-9i64..=9);
        }
        rat(n, rng.random_range(1i64..=7))
    })
}

fn params_at(point: &[BigRational; NVARS]) -> CarterParams<BigRational> {
    CarterParams {
        a: point[Var::A as usize].clone(),
        k: point[Var::K as usize].clone(),
        lambda: point[Var::Lambda as usize].clone(),
        m: point[Var::M as usize].clone(),
        c: [Var::C1, Var::C2, Var::C3, Var::C4, Var::C5].map(|v| point[v as usize].clone()),
    }
}

/// Exact values at one point of the seven certificate numerators, plus the
/// six trace-free components. Parameters are substituted before the
/// differentiation pipeline; r and x stay symbolic until the end.
pub fn evaluate_at(
    point: &[BigRational; NVARS],
    fault: Fault,
) -> Result<(Vec<(String, BigRational)>, Vec<(String, BigRational)>), CertError> {
    let params = SymParams::specialized(&params_at(point));
    let geo = Geometry::new(params, fault);
    for i in 0..3 {
        if geo.den.power(i, 1).eval(point).is_zero() {
            return Err(CertError::EvaluationAtPole);
        }
    }
    let data = curvature(&geo, usize::MAX)?;
    let numerators = ricci_defect_numerators(&geo, &data);
    let mut nums = Vec::new();
    for n in &numerators {
        let v = geo.den.eval(&n.residual, point).ok_or(CertError::EvaluationAtPole)?;
        nums.push((n.name.clone(), v));
    }
    let mut comps = Vec::new();
    for (name, m, n, _) in geo.defect_closed_forms() {
        let v = geo
            .den
            .eval(&data.trace_free[m][n], point)
            .ok_or(CertError::EvaluationAtPole)?;
        comps.push((name.to_string(), v));
    }
    Ok((nums, comps))
}

/// Seeded Schwartz–Zippel fallback.
pub fn spot_check_random(n_points: usize, seed: u64, fault: Fault) -> Result<SpotReport, CertError> {
    if n_points == 0 {
        return Err(CertError::NoPoints);
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut done, mut resampled) = (0, 0);
    let (mut deg_r, mut deg_x) = (0, 0);
    let mut all_zero = true;
    while done < n_points {
        let point = sample_point(&mut rng);
        let params = SymParams::specialized(&params_at(&point));
        let geo = Geometry::new(params, fault);
        if (0..3).any(|i| geo.den.power(i, 1).eval(&point).is_zero()) {
            resampled += 1;
            continue;
        }
        let data = curvature(&geo, usize::MAX)?;
        for n in ricci_defect_numerators(&geo, &data) {
            deg_r = deg_r.max(n.degree_r);
            deg_x = deg_x.max(n.degree_x);
            if !n.residual.num.eval(&point).is_zero() {
                all_zero = false;
            }
        }
        done += 1;
    }
    Ok(SpotReport {
        points: done,
        resampled,
        all_zero,
        max_degree_r: deg_r,
        max_degree_x: deg_x,
        elapsed: start.elapsed().as_secs_f64(),
    })
}
