//! Bounded-slab spatial operators for one azimuthal mode: flux-form
//! discretization, the weighted generalized eigenproblem, the constant
//! projection, the resolvent near zero, and the quadratic mode pencil.

use faer::Mat;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{
    self, general_eigenvalues, nullity, shift_invert_lanczos, symmetric_eigen, weighted_dot,
    BandMatrix, LinAlgError, Scalar,
};
use crate::metric::{classify_slab, Coefficient, CoefficientSet, MetricError, SlabSpec, SlabVerdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlabError {
    #[error("slab is not strictly stationary: {0:?} fails the positivity margin")]
    NotStrictSlab(Coefficient),
    #[error("operation requires the axisymmetric sector m = 0, got m = {0}")]
    WrongMode(i32),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("sigma^2 = {sigma2} lies within 10% of eigenvalue {lambda}")]
    NearResonance { sigma2: f64, lambda: f64 },
    #[error("sigma = {sigma} must satisfy 0 < |sigma| < sqrt(lambda_1)/2 = {limit}")]
    SigmaOutOfRange { sigma: f64, limit: f64 },
    #[error("grid needs at least {0} intervals per axis")]
    Resolution(usize),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

impl From<LinAlgError> for SlabError {
    fn from(e: LinAlgError) -> Self {
        SlabError::SolverFailure(e.to_string())
    }
}

/// Tensor vertex grid with trapezoidal quadrature weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlabGrid {
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub hr: f64,
    pub hx: f64,
    pub wr: Vec<f64>,
    pub wx: Vec<f64>,
}

fn trapezoid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64, Vec<f64>) {
    let h = (hi - lo) / n as f64;
    let nodes: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
    let w = (0..=n)
        .map(|i| if i == 0 || i == n { 0.5 * h } else { h })
        .collect();
    (nodes, h, w)
}

impl SlabGrid {
    pub fn new(spec: &SlabSpec, nr: usize, nx: usize) -> Self {
        let (r, hr, wr) = trapezoid(spec.r_minus, spec.r_plus, nr);
        let (x, hx, wx) = trapezoid(spec.x_minus, spec.x_plus, nx);
        SlabGrid { r, x, hr, hx, wr, wx }
    }

    pub fn nr_nodes(&self) -> usize {
        self.r.len()
    }

    pub fn nx_nodes(&self) -> usize {
        self.x.len()
    }

    pub fn len(&self) -> usize {
        self.r.len() * self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.x.len() + j
    }
}

/// Grid plus sampled coefficients for one azimuthal mode.
#[derive(Clone, Debug, Serialize)]
pub struct DiscreteSlab {
    pub grid: SlabGrid,
    pub m: i32,
    /// Node samples of A, B, Φ.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub phi: Vec<f64>,
    /// Δ_r at radial face midpoints, Δ_x at angular face midpoints.
    pub delta_r_faces: Vec<f64>,
    pub delta_x_faces: Vec<f64>,
    /// True for the constant-coefficient analytic anchor (not a Carter member).
    pub flat_override: bool,
}

/// Default sampling resolution for the positivity check.
pub const CLASSIFY_RESOLUTION: usize = 129;

impl DiscreteSlab {
    /// Samples a Carter background; requires k = 0 and a STRICT slab.
    pub fn carter(
        c: &CoefficientSet<f64>,
        spec: &SlabSpec,
        nr: usize,
        nx: usize,
        m: i32,
    ) -> Result<Self, SlabError> {
        c.params.require_k_zero()?;
        spec.validate()?;
        if nr < 2 || nx < 2 {
            return Err(SlabError::Resolution(2));
        }
        let cls = classify_slab(c, spec, CLASSIFY_RESOLUTION);
        if let SlabVerdict::Reject(which) = cls.verdict {
            return Err(SlabError::NotStrictSlab(which));
        }
        let grid = SlabGrid::new(spec, nr, nx);
        let mut a = Vec::with_capacity(grid.len());
        let mut b = Vec::with_capacity(grid.len());
        let mut phi = Vec::with_capacity(grid.len());
        for r in &grid.r {
            for x in &grid.x {
                let s = c.evaluate_blocks(r, x)?;
                a.push(s.a_coef());
                b.push(s.b_coef());
                phi.push(s.phi_coef());
            }
        }
        let delta_r_faces = grid.r.windows(2).map(|w| c.delta_r(&(0.5 * (w[0] + w[1])))).collect();
        let delta_x_faces = grid.x.windows(2).map(|w| c.delta_x(&(0.5 * (w[0] + w[1])))).collect();
        Ok(DiscreteSlab {
            grid,
            m,
            a,
            b,
            phi,
            delta_r_faces,
            delta_x_faces,
            flat_override: false,
        })
    }

    /// Constant coefficients A = Φ = Δ_r = Δ_x = 1, B = 0 on a rectangle.
    pub fn flat(spec: &SlabSpec, nr: usize, nx: usize, m: i32) -> Self {
        let grid = SlabGrid::new(spec, nr, nx);
        let n = grid.len();
        DiscreteSlab {
            a: vec![1.0; n],
            b: vec![0.0; n],
            phi: vec![1.0; n],
            delta_r_faces: vec![1.0; nr],
            delta_x_faces: vec![1.0; nx],
            grid,
            m,
            flat_override: true,
        }
    }
}

/// Flux-form H (as face conductances plus a diagonal potential), the
/// diagonal mass M_A and the diagonal gyroscopic weight G_B.
#[derive(Clone, Debug, Serialize)]
pub struct OperatorPair {
    pub m: i32,
    pub nr_nodes: usize,
    pub nx_nodes: usize,
    /// (node, node, conductance) for every interior face.
    pub faces: Vec<(usize, usize, f64)>,
    pub potential: Vec<f64>,
    pub mass: Vec<f64>,
    pub gyro: Vec<f64>,
}

pub fn assemble_operators(slab: &DiscreteSlab) -> OperatorPair {
    let g = &slab.grid;
    let (nr, nx) = (g.nr_nodes(), g.nx_nodes());
    let mut faces = Vec::with_capacity(2 * nr * nx);
    for i in 0..nr {
        for j in 0..nx {
            if i + 1 < nr {
                let c = slab.delta_r_faces[i] / g.hr * g.wx[j];
                faces.push((g.index(i, j), g.index(i + 1, j), c));
            }
            if j + 1 < nx {
                let c = slab.delta_x_faces[j] / g.hx * g.wr[i];
                faces.push((g.index(i, j), g.index(i, j + 1), c));
            }
        }
    }
    let m2 = (slab.m as f64).powi(2);
    let mut potential = vec![0.0; g.len()];
    let mut mass = vec![0.0; g.len()];
    let mut gyro = vec![0.0; g.len()];
    for i in 0..nr {
        for j in 0..nx {
            let k = g.index(i, j);
            let w = g.wr[i] * g.wx[j];
            potential[k] = m2 * slab.phi[k] * w;
            mass[k] = slab.a[k] * w;
            gyro[k] = slab.b[k] * w;
        }
    }
    OperatorPair {
        m: slab.m,
        nr_nodes: nr,
        nx_nodes: nx,
        faces,
        potential,
        mass,
        gyro,
    }
}

impl OperatorPair {
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn bandwidth(&self) -> usize {
        self.nx_nodes
    }

    /// `Hu` as a sum of flux differences, so constants are annihilated
    /// exactly when the potential vanishes.
    pub fn apply_h<S: Scalar>(&self, u: &[S]) -> Vec<S> {
        let mut y: Vec<S> = self
            .potential
            .iter()
            .zip(u)
            .map(|(p, v)| S::from_f64(*p) * *v)
            .collect();
        for &(i, j, c) in &self.faces {
            let flux = S::from_f64(c) * (u[i] - u[j]);
            y[i] += flux;
            y[j] -= flux;
        }
        y
    }

    pub fn apply_mass<S: Scalar>(&self, u: &[S]) -> Vec<S> {
        self.mass.iter().zip(u).map(|(m, v)| S::from_f64(*m) * *v).collect()
    }

    /// `uᴴHu` computed face by face, as the discrete quadratic form.
    pub fn quadratic_form<S: Scalar>(&self, u: &[S]) -> f64 {
        let faces: f64 = self
            .faces
            .iter()
            .map(|&(i, j, c)| c * (u[i] - u[j]).modulus().powi(2))
            .sum();
        let pot: f64 = self
            .potential
            .iter()
            .zip(u)
            .map(|(p, v)| p * v.modulus().powi(2))
            .sum();
        faces + pot
    }

    pub fn mass_norm2<S: Scalar>(&self, u: &[S]) -> f64 {
        weighted_dot(u, &self.mass, u).re()
    }

    /// Band matrix `αH + βM + γG`.
    pub fn band<S: Scalar>(&self, alpha: S, beta: S, gamma: S) -> BandMatrix<S> {
        let bw = self.bandwidth();
        let mut b = BandMatrix::new(self.len(), bw, bw);
        for (k, ((p, m), g)) in self.potential.iter().zip(&self.mass).zip(&self.gyro).enumerate() {
            b.add(
                k,
                k,
                alpha * S::from_f64(*p) + beta * S::from_f64(*m) + gamma * S::from_f64(*g),
            );
        }
        for &(i, j, c) in &self.faces {
            let c = alpha * S::from_f64(c);
            b.add(i, i, c);
            b.add(j, j, c);
            b.add(i, j, -c);
            b.add(j, i, -c);
        }
        b
    }

    pub fn dense_h(&self) -> Mat<f64> {
        let n = self.len();
        let mut h = Mat::<f64>::zeros(n, n);
        for (k, p) in self.potential.iter().enumerate() {
            h[(k, k)] += p;
        }
        for &(i, j, c) in &self.faces {
            h[(i, i)] += c;
            h[(j, j)] += c;
            h[(i, j)] -= c;
            h[(j, i)] -= c;
        }
        h
    }

    /// `M^{-1/2} H M^{-1/2}`.
    pub fn dense_scaled_h(&self) -> Mat<f64> {
        let h = self.dense_h();
        let s: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        Mat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * s[i] * s[j])
    }

    pub fn ones<S: Scalar>(&self) -> Vec<S> {
        vec![S::from_f64(1.0); self.len()]
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// Lowest eigenpairs, M_A-orthonormal.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// ‖Hψ − λMψ‖ / ‖Mψ‖.
    pub residuals: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EigenMethod {
    /// Dense below [`DENSE_LIMIT`] unknowns, shift-invert above.
    Auto,
    Dense,
    ShiftInvert,
}

pub const DENSE_LIMIT: usize = 10_000;
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

pub fn solve_spectrum(ops: &OperatorPair, count: usize) -> Result<Spectrum, SlabError> {
    solve_spectrum_with(ops, count, EigenMethod::Auto, DEFAULT_EIGEN_TOL)
}

pub fn solve_spectrum_with(
    ops: &OperatorPair,
    count: usize,
    method: EigenMethod,
    tol: f64,
) -> Result<Spectrum, SlabError> {
    if ops.m != 0 {
        return Err(SlabError::WrongMode(ops.m));
    }
    let n = ops.len();
    let count = count.clamp(1, n);
    let dense = match method {
        EigenMethod::Dense => true,
        EigenMethod::ShiftInvert => false,
        EigenMethod::Auto => n < DENSE_LIMIT,
    };
    let (values, vectors) = if dense {
        let (vals, u) = symmetric_eigen(&ops.dense_scaled_h())?;
        let s: Vec<f64> = ops.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let vecs = (0..count)
            .map(|c| (0..n).map(|k| u[(k, c)] * s[k]).collect())
            .collect();
        (vals[..count].to_vec(), vecs)
    } else {
        // shift by a fraction of the mean diagonal ratio so the pencil is definite
        let shift = 1e-2 * ops.total_mass().recip() * ops.faces.iter().map(|f| f.2).sum::<f64>();
        let lu = ops.band(1.0, shift, 0.0).factor()?;
        let apply = |v: &[f64]| ops.apply_h(v);
        shift_invert_lanczos(&apply, &lu, shift, &ops.mass, count, tol, 17)?
    };
    let mut pairs: Vec<(f64, Vec<f64>)> = values.into_iter().zip(vectors).collect();
    canonicalize(&mut pairs);
    let residuals = pairs
        .iter()
        .map(|(lam, v)| {
            let hv = ops.apply_h(v);
            let mv = ops.apply_mass(v);
            let r: Vec<f64> = hv.iter().zip(&mv).map(|(a, b)| a - lam * b).collect();
            linalg::norm2(&r) / linalg::norm2(&mv)
        })
        .collect::<Vec<_>>();
    if let Some(bad) = residuals.iter().find(|&&r| !(r <= tol.max(1e-9))) {
        return Err(SlabError::SolverFailure(format!("eigen residual {bad:e}")));
    }
    let (values, vectors) = pairs.into_iter().unzip();
    Ok(Spectrum {
        values,
        vectors,
        residuals,
    })
}

/// Orders by value, then inside clusters of equal values by the index of
/// the dominant node; signs fixed so the dominant entry is positive.
fn canonicalize(pairs: &mut [(f64, Vec<f64>)]) {
    let dominant = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold((0usize, 0.0f64), |(bi, bv), (i, x)| {
                if x.abs() > bv + 1e-12 * bv {
                    (i, x.abs())
                } else {
                    (bi, bv)
                }
            })
            .0
    };
    for (_, v) in pairs.iter_mut() {
        let d = dominant(v);
        if v[d] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = pairs.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[end].0 - pairs[start].0).abs() <= 1e-8 * scale {
            end += 1;
        }
        pairs[start..end].sort_by_key(|p| dominant(&p.1));
        start = end;
    }
}

/// Second-order Richardson extrapolation from spacings h and h/2.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// A-weighted mean ⟨f, 1⟩_A / ⟨1, 1⟩_A.
pub fn weighted_mean<S: Scalar>(ops: &OperatorPair, f: &[S]) -> S {
    let s = f
        .iter()
        .zip(&ops.mass)
        .fold(S::zero(), |acc, (v, m)| acc + S::from_f64(*m) * *v);
    s / S::from_f64(ops.total_mass())
}

/// Π₀f: the A-weighted mean times the constant vector.
pub fn project_constant<S: Scalar>(ops: &OperatorPair, f: &[S]) -> Vec<S> {
    vec![weighted_mean(ops, f); f.len()]
}

#[derive(Clone, Debug, Serialize)]
pub struct LaurentSample {
    pub sigma: f64,
    /// ‖σ²u − (−Π₀f)‖ / ‖Π₀f‖ in the M_A norm (0 when Π₀f = 0).
    pub pole_error: f64,
    /// M_A norm of the regular part u + σ⁻²Π₀f.
    pub remainder_norm: f64,
    pub fitted_pole_mean: f64,
    /// Exact ⟨(H − σ²M_A)1, 1⟩ from the stored floating entries.
    pub schur: BigRational,
    /// −σ²⟨M_A1, 1⟩ in exact arithmetic.
    pub schur_expected: BigRational,
}

#[derive(Clone, Debug, Serialize)]
pub struct LaurentFit {
    pub expected_pole_mean: f64,
    pub samples: Vec<LaurentSample>,
    /// Least-squares slope of log(pole_error) against log(σ).
    pub rate: Option<f64>,
    pub remainders: Vec<Vec<f64>>,
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

/// Solves (H − σ²M_A)u = M_A f for each σ and separates the double pole.
pub fn resolvent_laurent_probe(
    ops: &OperatorPair,
    eigenvalues: &[f64],
    f: &[f64],
    sigmas: &[f64],
) -> Result<LaurentFit, SlabError> {
    if ops.m != 0 {
        return Err(SlabError::WrongMode(ops.m));
    }
    let lambda1 = eigenvalues
        .iter()
        .cloned()
        .filter(|&l| l > 1e-8 * eigenvalues.last().copied().unwrap_or(1.0).abs())
        .fold(f64::INFINITY, f64::min);
    let limit = lambda1.sqrt() / 2.0;
    let pole = weighted_mean(ops, f);
    let mf = ops.apply_mass(f);
    let mut samples = Vec::new();
    let mut remainders = Vec::new();
    for &sigma in sigmas {
        if !(sigma != 0.0 && sigma.abs() < limit) {
            return Err(SlabError::SigmaOutOfRange { sigma, limit });
        }
        let s2 = sigma * sigma;
        if let Some(&l) = eigenvalues
            .iter()
            .find(|&&l| l > 0.0 && (s2 - l).abs() < 0.1 * l)
        {
            return Err(SlabError::NearResonance { sigma2: s2, lambda: l });
        }
        let lu = ops.band(1.0, -s2, 0.0).factor()?;
        let u = lu.solve(&mf)?;
        // regular part from the deflated right-hand side M(f − Π₀f); since
        // H1 = 0 this equals u + Π₀f/σ² without the 1/σ² cancellation
        let deflated: Vec<f64> = f.iter().zip(&ops.mass).map(|(v, m)| m * (v - pole)).collect();
        let rem = lu.solve(&deflated)?;
        let remainder_norm = ops.mass_norm2(&rem).sqrt();
        let fitted: Vec<f64> = u.iter().map(|v| s2 * v).collect();
        let fitted_pole_mean = weighted_mean(ops, &fitted);
        let diff: Vec<f64> = fitted.iter().map(|v| v + pole).collect();
        let pole_norm = pole.abs() * ops.total_mass().sqrt();
        let pole_error = if pole_norm > 0.0 {
            ops.mass_norm2(&diff).sqrt() / pole_norm
        } else {
            0.0
        };
        // exact Schur scalar from the stored entries; H1 enters through the
        // flux operator, whose face differences of a constant are exactly zero
        let h1 = ops.apply_h(&ops.ones::<f64>());
        let s2e = exact(s2);
        let mass_sum = ops.mass.iter().fold(BigRational::zero(), |acc, m| acc + exact(*m));
        let schur = h1.iter().fold(BigRational::zero(), |acc, v| acc + exact(*v)) - &s2e * &mass_sum;
        let schur_expected = -(s2e * mass_sum);
        samples.push(LaurentSample {
            sigma,
            pole_error,
            remainder_norm,
            fitted_pole_mean,
            schur,
            schur_expected,
        });
        remainders.push(rem);
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.pole_error > 0.0)
        .map(|s| (s.sigma.abs().ln(), s.pole_error.ln()))
        .collect();
    let rate = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(LaurentFit {
        expected_pole_mean: -pole,
        samples,
        rate,
        remainders,
    })
}

/// Spectral-expansion remainder Σ_{j≥1} ⟨f,ψ_j⟩/(λ_j − σ²) ψ_j, the
/// reference for the regular part of the resolvent.
pub fn spectral_remainder(ops: &OperatorPair, spec: &Spectrum, f: &[f64], sigma: f64) -> Vec<f64> {
    let s2 = sigma * sigma;
    let mut out = vec![0.0; f.len()];
    for (lam, psi) in spec.values.iter().zip(&spec.vectors).skip(1) {
        let c = weighted_dot(psi, &ops.mass, f) / (lam - s2);
        out.iter_mut().zip(psi).for_each(|(o, p)| *o += c * p);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SemisimpleCheck {
    pub sigma: f64,
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PencilReport {
    pub m: i32,
    #[serde(skip)]
    pub eigenvalues: Vec<Complex64>,
    pub max_imag: f64,
    pub max_abs_imag: f64,
    pub spectral_radius: f64,
    /// m = 0 only: nullities of the first-order generator and its square.
    pub kernel_g: Option<usize>,
    pub kernel_g2: Option<usize>,
    /// m = 0 only: G(0, 1) = (1, 0) holds exactly.
    pub generator_maps_constant: Option<bool>,
    pub semisimple: Vec<SemisimpleCheck>,
}

/// Householder complement of `e` (unit): columns 1.. of I − 2vvᵀ.
fn complement_basis(e: &[f64]) -> Mat<f64> {
    let n = e.len();
    let sign = if e[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = e.to_vec();
    v[0] += sign;
    let nv = linalg::norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    Mat::from_fn(n, n - 1, |i, j| {
        let c = j + 1;
        (if i == c { 1.0 } else { 0.0 }) - 2.0 * v[i] * v[c]
    })
}

/// Companion linearization of σ²M_A + 2mσG_B − H in M_A^{1/2}-scaled
/// variables. For m = 0 the constant is deflated first: the threshold block
/// at σ = 0 is reported through the generator nullities instead.
pub fn pencil_mode_scan(ops: &OperatorPair) -> Result<PencilReport, SlabError> {
    let n = ops.len();
    let m = ops.m;
    let hs = ops.dense_scaled_h();
    let gs: Vec<f64> = ops.gyro.iter().zip(&ops.mass).map(|(g, w)| g / w).collect();
    let (hc, gc, dim) = if m == 0 {
        let e: Vec<f64> = ops.mass.iter().map(|w| w.sqrt()).collect();
        let ne = linalg::norm2(&e);
        let e: Vec<f64> = e.iter().map(|v| v / ne).collect();
        let q = complement_basis(&e);
        let hc = q.transpose() * &hs * &q;
        (hc, Mat::<f64>::zeros(n - 1, n - 1), n - 1)
    } else {
        let g = Mat::from_fn(n, n, |i, j| if i == j { gs[i] } else { 0.0 });
        (hs.clone(), g, n)
    };
    let mf = m as f64;
    let companion = Mat::from_fn(2 * dim, 2 * dim, |i, j| {
        match (i < dim, j < dim) {
            (true, true) => 0.0,
            (true, false) => {
                if j - dim == i {
                    1.0
                } else {
                    0.0
                }
            }
            (false, true) => hc[(i - dim, j)],
            (false, false) => -2.0 * mf * gc[(i - dim, j - dim)],
        }
    });
    let mut eigenvalues = general_eigenvalues(&companion)?;
    let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_imag = eigenvalues.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    let max_abs_imag = eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max);

    let mut semisimple = Vec::new();
    let (mut kernel_g, mut kernel_g2, mut maps_constant) = (None, None, None);
    if m == 0 {
        let generator = Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, false) => {
                if j - n == i {
                    1.0
                } else {
                    0.0
                }
            }
            (false, true) => -hs[(i - n, j)],
            _ => 0.0,
        });
        kernel_g = Some(nullity(&generator, 1e-10)?);
        kernel_g2 = Some(nullity(&(&generator * &generator), 1e-10)?);
        // G(u, v) = (v, −M⁻¹Hu): G(0, 1) = (1, 0) and G(1, 0) = 0
        let from_rate = ops.apply_h(&vec![0.0; n]);
        let from_const = ops.apply_h(&ops.ones::<f64>());
        maps_constant = Some(
            from_rate.iter().all(|&v| v == 0.0) && from_const.iter().all(|&v| v == 0.0),
        );

        let mut positive: Vec<f64> = eigenvalues.iter().filter(|z| z.re > 1e-8 * spectral_radius).map(|z| z.re).collect();
        positive.sort_by(|a, b| a.total_cmp(b));
        positive.dedup_by(|a, b| (*a - *b).abs() <= 1e-8 * spectral_radius);
        for &s in positive.iter().take(5) {
            let algebraic = eigenvalues
                .iter()
                .filter(|z| (z.re - s).abs() <= 1e-8 * spectral_radius && z.im.abs() <= 1e-8 * spectral_radius)
                .count();
            let shifted = Mat::from_fn(2 * dim, 2 * dim, |i, j| {
                companion[(i, j)] - if i == j { s } else { 0.0 }
            });
            let geometric = nullity(&shifted, 1e-10)?;
            semisimple.push(SemisimpleCheck {
                sigma: s,
                algebraic,
                geometric,
            });
        }
        eigenvalues.push(Complex64::new(0.0, 0.0));
        eigenvalues.push(Complex64::new(0.0, 0.0));
    }
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(PencilReport {
        m,
        eigenvalues,
        max_imag,
        max_abs_imag,
        spectral_radius,
        kernel_g,
        kernel_g2,
        generator_maps_constant: maps_constant,
        semisimple,
    })
}

/// Reference for the pencil: with K = Ĥ^{1/2} the linearization
/// [[0, K], [K, −2mĜ]] is symmetric, so its eigenvalues are the mode
/// frequencies and are real by construction.
pub fn pencil_reference(ops: &OperatorPair) -> Result<Vec<f64>, SlabError> {
    let n = ops.len();
    let (vals, u) = symmetric_eigen(&ops.dense_scaled_h())?;
    let k = Mat::from_fn(n, n, |i, j| {
        (0..n).map(|c| u[(i, c)] * vals[c].max(0.0).sqrt() * u[(j, c)]).sum::<f64>()
    });
    let mf = ops.m as f64;
    let big = Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => 0.0,
        (true, false) => k[(i, j - n)],
        (false, true) => k[(i - n, j)],
        (false, false) => {
            if i == j {
                -2.0 * mf * ops.gyro[i - n] / ops.mass[i - n]
            } else {
                0.0
            }
        }
    });
    Ok(symmetric_eigen(&big)?.0)
}

/// H1 = 0 with exact zeros.
pub fn constant_in_kernel(ops: &OperatorPair) -> bool {
    ops.apply_h(&ops.ones::<f64>()).iter().all(|v| *v == 0.0)
}
