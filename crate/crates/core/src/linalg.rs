//! Band LU with partial pivoting, dense helpers on top of faer, and a
//! shift-invert Lanczos iteration for the low end of a symmetric pencil.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinAlgError {
    #[error("matrix is singular at pivot {0}")]
    Singular(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),
}

/// Field operations needed by the band solver and the flux operators.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + PartialEq
{
    fn zero() -> Self;
    fn from_f64(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
    fn re(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
}

/// Hermitian inner product `Σ conj(a_i) w_i b_i` with real weights.
pub fn weighted_dot<S: Scalar>(a: &[S], w: &[f64], b: &[S]) -> S {
    a.iter()
        .zip(w)
        .zip(b)
        .fold(S::zero(), |acc, ((x, wi), y)| acc + x.conj() * S::from_f64(*wi) * *y)
}

pub fn norm2<S: Scalar>(a: &[S]) -> f64 {
    a.iter().map(|x| x.modulus().powi(2)).sum::<f64>().sqrt()
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals. Storage keeps
/// `kl` extra super-diagonals for pivoting fill.
#[derive(Clone, Debug)]
pub struct BandMatrix<S> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<S>,
}

impl<S: Scalar> BandMatrix<S> {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![S::zero(); n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn add(&mut self, i: usize, j: usize, v: S) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside the band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            S::zero()
        }
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).fold(S::zero(), |acc, j| acc + self.get(i, j) * x[j])
            })
            .collect()
    }

    /// LU factorization with row partial pivoting.
    pub fn factor(mut self) -> Result<BandLu<S>, LinAlgError> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let reach = kl + ku;
        let mut piv = vec![0usize; n];
        let scale = self.data.iter().map(|v| v.modulus()).fold(0.0, f64::max);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].modulus();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].modulus();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || best <= f64::EPSILON * 1e-3 * scale {
                return Err(LinAlgError::Singular(k));
            }
            piv[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                if self.data[ik] == S::zero() {
                    continue;
                }
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                for j in k + 1..=last_col {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

/// Factored band matrix.
#[derive(Clone, Debug)]
pub struct BandLu<S> {
    m: BandMatrix<S>,
    piv: Vec<usize>,
}

impl<S: Scalar> BandLu<S> {
    pub fn n(&self) -> usize {
        self.m.n
    }

    pub fn solve_in_place(&self, b: &mut [S]) -> Result<(), LinAlgError> {
        let m = &self.m;
        let n = m.n;
        if b.len() != n {
            return Err(LinAlgError::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + m.kl).min(n - 1) {
                b[i] -= m.data[m.idx(i, k)] * bk;
            }
        }
        let reach = m.kl + m.ku;
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s -= m.data[m.idx(k, j)] * b[j];
            }
            b[k] = s / m.data[m.idx(k, k)];
        }
        Ok(())
    }

    pub fn solve(&self, b: &[S]) -> Result<Vec<S>, LinAlgError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

/// Eigenpairs of a real symmetric dense matrix, ascending.
pub fn symmetric_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>), LinAlgError> {
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| LinAlgError::NoConvergence(format!("{e:?}")))?;
    let vals = (0..a.nrows()).map(|i| e.S()[i]).collect();
    Ok((vals, e.U().to_owned()))
}

/// Eigenvalues of a general real dense matrix.
pub fn general_eigenvalues(a: &Mat<f64>) -> Result<Vec<Complex64>, LinAlgError> {
    let ev = a
        .eigenvalues()
        .map_err(|e| LinAlgError::NoConvergence(format!("{e:?}")))?;
    Ok(ev.into_iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

pub fn singular_values(a: &Mat<f64>) -> Result<Vec<f64>, LinAlgError> {
    a.singular_values()
        .map_err(|e| LinAlgError::NoConvergence(format!("{e:?}")))
}

/// Numerical nullity: singular values at or below `rel_tol·σ_max`.
pub fn nullity(a: &Mat<f64>, rel_tol: f64) -> Result<usize, LinAlgError> {
    let s = singular_values(a)?;
    let top = s.iter().cloned().fold(0.0, f64::max);
    Ok(s.iter().filter(|&&v| v <= rel_tol * top).count())
}

/// Lowest eigenpairs of `K ψ = λ W ψ` with `W` a positive diagonal, through
/// Lanczos on `(K + sW)⁻¹W` in the W-inner product with full
/// reorthogonalization. `apply` computes `Kv`; `shifted` is the factored
/// `K + sW`.
pub fn shift_invert_lanczos(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    shifted: &BandLu<f64>,
    shift: f64,
    w: &[f64],
    count: usize,
    tol: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), LinAlgError> {
    let n = w.len();
    let mut dim = (2 * count + 30).min(n);
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut q0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nq = weighted_dot(&q0, w, &q0).sqrt();
        q0.iter_mut().for_each(|v| *v /= nq);
        let mut basis: Vec<Vec<f64>> = vec![q0];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..dim {
            let wq: Vec<f64> = basis[j].iter().zip(w).map(|(a, b)| a * b).collect();
            let mut z = shifted.solve(&wq)?;
            let a = weighted_dot(&basis[j], w, &z);
            alpha.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c = weighted_dot(q, w, &z);
                    z.iter_mut().zip(q).for_each(|(zi, qi)| *zi -= c * qi);
                }
            }
            let b = weighted_dot(&z, w, &z).sqrt();
            if j + 1 == dim || b < 1e-14 {
                break;
            }
            beta.push(b);
            basis.push(z.into_iter().map(|v| v / b).collect());
        }
        let k = alpha.len();
        let t = Mat::<f64>::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let (theta, y) = symmetric_eigen(&t)?;
        // largest θ = 1/(λ + s) first
        let mut vals = Vec::new();
        let mut vecs = Vec::new();
        let mut ok = true;
        for idx in (0..k).rev().take(count.min(k)) {
            let lam = 1.0 / theta[idx] - shift;
            let mut v = vec![0.0; n];
            for (c, q) in basis.iter().enumerate().take(k) {
                let coef = y[(c, idx)];
                v.iter_mut().zip(q).for_each(|(vi, qi)| *vi += coef * qi);
            }
            let nv = weighted_dot(&v, w, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= nv);
            let kv = apply(&v);
            let res: Vec<f64> = kv
                .iter()
                .zip(&v)
                .zip(w)
                .map(|((a, b), wi)| a - lam * wi * b)
                .collect();
            let wv: Vec<f64> = v.iter().zip(w).map(|(a, b)| a * b).collect();
            let scale = norm2(&wv) * lam.abs().max(1.0);
            if norm2(&res) > tol * scale {
                ok = false;
            }
            vals.push(lam);
            vecs.push(v);
        }
        if ok || dim >= n {
            if !ok {
                return Err(LinAlgError::NoConvergence(format!(
                    "Lanczos residuals above {tol} at full dimension"
                )));
            }
            return Ok((vals, vecs));
        }
        dim = (dim * 2).min(n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> BandMatrix<f64> {
        let mut b = BandMatrix::new(n, 1, 1);
        for i in 0..n {
            b.add(i, i, 2.0 + i as f64 * 0.01);
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
                b.add(i + 1, i, -0.5);
            }
        }
        b
    }

    #[test]
    fn band_lu_solves() {
        let b = tridiag(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let rhs = b.matvec(&x);
        let lu = b.factor().unwrap();
        let y = lu.solve(&rhs).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn band_lu_pivots() {
        // zero leading diagonal forces a row swap
        let mut b = BandMatrix::new(3, 1, 1);
        b.add(0, 1, 1.0);
        b.add(1, 0, 1.0);
        b.add(1, 2, 2.0);
        b.add(2, 1, 3.0);
        b.add(2, 2, 1.0);
        let x = [1.0, -2.0, 0.5];
        let rhs = b.matvec(&x);
        let y = b.factor().unwrap().solve(&rhs).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_band_solve() {
        let n = 20;
        let mut b = BandMatrix::<Complex64>::new(n, 2, 2);
        for i in 0..n {
            b.add(i, i, Complex64::new(3.0, 0.5));
            if i + 2 < n {
                b.add(i, i + 2, Complex64::new(0.0, 1.0));
                b.add(i + 2, i, Complex64::new(-1.0, 0.2));
            }
        }
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let rhs = b.matvec(&x);
        let y = b.factor().unwrap().solve(&rhs).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_band_detected() {
        let b = BandMatrix::<f64>::new(3, 1, 1);
        assert!(matches!(b.factor(), Err(LinAlgError::Singular(0))));
    }
}
