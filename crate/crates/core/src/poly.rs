//! Sparse multivariate polynomials over the rationals and rational functions
//! whose denominators are products of powers of ρ², Δ_r and Δ_x.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rustc_hash::FxHashMap;

/// Number of ring variables.
pub const NVARS: usize = 11;

/// Ring variables: the background parameters followed by the two coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    A = 0,
    K,
    Lambda,
    M,
    C1,
    C2,
    C3,
    C4,
    C5,
    R,
    X,
}

impl Var {
    pub const ALL: [Var; NVARS] = [
        Var::A,
        Var::K,
        Var::Lambda,
        Var::M,
        Var::C1,
        Var::C2,
        Var::C3,
        Var::C4,
        Var::C5,
        Var::R,
        Var::X,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Var::A => "a",
            Var::K => "k",
            Var::Lambda => "Lambda",
            Var::M => "M",
            Var::C1 => "C1",
            Var::C2 => "C2",
            Var::C3 => "C3",
            Var::C4 => "C4",
            Var::C5 => "C5",
            Var::R => "r",
            Var::X => "x",
        }
    }
}

const HIGH_BITS: u128 = {
    let mut m = 0u128;
    let mut i = 0;
    while i < NVARS {
        m |= 0x80u128 << (8 * i);
        i += 1;
    }
    m
};

/// Exponent vector packed one byte per variable. Integer order on the packed
/// word is a lexicographic monomial order with `x` most significant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono(u128);

impl Mono {
    pub const ONE: Mono = Mono(0);

    pub fn var(v: Var, e: u8) -> Mono {
        assert!(e < 0x80, "exponent {e} out of range");
        Mono((e as u128) << (8 * v as usize))
    }

    pub fn from_exps(exps: &[u8; NVARS]) -> Mono {
        exps.iter()
            .enumerate()
            .fold(Mono::ONE, |m, (i, &e)| m.mul(Mono::var(Var::ALL[i], e)))
    }

    pub fn exp(self, v: Var) -> u8 {
        (self.0 >> (8 * v as usize)) as u8
    }

    pub fn exps(self) -> [u8; NVARS] {
        let mut out = [0u8; NVARS];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (self.0 >> (8 * i)) as u8;
        }
        out
    }

    pub fn degree(self) -> u32 {
        self.exps().iter().map(|&e| e as u32).sum()
    }

    #[inline]
    pub fn mul(self, o: Mono) -> Mono {
        let s = self.0 + o.0;
        assert!(s & HIGH_BITS == 0, "exponent overflow in monomial product");
        Mono(s)
    }

    /// `self / o` when `o` divides `self`.
    pub fn checked_div(self, o: Mono) -> Option<Mono> {
        let (a, b) = (self.exps(), o.exps());
        if a.iter().zip(b.iter()).all(|(x, y)| x >= y) {
            Some(Mono(self.0 - o.0))
        } else {
            None
        }
    }

    fn lower(self, v: Var) -> Mono {
        Mono(self.0 - (1u128 << (8 * v as usize)))
    }
}

impl fmt::Display for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in Var::ALL {
            let e = self.exp(v);
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{}", v.name())?;
            } else {
                write!(f, "{}^{}", v.name(), e)?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Sparse polynomial: terms sorted by monomial, no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparsePoly {
    terms: Vec<(Mono, BigRational)>,
}

impl SparsePoly {
    pub fn zero() -> Self {
        SparsePoly { terms: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            SparsePoly {
                terms: vec![(Mono::ONE, c)],
            }
        }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Self::constant(BigRational::from_integer(n.into()))
    }

    pub fn var(v: Var) -> Self {
        Self::monomial(Mono::var(v, 1), BigRational::one())
    }

    pub fn monomial(m: Mono, c: BigRational) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            SparsePoly { terms: vec![(m, c)] }
        }
    }

    /// Builds a polynomial from arbitrary (possibly repeated, possibly zero) terms.
    pub fn from_terms(terms: impl IntoIterator<Item = (Mono, BigRational)>) -> Self {
        let mut map: BTreeMap<Mono, BigRational> = BTreeMap::new();
        for (m, c) in terms {
            *map.entry(m).or_insert_with(BigRational::zero) += c;
        }
        SparsePoly {
            terms: map.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn terms(&self) -> &[(Mono, BigRational)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.iter().map(|(m, _)| m.exp(v) as u32).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn leading(&self) -> Option<&(Mono, BigRational)> {
        self.terms.last()
    }

    pub fn neg(&self) -> Self {
        SparsePoly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        SparsePoly {
            terms: self.terms.iter().map(|(m, c)| (*m, c * s)).collect(),
        }
    }

    pub fn mul_mono(&self, m: Mono, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        SparsePoly {
            terms: self.terms.iter().map(|(mm, cc)| (mm.mul(m), cc * c)).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.combine(o, false)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.combine(o, true)
    }

    fn combine(&self, o: &Self, negate: bool) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < o.terms.len() {
            let take_left = j >= o.terms.len()
                || (i < self.terms.len() && self.terms[i].0 < o.terms[j].0);
            let take_right = i >= self.terms.len()
                || (j < o.terms.len() && o.terms[j].0 < self.terms[i].0);
            if take_left {
                out.push(self.terms[i].clone());
                i += 1;
            } else if take_right {
                let (m, c) = &o.terms[j];
                out.push((*m, if negate { -c } else { c.clone() }));
                j += 1;
            } else {
                let c = if negate {
                    &self.terms[i].1 - &o.terms[j].1
                } else {
                    &self.terms[i].1 + &o.terms[j].1
                };
                if !c.is_zero() {
                    out.push((self.terms[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        SparsePoly { terms: out }
    }

    /// Clears denominators: returns `(L, n)` with `self = n / L` termwise.
    fn integer_form(&self) -> (BigInt, Vec<(Mono, BigInt)>) {
        let l = self
            .terms
            .iter()
            .fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()));
        let ints = self
            .terms
            .iter()
            .map(|(m, c)| (*m, c.numer() * (&l / c.denom())))
            .collect();
        (l, ints)
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        if self.terms.len() == 1 {
            let (m, c) = &self.terms[0];
            return o.mul_mono(*m, c);
        }
        if o.terms.len() == 1 {
            let (m, c) = &o.terms[0];
            return self.mul_mono(*m, c);
        }
        let (la, a) = self.integer_form();
        let (lb, b) = o.integer_form();
        let mut acc: FxHashMap<Mono, BigInt> = FxHashMap::default();
        acc.reserve((a.len() * b.len()).min(1 << 22));
        for (ma, ca) in &a {
            for (mb, cb) in &b {
                let e = acc.entry(ma.mul(*mb)).or_insert_with(BigInt::zero);
                *e += ca * cb;
            }
        }
        let den = la * lb;
        let mut terms: Vec<(Mono, BigRational)> = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| (m, BigRational::new(c, den.clone())))
            .collect();
        terms.sort_unstable_by(|x, y| x.0.cmp(&y.0));
        SparsePoly { terms }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                out = out.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    pub fn diff(&self, v: Var) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.exp(v) > 0)
            .map(|(m, c)| (m.lower(v), c * BigRational::from_integer(m.exp(v).into())))
            .collect::<Vec<_>>();
        // lowering one exponent preserves the lexicographic order
        SparsePoly { terms }
    }

    /// Substitutes exact values for some variables, leaving the rest symbolic.
    pub fn subs(&self, vals: &[(Var, BigRational)]) -> Self {
        let mut pows: Vec<(Var, Vec<BigRational>)> = vals
            .iter()
            .map(|(v, x)| {
                let d = self.degree_in(*v) as usize;
                let mut p = Vec::with_capacity(d + 1);
                p.push(BigRational::one());
                for i in 0..d {
                    let next = &p[i] * x;
                    p.push(next);
                }
                (*v, p)
            })
            .collect();
        pows.sort_by_key(|(v, _)| *v);
        Self::from_terms(self.terms.iter().map(|(m, c)| {
            let mut c = c.clone();
            let mut mm = *m;
            for (v, p) in &pows {
                let e = m.exp(*v);
                if e > 0 {
                    c *= &p[e as usize];
                    mm = Mono(mm.0 - ((e as u128) << (8 * *v as usize)));
                }
            }
            (mm, c)
        }))
    }

    /// Evaluates with every variable assigned (indexed by `Var as usize`).
    pub fn eval(&self, point: &[BigRational; NVARS]) -> BigRational {
        let mut cache: Vec<Vec<BigRational>> = (0..NVARS)
            .map(|_| vec![BigRational::one()])
            .collect();
        let mut sum = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, e) in m.exps().iter().enumerate() {
                let e = *e as usize;
                if e == 0 {
                    continue;
                }
                while cache[i].len() <= e {
                    let next = cache[i].last().unwrap() * &point[i];
                    cache[i].push(next);
                }
                t *= &cache[i][e];
            }
            sum += t;
        }
        sum
    }

    pub fn eval_f64(&self, point: &[f64; NVARS]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut t = c.to_f64().unwrap_or(f64::NAN);
                for (i, e) in m.exps().iter().enumerate() {
                    if *e > 0 {
                        t *= point[i].powi(*e as i32);
                    }
                }
                t
            })
            .sum()
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    ///
    /// Any monomial order works: if `d` divides `p` then the leading term of
    /// `d` divides the leading term of `p`.
    pub fn exact_div(&self, d: &Self) -> Option<Self> {
        let (lm, lc) = d.leading()?.clone();
        let mut rem: BTreeMap<Mono, BigRational> = self.terms.iter().cloned().collect();
        let mut quot = Vec::new();
        while let Some((&m, c)) = rem.iter().next_back() {
            let qm = m.checked_div(lm)?;
            let qc = c / &lc;
            for (dm, dc) in &d.terms {
                let key = dm.mul(qm);
                let v = rem.entry(key).or_insert_with(BigRational::zero);
                *v -= dc * &qc;
                if v.is_zero() {
                    rem.remove(&key);
                }
            }
            quot.push((qm, qc));
        }
        quot.reverse();
        Some(SparsePoly { terms: quot })
    }

    pub fn max_abs_coeff(&self) -> BigRational {
        self.terms
            .iter()
            .map(|(_, c)| c.abs())
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})*{m}")?;
        }
        Ok(())
    }
}

/// Index of a structured denominator factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Rho2 = 0,
    DeltaR = 1,
    DeltaX = 2,
}

/// Quotient `num / (ρ²)^p0 (Δ_r)^p1 (Δ_x)^p2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFun {
    pub num: SparsePoly,
    pub den: [u32; 3],
}

impl RatFun {
    pub fn poly(num: SparsePoly) -> Self {
        RatFun { num, den: [0; 3] }
    }

    pub fn new(num: SparsePoly, den: [u32; 3]) -> Self {
        RatFun { num, den }
    }

    pub fn zero() -> Self {
        Self::poly(SparsePoly::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn neg(&self) -> Self {
        RatFun {
            num: self.num.neg(),
            den: self.den,
        }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        RatFun {
            num: self.num.scale(s),
            den: self.den,
        }
    }
}

/// The three structured denominator polynomials, their first derivatives in
/// `r` and `x`, and a cache of their powers.
pub struct Denominators {
    factors: [SparsePoly; 3],
    derivs: [[SparsePoly; 2]; 3],
    powers: Mutex<Vec<Vec<Arc<SparsePoly>>>>,
}

impl Denominators {
    pub fn new(rho2: SparsePoly, delta_r: SparsePoly, delta_x: SparsePoly) -> Self {
        let factors = [rho2, delta_r, delta_x];
        let derivs = [0, 1, 2].map(|i| [factors[i].diff(Var::R), factors[i].diff(Var::X)]);
        Denominators {
            factors,
            derivs,
            powers: Mutex::new(vec![vec![Arc::new(SparsePoly::one())]; 3]),
        }
    }

    pub fn factor(&self, f: Factor) -> &SparsePoly {
        &self.factors[f as usize]
    }

    pub fn power(&self, i: usize, n: u32) -> Arc<SparsePoly> {
        let mut cache = self.powers.lock().expect("power cache poisoned");
        while cache[i].len() <= n as usize {
            let next = cache[i].last().unwrap().mul(&self.factors[i]);
            cache[i].push(Arc::new(next));
        }
        cache[i][n as usize].clone()
    }

    /// Numerator of `f` rewritten over the larger denominator `target`.
    pub fn lift(&self, f: &RatFun, target: [u32; 3]) -> SparsePoly {
        let mut num = f.num.clone();
        for i in 0..3 {
            debug_assert!(target[i] >= f.den[i]);
            let gap = target[i] - f.den[i];
            if gap > 0 && !num.is_zero() {
                num = num.mul(&self.power(i, gap));
            }
        }
        num
    }

    pub fn add(&self, f: &RatFun, g: &RatFun) -> RatFun {
        if f.is_zero() {
            return g.clone();
        }
        if g.is_zero() {
            return f.clone();
        }
        let den = [0, 1, 2].map(|i| f.den[i].max(g.den[i]));
        RatFun {
            num: self.lift(f, den).add(&self.lift(g, den)),
            den,
        }
    }

    pub fn sub(&self, f: &RatFun, g: &RatFun) -> RatFun {
        self.add(f, &g.neg())
    }

    pub fn sum<'a>(&self, items: impl IntoIterator<Item = &'a RatFun>) -> RatFun {
        let items: Vec<&RatFun> = items.into_iter().filter(|f| !f.is_zero()).collect();
        let den = [0, 1, 2].map(|i| items.iter().map(|f| f.den[i]).max().unwrap_or(0));
        let num = items
            .iter()
            .fold(SparsePoly::zero(), |acc, f| acc.add(&self.lift(f, den)));
        RatFun { num, den }
    }

    pub fn mul(&self, f: &RatFun, g: &RatFun) -> RatFun {
        if f.is_zero() || g.is_zero() {
            return RatFun::zero();
        }
        RatFun {
            num: f.num.mul(&g.num),
            den: [0, 1, 2].map(|i| f.den[i] + g.den[i]),
        }
    }

    /// Quotient rule over structured denominators. Each denominator power
    /// grows by at most one.
    pub fn diff(&self, f: &RatFun, v: Var) -> RatFun {
        let slot = match v {
            Var::R => 0,
            Var::X => 1,
            _ => panic!("differentiation is only defined in r and x"),
        };
        if f.is_zero() {
            return RatFun::zero();
        }
        let active: Vec<usize> = (0..3)
            .filter(|&i| f.den[i] > 0 && !self.derivs[i][slot].is_zero())
            .collect();
        let prod_except = |skip: Option<usize>| {
            active
                .iter()
                .filter(|&&i| Some(i) != skip)
                .fold(SparsePoly::one(), |acc, &i| acc.mul(&self.factors[i]))
        };
        let mut num = f.num.diff(v).mul(&prod_except(None));
        for &i in &active {
            let p = BigRational::from_integer(f.den[i].into());
            let t = f
                .num
                .mul(&self.derivs[i][slot])
                .mul(&prod_except(Some(i)))
                .scale(&p);
            num = num.sub(&t);
        }
        let mut den = f.den;
        for &i in &active {
            den[i] += 1;
        }
        RatFun { num, den }
    }

    /// Divides out structured factors that divide the numerator exactly.
    pub fn reduce(&self, f: &RatFun) -> RatFun {
        if f.is_zero() {
            return RatFun::zero();
        }
        let mut out = f.clone();
        for i in 0..3 {
            while out.den[i] > 0 {
                match out.num.exact_div(&self.factors[i]) {
                    Some(q) => {
                        out.num = q;
                        out.den[i] -= 1;
                    }
                    None => break,
                }
            }
        }
        out
    }

    /// Exact value at a point, `None` at a zero of a denominator factor.
    pub fn eval(&self, f: &RatFun, point: &[BigRational; NVARS]) -> Option<BigRational> {
        let mut den = BigRational::one();
        for i in 0..3 {
            if f.den[i] > 0 {
                let v = self.factors[i].eval(point);
                if v.is_zero() {
                    return None;
                }
                den *= num_traits::pow(v, f.den[i] as usize);
            }
        }
        Some(f.num.eval(point) / den)
    }
}
