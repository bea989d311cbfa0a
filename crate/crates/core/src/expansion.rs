//! Exact expansions in `eps` of the invariants of the blowup at a fixed
//! point, i.e. of the corner chop of size `t = eps^2`.
//!
//! Exponents are stored in powers of `eps`; every expansion built here is
//! even in `eps`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{Signed, Zero};

use crate::counts::{check_len, ehrhart_fit, fixed_point_cross, fixed_point_data, EhrhartData};
use crate::error::{Error, Result};
use crate::invariants::{gram_schmidt, standard_basis, Moments};
use crate::polytope::{chop_corner, DelzantPolytope};
use crate::rational::{self, factorial, q, qr, Q};

/// A polynomial in `eps` with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EpsPoly {
    terms: BTreeMap<u32, Q>,
}

impl EpsPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Q) -> Self {
        Self::term(0, c)
    }

    pub fn term(exp: u32, c: Q) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(exp, c);
        }
        p
    }

    /// `c t^k` with `t = eps^2`.
    pub fn t_term(k: u32, c: Q) -> Self {
        Self::term(2 * k, c)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Q)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn coeff(&self, exp: u32) -> Q {
        self.terms.get(&exp).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn lowest_order(&self) -> Option<u32> {
        self.terms.keys().next().copied()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().copied()
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero();
        for (e, x) in &self.terms {
            out.insert_add(*e, x * c);
        }
        out
    }

    fn insert_add(&mut self, exp: u32, c: Q) {
        let slot = self.terms.entry(exp).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn eval(&self, eps: &Q) -> Q {
        self.terms.iter().map(|(e, c)| c * num_traits::pow(eps.clone(), *e as usize)).sum()
    }

    pub fn eval_f64(&self, eps: f64) -> f64 {
        self.terms.iter().map(|(e, c)| rational::to_f64(c) * eps.powi(*e as i32)).sum()
    }

    /// Evaluates at `eps^2 = t`; only defined for even polynomials.
    pub fn eval_t(&self, t: &Q) -> Q {
        assert!(self.terms.keys().all(|e| e % 2 == 0), "odd power of eps");
        self.terms.iter().map(|(e, c)| c * num_traits::pow(t.clone(), (*e / 2) as usize)).sum()
    }

    /// Terms of order at most `max`.
    pub fn truncate(&self, max: u32) -> Self {
        Self { terms: self.terms.range(..=max).map(|(e, c)| (*e, c.clone())).collect() }
    }
}

impl Add for &EpsPoly {
    type Output = EpsPoly;
    fn add(self, rhs: &EpsPoly) -> EpsPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert_add(*e, c.clone());
        }
        out
    }
}

impl Sub for &EpsPoly {
    type Output = EpsPoly;
    fn sub(self, rhs: &EpsPoly) -> EpsPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert_add(*e, -c.clone());
        }
        out
    }
}

impl Mul for &EpsPoly {
    type Output = EpsPoly;
    fn mul(self, rhs: &EpsPoly) -> EpsPoly {
        let mut out = EpsPoly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.insert_add(ea + eb, ca * cb);
            }
        }
        out
    }
}

impl Neg for &EpsPoly {
    type Output = EpsPoly;
    fn neg(self) -> EpsPoly {
        self.scale(&q(-1))
    }
}

/// A quotient of polynomials in `eps` whose denominator is nonzero at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsRatio {
    pub num: EpsPoly,
    pub den: EpsPoly,
}

impl EpsRatio {
    pub fn new(num: EpsPoly, den: EpsPoly) -> Self {
        assert!(!den.coeff(0).is_zero(), "denominator vanishes at eps = 0");
        Self { num, den }
    }

    pub fn eval(&self, eps: &Q) -> Result<Q> {
        let d = self.den.eval(eps);
        if d.is_zero() {
            return Err(Error::EpsTooLarge(eps.to_string()));
        }
        Ok(self.num.eval(eps) / d)
    }

    pub fn eval_f64(&self, eps: f64) -> f64 {
        self.num.eval_f64(eps) / self.den.eval_f64(eps)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Order of vanishing at `eps = 0`; `None` for the zero function.
    pub fn lowest_order(&self) -> Option<u32> {
        self.num.lowest_order()
    }

    /// Lowest-order term of the Taylor expansion.
    pub fn leading(&self) -> Option<(u32, Q)> {
        let e = self.num.lowest_order()?;
        Some((e, self.num.coeff(e) / self.den.coeff(0)))
    }

    /// Taylor polynomial through order `max`.
    pub fn series(&self, max: u32) -> EpsPoly {
        let d0 = self.den.coeff(0);
        let mut s: Vec<Q> = Vec::with_capacity(max as usize + 1);
        for k in 0..=max {
            let mut acc = self.num.coeff(k);
            for (j, dj) in self.den.terms() {
                if j == 0 || j > k {
                    continue;
                }
                acc -= dj * &s[(k - j) as usize];
            }
            s.push(acc / &d0);
        }
        let mut out = EpsPoly::zero();
        for (k, c) in s.into_iter().enumerate() {
            out.insert_add(k as u32, c);
        }
        out
    }

    /// Equality as rational functions.
    pub fn same_function(&self, other: &Self) -> bool {
        &self.num * &other.den == &other.num * &self.den
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self { num: self.num.scale(c), den: self.den.clone() }
    }
}

/// The six coefficients of the blowup as polynomials in `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountExpansions {
    pub a0: EpsPoly,
    pub a1: EpsPoly,
    pub b0: EpsPoly,
    pub b1: EpsPoly,
    pub c0: EpsPoly,
    pub d0: EpsPoly,
}

impl CountExpansions {
    pub fn eval_t(&self, t: &Q) -> EhrhartData {
        EhrhartData {
            a0: self.a0.eval_t(t),
            a1: self.a1.eval_t(t),
            b0: self.b0.eval_t(t),
            b1: self.b1.eval_t(t),
            c0: self.c0.eval_t(t),
            d0: self.d0.eval_t(t),
        }
    }

    pub fn named(&self) -> [(&'static str, &EpsPoly); 6] {
        [
            ("a0", &self.a0),
            ("a1", &self.a1),
            ("b0", &self.b0),
            ("b1", &self.b1),
            ("c0", &self.c0),
            ("d0", &self.d0),
        ]
    }
}

/// The corner-chop corrections, as polynomials in `eps`:
/// `alpha = t^n/n!`, `beta = t^(n+1)/(n+1)!`,
/// `gamma = (n-1) t^(n-1) / (2 (n-1)!)`, `delta = (n-2) t^n / (2 n!)`.
#[derive(Debug, Clone)]
struct ChopSeries {
    alpha: EpsPoly,
    beta: EpsPoly,
    gamma: EpsPoly,
    delta: EpsPoly,
    /// `t^(n+2) / (n+2)!`.
    kappa: EpsPoly,
}

impl ChopSeries {
    fn new(n: usize) -> Self {
        let nn = n as u32;
        let ni = n as i64;
        Self {
            alpha: EpsPoly::t_term(nn, q(1) / factorial(n)),
            beta: EpsPoly::t_term(nn + 1, q(1) / factorial(n + 1)),
            gamma: EpsPoly::t_term(nn - 1, q(ni - 1) / (q(2) * factorial(n - 1))),
            delta: EpsPoly::t_term(nn, q(ni - 2) / (q(2) * factorial(n))),
            kappa: EpsPoly::t_term(nn + 2, q(1) / factorial(n + 2)),
        }
    }
}

/// The blowup of a polytope at one of its vertices.
#[derive(Debug, Clone)]
pub struct Blowup<'a> {
    p: &'a DelzantPolytope,
    vertex: usize,
    moments: Moments,
    chop: ChopSeries,
}

impl<'a> Blowup<'a> {
    pub fn new(p: &'a DelzantPolytope, vertex: usize) -> Result<Self> {
        Self::with_moments(p, vertex, Moments::of(p)?)
    }

    pub fn with_moments(p: &'a DelzantPolytope, vertex: usize, moments: Moments) -> Result<Self> {
        p.vertex(vertex)?;
        Ok(Self { p, vertex, moments, chop: ChopSeries::new(p.dim()) })
    }

    pub fn polytope(&self) -> &DelzantPolytope {
        self.p
    }

    pub fn vertex(&self) -> usize {
        self.vertex
    }

    pub fn moments(&self) -> &Moments {
        &self.moments
    }

    /// Largest admissible chop size; `t` must stay strictly below it.
    pub fn chop_limit(&self) -> Q {
        let v = &self.p.vertices()[self.vertex];
        let normal: Vec<i64> = (0..self.p.dim())
            .map(|k| v.active.iter().map(|&i| self.p.facets()[i].normal[k]).sum())
            .collect();
        let base = rational::dot_int(&normal, &v.coords);
        self.p
            .vertices()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.vertex)
            .map(|(_, w)| rational::dot_int(&normal, &w.coords) - &base)
            .min()
            .expect("polytope has at least two vertices")
    }

    pub fn a0(&self) -> EpsPoly {
        &EpsPoly::constant(self.moments.a0.clone()) - &self.chop.alpha
    }

    pub fn a1(&self) -> EpsPoly {
        &EpsPoly::constant(self.moments.a1.clone()) - &self.chop.gamma
    }

    pub fn b0(&self, u: &[Q]) -> EpsPoly {
        let f = fixed_point_data(&self.p.vertices()[self.vertex], u);
        let base = EpsPoly::constant(self.moments.b0(u));
        &(&base + &self.chop.alpha.scale(&f.h)) + &self.chop.beta.scale(&f.lap_h)
    }

    pub fn b1(&self, u: &[Q]) -> EpsPoly {
        let f = fixed_point_data(&self.p.vertices()[self.vertex], u);
        let base = EpsPoly::constant(self.moments.b1(u));
        &(&base + &self.chop.gamma.scale(&f.h)) + &self.chop.delta.scale(&f.lap_h)
    }

    /// `d0(eps)` for the pair `(u, w)`; `c0(eps)` is the case `w = u`.
    pub fn d0(&self, u: &[Q], w: &[Q]) -> EpsPoly {
        let vd = &self.p.vertices()[self.vertex];
        let fu = fixed_point_data(vd, u);
        let fw = fixed_point_data(vd, w);
        let hess = fixed_point_cross(vd, u, w);
        let base = EpsPoly::constant(self.moments.cross(u, w));
        let t0 = self.chop.alpha.scale(&(&fu.h * &fw.h));
        let t1 = self.chop.beta.scale(&(&fu.h * &fw.lap_h + &fw.h * &fu.lap_h));
        let t2 = self.chop.kappa.scale(&(hess + &fu.lap_h * &fw.lap_h));
        &(&(&base - &t0) - &t1) - &t2
    }

    pub fn expand(&self, u: &[Q], w: Option<&[Q]>) -> CountExpansions {
        let w = w.unwrap_or(u);
        CountExpansions {
            a0: self.a0(),
            a1: self.a1(),
            b0: self.b0(u),
            b1: self.b1(u),
            c0: self.d0(u, u),
            d0: self.d0(u, w),
        }
    }

    /// `F_eps(u) = 4 (b0(eps) a1(eps) - b1(eps) a0(eps)) / a0(eps)`.
    pub fn futaki_eps(&self, u: &[Q]) -> EpsRatio {
        let a0 = self.a0();
        let num = &(&self.b0(u) * &self.a1()) - &(&self.b1(u) * &a0);
        EpsRatio::new(num.scale(&q(4)), a0)
    }

    /// `<u, w>_eps = (d0(eps) a0(eps) - b0u(eps) b0w(eps)) / a0(eps)^2`.
    pub fn inner_eps(&self, u: &[Q], w: &[Q]) -> EpsRatio {
        let a0 = self.a0();
        let num = &(&self.d0(u, w) * &a0) - &(&self.b0(u) * &self.b0(w));
        EpsRatio::new(num, &a0 * &a0)
    }

    pub fn gram(&self, basis: &[Vec<Q>]) -> EpsGram {
        let k = basis.len();
        let mut entries: Vec<Vec<Option<EpsRatio>>> = vec![vec![None; k]; k];
        for i in 0..k {
            for j in i..k {
                let x = self.inner_eps(&basis[i], &basis[j]);
                entries[j][i] = Some(x.clone());
                entries[i][j] = Some(x);
            }
        }
        EpsGram {
            basis: basis.to_vec(),
            entries: entries.into_iter().map(|r| r.into_iter().map(|x| x.expect("filled")).collect()).collect(),
        }
    }

    /// `F_eps(u)` split as `F(u) - A H(p) - B Delta H(p)` with `H`
    /// normalized to have average zero on the base polytope.
    pub fn formal_futaki(&self, u: &[Q]) -> FormalFutaki {
        let f = fixed_point_data(&self.p.vertices()[self.vertex], u);
        let (a, b) = ab_series(self.p.dim(), &self.moments.a0, &self.moments.a1);
        FormalFutaki {
            base: self.moments.futaki(u),
            h: f.h + self.moments.b0(u) / &self.moments.a0,
            lap_h: f.lap_h,
            a,
            b,
        }
    }

    /// `A H(q) + B Delta H(q)` at `eps` for `H_u` normalized on the base.
    pub fn functional(&self, u: &[Q], eps: &Q) -> Result<Q> {
        let f = self.formal_futaki(u);
        Ok(f.a.eval(eps)? * &f.h + f.b.eval(eps)? * &f.lap_h)
    }
}

/// The split `F_eps(u) = base - A h - B lap_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalFutaki {
    pub base: Q,
    pub h: Q,
    pub lap_h: Q,
    pub a: EpsRatio,
    pub b: EpsRatio,
}

impl FormalFutaki {
    pub fn assemble(&self) -> EpsRatio {
        // A and B share the denominator a0(eps)
        let den = self.a.den.clone();
        let num = &(&den.scale(&self.base) - &self.a.num.scale(&self.h)) - &self.b.num.scale(&self.lap_h);
        EpsRatio::new(num, den)
    }
}

fn ab_series(n: usize, a0: &Q, a1: &Q) -> (EpsRatio, EpsRatio) {
    let c = ChopSeries::new(n);
    let a0e = &EpsPoly::constant(a0.clone()) - &c.alpha;
    let a1e = &EpsPoly::constant(a1.clone()) - &c.gamma;
    let a = &(&c.gamma * &a0e) - &(&c.alpha * &a1e);
    let b = &(&c.delta * &a0e) - &(&c.beta * &a1e);
    (EpsRatio::new(a.scale(&q(4)), a0e.clone()), EpsRatio::new(b.scale(&q(4)), a0e))
}

/// The coefficients of `H(p)` and `Delta H(p)` in `-F_eps`. They depend
/// only on the dimension, the volume and half the boundary measure.
/// `A` leads with `2 eps^(2n-2) / (n-2)!` and `B` has strictly higher order.
pub fn ab_from_data(n: usize, a0: &Q, a1: &Q) -> Result<(EpsRatio, EpsRatio)> {
    if n < 2 {
        return Err(Error::UnsupportedDimension { required: 2, got: n });
    }
    if !a0.is_positive() {
        return Err(Error::InvalidArgument(format!("volume must be positive, got {a0}")));
    }
    Ok(ab_series(n, a0, a1))
}

pub fn ab_coefficients(p: &DelzantPolytope) -> Result<(EpsRatio, EpsRatio)> {
    let m = Moments::of(p)?;
    ab_from_data(p.dim(), &m.a0, &m.a1)
}

/// `F_eps` from formal data: base coefficients and the fixed-point values
/// `H(p)` (unnormalized) and `Delta H(p)`.
pub fn futaki_eps_formal(n: usize, base: &EhrhartData, h: &Q, lap_h: &Q) -> EpsRatio {
    let c = ChopSeries::new(n);
    let a0 = &EpsPoly::constant(base.a0.clone()) - &c.alpha;
    let a1 = &EpsPoly::constant(base.a1.clone()) - &c.gamma;
    let b0 = &(&EpsPoly::constant(base.b0.clone()) + &c.alpha.scale(h)) + &c.beta.scale(lap_h);
    let b1 = &(&EpsPoly::constant(base.b1.clone()) + &c.gamma.scale(h)) + &c.delta.scale(lap_h);
    let num = &(&b0 * &a1) - &(&b1 * &a0);
    EpsRatio::new(num.scale(&q(4)), a0)
}

fn check_vectors(p: &DelzantPolytope, u: &[Q], w: Option<&[Q]>) -> Result<()> {
    check_len(p, u)?;
    if let Some(w) = w {
        check_len(p, w)?;
    }
    Ok(())
}

pub fn expand_counts(p: &DelzantPolytope, v: usize, u: &[Q], w: Option<&[Q]>) -> Result<CountExpansions> {
    check_vectors(p, u, w)?;
    Ok(Blowup::new(p, v)?.expand(u, w))
}

/// Default chop sizes for the lattice-count cross-check.
pub fn default_oracle_ts() -> Vec<Q> {
    vec![qr(1, 3), qr(1, 4), qr(1, 5)]
}

/// Compares the expansions with Ehrhart fits of the chopped polytopes at
/// each `t`.
pub fn check_against_chops(
    p: &DelzantPolytope,
    v: usize,
    u: &[Q],
    w: Option<&[Q]>,
    exp: &CountExpansions,
    ts: &[Q],
) -> Result<()> {
    for t in ts {
        let chopped = chop_corner(p, v, t)?;
        let fit = ehrhart_fit(&chopped, u, w)?;
        let closed = exp.eval_t(t);
        let pairs = [
            ("a0", &fit.a0, &closed.a0),
            ("a1", &fit.a1, &closed.a1),
            ("b0", &fit.b0, &closed.b0),
            ("b1", &fit.b1, &closed.b1),
            ("c0", &fit.c0, &closed.c0),
            ("d0", &fit.d0, &closed.d0),
        ];
        for (name, a, b) in pairs {
            if a != b {
                return Err(Error::OracleMismatch(format!(
                    "{name} at t = {t}: lattice count gives {a}, closed form gives {b}"
                )));
            }
        }
    }
    Ok(())
}

/// [`expand_counts`] followed by the lattice-count cross-check.
pub fn expand_counts_checked(
    p: &DelzantPolytope,
    v: usize,
    u: &[Q],
    w: Option<&[Q]>,
    ts: &[Q],
) -> Result<CountExpansions> {
    let exp = expand_counts(p, v, u, w)?;
    check_against_chops(p, v, u, w, &exp, ts)?;
    Ok(exp)
}

pub fn futaki_eps(p: &DelzantPolytope, v: usize, u: &[Q]) -> Result<EpsRatio> {
    check_len(p, u)?;
    Ok(Blowup::new(p, v)?.futaki_eps(u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsGram {
    pub basis: Vec<Vec<Q>>,
    pub entries: Vec<Vec<EpsRatio>>,
}

impl EpsGram {
    pub fn eval(&self, eps: &Q) -> Result<Vec<Vec<Q>>> {
        self.entries.iter().map(|r| r.iter().map(|x| x.eval(eps)).collect()).collect()
    }

    pub fn eval_f64(&self, eps: f64) -> Vec<Vec<f64>> {
        self.entries.iter().map(|r| r.iter().map(|x| x.eval_f64(eps)).collect()).collect()
    }

    /// The pairing at `eps` on the standard coordinates.
    pub fn standard_form(&self, eps: &Q) -> Result<Vec<Vec<Q>>> {
        let g = self.eval(eps)?;
        if !rational::is_positive_definite(&g) {
            return Err(Error::NotPositiveDefinite(eps.to_string()));
        }
        let n = self.basis.first().map_or(0, Vec::len);
        if self.basis.len() != n {
            return Err(Error::InvalidArgument("Gram basis must be a basis of the torus algebra".into()));
        }
        let binv = rational::inverse(&self.basis)
            .ok_or_else(|| Error::InvalidArgument("Gram basis is linearly dependent".into()))?;
        // <x, y> = x^T B^-1 G B^-T y
        let left: Vec<Vec<Q>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| &binv[i][k] * &g[k][j]).sum()).collect())
            .collect();
        Ok((0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| &left[i][k] * &binv[j][k]).sum()).collect())
            .collect())
    }
}

pub fn eps_gram(p: &DelzantPolytope, v: usize, basis: &[Vec<Q>]) -> Result<EpsGram> {
    for b in basis {
        check_len(p, b)?;
    }
    Ok(Blowup::new(p, v)?.gram(basis))
}

fn bilinear(g: &[Vec<Q>], x: &[Q], y: &[Q]) -> Q {
    let mut acc = Q::zero();
    for (i, xi) in x.iter().enumerate() {
        if xi.is_zero() {
            continue;
        }
        for (j, yj) in y.iter().enumerate() {
            acc += xi * yj * &g[i][j];
        }
    }
    acc
}

/// Basis of the orthogonal complement of `span(stab)` for the pairing at
/// `eps`, scaled to primitive integer vectors.
pub fn perp_basis(g: &EpsGram, stab: &[Vec<Q>], eps: &Q) -> Result<Vec<Vec<Q>>> {
    let form = g.standard_form(eps)?;
    let n = form.len();
    perp_for_form(&form, stab, n)
}

pub(crate) fn perp_for_form(form: &[Vec<Q>], stab: &[Vec<Q>], n: usize) -> Result<Vec<Vec<Q>>> {
    let ip = |x: &[Q], y: &[Q]| bilinear(form, x, y);
    let mut ortho = gram_schmidt(stab, |x, y| Ok(ip(x, y)))?;
    let mut out = Vec::new();
    for e in standard_basis(n) {
        let mut w = e.clone();
        for o in &ortho {
            let c = ip(&e, o) / ip(o, o);
            for (wi, oi) in w.iter_mut().zip(o) {
                *wi -= &c * oi;
            }
        }
        if w.iter().all(Zero::is_zero) {
            continue;
        }
        ortho.push(w.clone());
        out.push(rational::primitive_direction(&w));
    }
    Ok(out)
}

/// Floating-point variant of [`perp_basis`] for real `eps`. Returns unit
/// vectors and fails if the orthogonality residual exceeds `1e-12`.
pub fn perp_basis_numeric(g: &EpsGram, stab: &[Vec<Q>], eps: f64) -> Result<Vec<Vec<f64>>> {
    let n = g.basis.len();
    let gb = g.eval_f64(eps);
    let bf: Vec<Vec<f64>> = g.basis.iter().map(|r| r.iter().map(rational::to_f64).collect()).collect();
    let b = nalgebra::DMatrix::from_fn(n, n, |i, j| bf[i][j]);
    let gm = nalgebra::DMatrix::from_fn(n, n, |i, j| gb[i][j]);
    if gm.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite(eps.to_string()));
    }
    let binv = b.try_inverse().ok_or_else(|| Error::InvalidArgument("Gram basis is linearly dependent".into()))?;
    let form = &binv * gm * binv.transpose();
    let ip = |x: &nalgebra::DVector<f64>, y: &nalgebra::DVector<f64>| (x.transpose() * &form * y)[(0, 0)];
    let mut ortho: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut count_stab = 0;
    let candidates = stab
        .iter()
        .map(|s| nalgebra::DVector::from_iterator(n, s.iter().map(rational::to_f64)))
        .chain((0..n).map(|i| nalgebra::DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })));
    for (idx, c) in candidates.enumerate() {
        let mut w = c.clone();
        for o in &ortho {
            w -= o * ip(&c, o);
        }
        for o in &ortho {
            let r = ip(&w, o);
            w -= o * r;
        }
        let norm = ip(&w, &w);
        if norm <= 1e-24 * ip(&c, &c).max(1.0) {
            if idx < stab.len() {
                return Err(Error::DependentBasis);
            }
            continue;
        }
        ortho.push(w / norm.sqrt());
        if idx < stab.len() {
            count_stab += 1;
        }
    }
    for i in 0..ortho.len() {
        for j in 0..i {
            if ip(&ortho[i], &ortho[j]).abs() > 1e-12 {
                return Err(Error::NotPositiveDefinite(eps.to_string()));
            }
        }
    }
    Ok(ortho[count_stab..].iter().map(|v| v.iter().copied().collect()).collect())
}

/// Converts `eps` given as `t = eps^2` when `t` is a perfect rational square.
pub fn eps_from_t(t: &Q) -> Option<Q> {
    let n = t.numer().sqrt();
    let d = t.denom().sqrt();
    if &(&n * &n) == t.numer() && &(&d * &d) == t.denom() && !t.is_negative() {
        Some(Q::new(n, d))
    } else {
        None
    }
}
