//! Exact integration of polynomials of degree at most 2 by pulling
//! triangulations and closed-form simplex moments.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use super::DelzantPolytope;
use crate::error::{Error, Result};
use crate::rational::{self, factorial, int_vec_to_q, q, Q};

/// A polynomial as a map from exponent vectors to coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub dim: usize,
    pub terms: BTreeMap<Vec<u32>, Q>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: Q) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// `<u, x> + c`.
    pub fn linear(u: &[Q], c: Q) -> Self {
        let dim = u.len();
        let mut p = Self::constant(dim, c);
        for (i, ui) in u.iter().enumerate() {
            let mut e = vec![0; dim];
            e[i] = 1;
            p.add_term(e, ui.clone());
        }
        p
    }

    pub fn monomial(exps: Vec<u32>, c: Q) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps, c);
        p
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: Q) {
        let slot = self.terms.entry(exps).or_insert_with(Q::zero);
        *slot += c;
        self.terms.retain(|_, v| !v.is_zero());
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter().zip(x).fold(c.clone(), |acc, (&k, xi)| acc * num_traits::pow(xi.clone(), k as usize))
            })
            .sum()
    }
}

/// Which vertex of each face serves as the cone point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Apex {
    First,
    Last,
}

/// Pulling triangulation of the face cut out by `active`; each simplex is a
/// list of vertex indices.
pub fn triangulate(p: &DelzantPolytope, active: &[usize], apex: Apex) -> Vec<Vec<usize>> {
    let Some(face) = p.face(active) else {
        return Vec::new();
    };
    if face.dim == 0 {
        return vec![face.vertices.clone()];
    }
    let top = match apex {
        Apex::First => face.vertices[0],
        Apex::Last => *face.vertices.last().expect("nonempty face"),
    };
    let through_top = &p.vertices()[top].active;
    let mut out = Vec::new();
    for j in 0..p.facets().len() {
        if face.active.contains(&j) || through_top.contains(&j) {
            continue;
        }
        let mut sub = face.active.clone();
        sub.push(j);
        match p.face(&sub) {
            Some(f) if f.dim + 1 == face.dim => {
                for mut s in triangulate(p, &f.active, apex) {
                    s.push(top);
                    out.push(s);
                }
            }
            _ => {}
        }
    }
    out
}

fn check_dim(p: &DelzantPolytope, f: &Polynomial) -> Result<()> {
    if f.dim != p.dim() {
        return Err(Error::InvalidArgument(format!(
            "integrand has {} variables, polytope has dimension {}",
            f.dim,
            p.dim()
        )));
    }
    Ok(())
}

/// Integral of a polynomial of degree at most 2 over a simplex with the
/// given vertices and volume.
fn simplex_moment(pts: &[&Vec<Q>], vol: &Q, f: &Polynomial) -> Q {
    let n = pts[0].len();
    let s: Vec<Q> = (0..n).map(|i| pts.iter().map(|w| w[i].clone()).sum()).collect();
    let k = q(pts.len() as i64);
    let mut total = Q::zero();
    for (e, c) in &f.terms {
        let idx: Vec<usize> = e.iter().enumerate().flat_map(|(i, &m)| std::iter::repeat_n(i, m as usize)).collect();
        let m = match idx.as_slice() {
            [] => vol.clone(),
            [i] => vol * &s[*i] / &k,
            [i, j] => {
                let pair: Q = pts.iter().map(|w| &w[*i] * &w[*j]).sum();
                vol * (pair + &s[*i] * &s[*j]) / (&k * (&k + q(1)))
            }
            _ => unreachable!("degree checked by caller"),
        };
        total += c * m;
    }
    total
}

pub fn integrate(p: &DelzantPolytope, f: &Polynomial) -> Result<Q> {
    integrate_with(p, f, Apex::First)
}

/// [`integrate`] with an explicit choice of triangulation.
pub fn integrate_with(p: &DelzantPolytope, f: &Polynomial, apex: Apex) -> Result<Q> {
    check_dim(p, f)?;
    if f.degree() > 2 {
        return Err(Error::DegreeTooHigh(f.degree()));
    }
    let n = p.dim();
    let verts = p.vertices();
    let mut total = Q::zero();
    for s in triangulate(p, &[], apex) {
        let pts: Vec<&Vec<Q>> = s.iter().map(|&i| &verts[i].coords).collect();
        let m: Vec<Vec<Q>> = pts[1..].iter().map(|w| w.iter().zip(pts[0]).map(|(a, b)| a - b).collect()).collect();
        let vol = rational::det(&m).abs() / factorial(n);
        total += simplex_moment(&pts, &vol, f);
    }
    Ok(total)
}

/// Integral of an affine function over the boundary, each facet carrying the
/// measure in which its own lattice has covolume 1.
pub fn boundary_integrate(p: &DelzantPolytope, f: &Polynomial) -> Result<Q> {
    check_dim(p, f)?;
    if f.degree() > 1 {
        return Err(Error::DegreeTooHigh(f.degree()));
    }
    let n = p.dim();
    let verts = p.vertices();
    let mut total = Q::zero();
    for (j, facet) in p.facets().iter().enumerate() {
        let a = int_vec_to_q(&facet.normal);
        let aa = rational::dot(&a, &a);
        let nu: Vec<Q> = a.iter().map(|x| x / &aa).collect();
        for s in triangulate(p, &[j], Apex::First) {
            let pts: Vec<&Vec<Q>> = s.iter().map(|&i| &verts[i].coords).collect();
            let mut m: Vec<Vec<Q>> =
                pts[1..].iter().map(|w| w.iter().zip(pts[0]).map(|(a, b)| a - b).collect()).collect();
            m.push(nu.clone());
            let vol = rational::det(&m).abs() / factorial(n - 1);
            total += simplex_moment(&pts, &vol, f);
        }
    }
    Ok(total)
}
