//! Futaki invariant, Futaki-Mabuchi pairing, extremal vector field and the
//! relative Donaldson-Futaki invariant of the base polytope.

use num_traits::{Signed, Zero};

use crate::counts::{check_len, ehrhart_fit, EhrhartData};
use crate::error::{Error, Result};
use crate::polytope::{boundary_integrate, integrate, DelzantPolytope, Polynomial};
use crate::rational::{self, q, qr, Q};

#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub basis: Vec<Vec<Q>>,
    pub entries: Vec<Vec<Q>>,
}

impl GramMatrix {
    pub fn is_positive_definite(&self) -> bool {
        rational::is_positive_definite(&self.entries)
    }
}

/// Values of the Futaki character on a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FutakiCharacter {
    pub values: Vec<Q>,
}

pub fn standard_basis(n: usize) -> Vec<Vec<Q>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { q(1) } else { q(0) }).collect()).collect()
}

/// Volume, half boundary measure and the first and second moments of a
/// polytope; every invariant of a torus vector is built from these.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub a0: Q,
    pub a1: Q,
    /// `first[i] = int x_i`.
    pub first: Vec<Q>,
    /// `boundary_first[i]` is half the boundary integral of `x_i`.
    pub boundary_first: Vec<Q>,
    /// `second[i][j] = int x_i x_j`.
    pub second: Vec<Vec<Q>>,
}

impl Moments {
    pub fn of(p: &DelzantPolytope) -> Result<Self> {
        let n = p.dim();
        let half = qr(1, 2);
        let one = Polynomial::constant(n, q(1));
        let xs: Vec<Polynomial> = (0..n)
            .map(|i| {
                let mut e = vec![0; n];
                e[i] = 1;
                Polynomial::monomial(e, q(1))
            })
            .collect();
        let mut second = vec![vec![Q::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let x = integrate(p, &xs[i].mul(&xs[j]))?;
                second[i][j] = x.clone();
                second[j][i] = x;
            }
        }
        Ok(Self {
            a0: integrate(p, &one)?,
            a1: &half * boundary_integrate(p, &one)?,
            first: xs.iter().map(|x| integrate(p, x)).collect::<Result<_>>()?,
            boundary_first: xs.iter().map(|x| boundary_integrate(p, x).map(|b| &half * b)).collect::<Result<_>>()?,
            second,
        })
    }

    pub fn b0(&self, u: &[Q]) -> Q {
        rational::dot(u, &self.first)
    }

    pub fn b1(&self, u: &[Q]) -> Q {
        rational::dot(u, &self.boundary_first)
    }

    pub fn cross(&self, u: &[Q], v: &[Q]) -> Q {
        let mut acc = Q::zero();
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                acc += ui * vj * &self.second[i][j];
            }
        }
        acc
    }

    /// When `v` is absent, `d0 = c0`.
    pub fn data(&self, u: &[Q], v: Option<&[Q]>) -> EhrhartData {
        let v = v.unwrap_or(u);
        EhrhartData {
            a0: self.a0.clone(),
            a1: self.a1.clone(),
            b0: self.b0(u),
            b1: self.b1(u),
            c0: self.cross(u, u),
            d0: self.cross(u, v),
        }
    }

    pub fn futaki(&self, u: &[Q]) -> Q {
        futaki_from(&self.data(u, None))
    }

    pub fn inner_product(&self, u: &[Q], v: &[Q]) -> Q {
        (self.cross(u, v) * &self.a0 - self.b0(u) * self.b0(v)) / (&self.a0 * &self.a0)
    }
}

/// The six coefficients computed from integrals over the polytope and its
/// boundary. When `v` is absent, `d0 = c0`.
pub fn integral_data(p: &DelzantPolytope, u: &[Q], v: Option<&[Q]>) -> Result<EhrhartData> {
    check_len(p, u)?;
    if let Some(v) = v {
        check_len(p, v)?;
    }
    Ok(Moments::of(p)?.data(u, v))
}

/// `F = 4 (b0 a1 - b1 a0) / a0`.
pub fn futaki_from(e: &EhrhartData) -> Q {
    q(4) * (&e.b0 * &e.a1 - &e.b1 * &e.a0) / &e.a0
}

pub fn futaki(p: &DelzantPolytope, u: &[Q]) -> Result<Q> {
    check_len(p, u)?;
    Ok(Moments::of(p)?.futaki(u))
}

/// The same value computed from lattice-point counts.
pub fn futaki_oracle(p: &DelzantPolytope, u: &[Q]) -> Result<Q> {
    Ok(futaki_from(&ehrhart_fit(p, u, None)?))
}

/// `<u, v> = (d0 a0 - b0(u) b0(v)) / a0^2`.
pub fn inner_product(p: &DelzantPolytope, u: &[Q], v: &[Q]) -> Result<Q> {
    check_len(p, u)?;
    check_len(p, v)?;
    Ok(Moments::of(p)?.inner_product(u, v))
}

pub fn inner_product_oracle(p: &DelzantPolytope, u: &[Q], v: &[Q]) -> Result<Q> {
    let e = ehrhart_fit(p, u, Some(v))?;
    let ev = ehrhart_fit(p, v, None)?;
    Ok((&e.d0 * &e.a0 - &e.b0 * &ev.b0) / (&e.a0 * &e.a0))
}

pub fn gram(p: &DelzantPolytope, basis: &[Vec<Q>]) -> Result<GramMatrix> {
    for b in basis {
        check_len(p, b)?;
    }
    let m = Moments::of(p)?;
    let mut entries = vec![vec![Q::zero(); basis.len()]; basis.len()];
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let x = m.inner_product(&basis[i], &basis[j]);
            entries[i][j] = x.clone();
            entries[j][i] = x;
        }
    }
    Ok(GramMatrix { basis: basis.to_vec(), entries })
}

pub fn futaki_character(p: &DelzantPolytope, basis: &[Vec<Q>]) -> Result<FutakiCharacter> {
    for b in basis {
        check_len(p, b)?;
    }
    let m = Moments::of(p)?;
    Ok(FutakiCharacter { values: basis.iter().map(|b| m.futaki(b)).collect() })
}

/// The vector `chi` with `<chi, v> = F(v)` for all `v`.
pub fn extremal_field(p: &DelzantPolytope) -> Result<Vec<Q>> {
    let basis = standard_basis(p.dim());
    let g = gram(p, &basis)?;
    let f = futaki_character(p, &basis)?;
    rational::solve(&g.entries, &f.values).ok_or(Error::SingularGram)
}

/// Gram-Schmidt for an arbitrary pairing. Fails if the vectors are
/// dependent or some vector has nonpositive norm.
pub fn gram_schmidt(basis: &[Vec<Q>], ip: impl Fn(&[Q], &[Q]) -> Result<Q>) -> Result<Vec<Vec<Q>>> {
    let mut out: Vec<(Vec<Q>, Q)> = Vec::with_capacity(basis.len());
    for b in basis {
        let mut w = b.clone();
        for (o, norm) in &out {
            let c = ip(b, o)? / norm;
            for (wi, oi) in w.iter_mut().zip(o) {
                *wi -= &c * oi;
            }
        }
        if w.iter().all(Zero::is_zero) {
            return Err(Error::DependentBasis);
        }
        let norm = ip(&w, &w)?;
        if !norm.is_positive() {
            return Err(Error::DependentBasis);
        }
        out.push((w, norm));
    }
    Ok(out.into_iter().map(|(w, _)| w).collect())
}

/// `F(u) - sum_j <u, w_j>/<w_j, w_j> F(w_j)` over an orthogonalized basis.
pub fn relative_value(
    u: &[Q],
    stab: &[Vec<Q>],
    ip: impl Fn(&[Q], &[Q]) -> Result<Q>,
    f: impl Fn(&[Q]) -> Result<Q>,
) -> Result<Q> {
    let ortho = gram_schmidt(stab, &ip)?;
    let mut value = f(u)?;
    for w in &ortho {
        value -= ip(u, w)? / ip(w, w)? * f(w)?;
    }
    Ok(value)
}

pub fn relative_df(p: &DelzantPolytope, u: &[Q], stab: &[Vec<Q>]) -> Result<Q> {
    check_len(p, u)?;
    for s in stab {
        check_len(p, s)?;
    }
    let m = Moments::of(p)?;
    relative_value(u, stab, |a, b| Ok(m.inner_product(a, b)), |a| Ok(m.futaki(a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::chop_corner;

    fn simplex() -> DelzantPolytope {
        DelzantPolytope::simplex(2)
    }

    fn chopped() -> DelzantPolytope {
        chop_corner(&simplex(), 0, &qr(1, 3)).unwrap()
    }

    #[test]
    fn futaki_vanishes_on_symmetric_bases() {
        let sq = DelzantPolytope::cuboid(&[q(1), q(1)]).unwrap();
        assert_eq!(futaki(&simplex(), &[q(1), q(0)]).unwrap(), q(0));
        assert_eq!(futaki(&sq, &[q(1), q(0)]).unwrap(), q(0));
        assert_eq!(futaki(&chopped(), &[q(0), q(0)]).unwrap(), q(0));
        assert_eq!(futaki_oracle(&sq, &[q(1), q(0)]).unwrap(), q(0));
    }

    #[test]
    fn inner_product_examples() {
        let p = simplex();
        assert_eq!(inner_product(&p, &[q(1), q(0)], &[q(1), q(0)]).unwrap(), qr(1, 18));
        assert_eq!(inner_product(&p, &[q(1), q(0)], &[q(0), q(1)]).unwrap(), qr(-1, 36));
        assert_eq!(inner_product(&p, &[q(1), q(3)], &[q(0), q(0)]).unwrap(), q(0));
        assert_eq!(
            inner_product_oracle(&p, &[q(1), q(0)], &[q(0), q(1)]).unwrap(),
            qr(-1, 36)
        );
    }

    #[test]
    fn extremal_fields() {
        assert_eq!(extremal_field(&simplex()).unwrap(), vec![q(0), q(0)]);
        let sq = DelzantPolytope::cuboid(&[q(1), q(1)]).unwrap();
        assert_eq!(extremal_field(&sq).unwrap(), vec![q(0), q(0)]);
        let chi = extremal_field(&chopped()).unwrap();
        assert!(!chi[0].is_zero());
        assert_eq!(chi[0], chi[1]);
        let p = chopped();
        let v = [q(2), q(-5)];
        assert_eq!(inner_product(&p, &chi, &v).unwrap(), futaki(&p, &v).unwrap());
    }

    #[test]
    fn relative_df_examples() {
        let p = simplex();
        let basis = standard_basis(2);
        assert_eq!(relative_df(&p, &[q(1), q(0)], &basis).unwrap(), q(0));
        let c = chopped();
        let u = [q(1), q(-1)];
        assert_eq!(relative_df(&c, &u, &[]).unwrap(), futaki(&c, &u).unwrap());
        // u is already orthogonal to (1,1) by the diagonal symmetry
        let w = [q(1), q(1)];
        assert_eq!(inner_product(&c, &u, &w).unwrap(), q(0));
        assert_eq!(relative_df(&c, &u, std::slice::from_ref(&w.to_vec())).unwrap(), futaki(&c, &u).unwrap());
        let u2 = [q(1), q(0)];
        let coef = inner_product(&c, &u2, &w).unwrap() / inner_product(&c, &w, &w).unwrap();
        let perp: Vec<Q> = u2.iter().zip(&w).map(|(a, b)| a - &coef * b).collect();
        assert_eq!(relative_df(&c, &u2, &[w.to_vec()]).unwrap(), futaki(&c, &perp).unwrap());
        assert_eq!(relative_df(&c, &w, &[w.to_vec()]).unwrap(), q(0));
    }

    #[test]
    fn dependent_basis_rejected() {
        let b = vec![vec![q(1), q(1)], vec![q(2), q(2)]];
        assert_eq!(relative_df(&simplex(), &[q(1), q(0)], &b), Err(Error::DependentBasis));
    }

    #[test]
    fn gram_is_positive_definite() {
        let g = gram(&chopped(), &standard_basis(2)).unwrap();
        assert!(g.is_positive_definite());
        assert_eq!(g.entries[0][1], g.entries[1][0]);
    }
}
