//! Lattice-point counts with torus weights, Ehrhart coefficient fits, and
//! jet-space weights at fixed points.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::polytope::{DelzantPolytope, VertexData};
use crate::rational::{self, dot, dot_int, q, Q};

/// An element of the Lie algebra of the torus, in lattice coordinates.
pub type TorusVector = Vec<Q>;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSums {
    pub k: i64,
    pub dim: i64,
    pub wt_u: Q,
    pub sq_u: Q,
    pub cross_uv: Option<Q>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EhrhartData {
    pub a0: Q,
    pub a1: Q,
    pub b0: Q,
    pub b1: Q,
    pub c0: Q,
    pub d0: Q,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JetWeights {
    pub l: usize,
    pub dim: i64,
    pub wt: Q,
    pub sq: Q,
}

/// Weight data of a fixed point for the Hamiltonian of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointData {
    pub h: Q,
    pub lap_h: Q,
    pub hess: Q,
}

/// Raw moments of the lattice points of a dilate: count, coordinate sums and
/// second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMoments {
    pub count: i64,
    pub first: Vec<i128>,
    pub second: Vec<Vec<i128>>,
}

impl LatticeMoments {
    fn zero(n: usize) -> Self {
        Self { count: 0, first: vec![0; n], second: vec![vec![0; n]; n] }
    }

    fn add_point(&mut self, m: &[i64]) {
        self.count += 1;
        for i in 0..m.len() {
            self.first[i] += i128::from(m[i]);
            for j in 0..m.len() {
                self.second[i][j] += i128::from(m[i]) * i128::from(m[j]);
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.count += other.count;
        for i in 0..self.first.len() {
            self.first[i] += other.first[i];
            for j in 0..self.first.len() {
                self.second[i][j] += other.second[i][j];
            }
        }
        self
    }

    pub fn weight(&self, u: &[Q]) -> Q {
        u.iter().zip(&self.first).map(|(ui, s)| ui * Q::from_integer(BigInt::from(*s))).sum()
    }

    pub fn cross(&self, u: &[Q], v: &[Q]) -> Q {
        let mut acc = Q::zero();
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                acc += ui * vj * Q::from_integer(BigInt::from(self.second[i][j]));
            }
        }
        acc
    }
}

/// Integer facet data of the dilate `kP`.
struct Dilate {
    normals: Vec<Vec<i64>>,
    offsets: Vec<i64>,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

fn dilate(p: &DelzantPolytope, k: i64) -> Result<Dilate> {
    if k < 1 {
        return Err(Error::InvalidArgument(format!("dilation factor must be positive, got {k}")));
    }
    let kq = q(k);
    let mut offsets = Vec::with_capacity(p.facets().len());
    for f in p.facets() {
        let c = &f.offset * &kq;
        let ci = if c.is_integer() { c.to_integer().to_i64() } else { None };
        let Some(ci) = ci else {
            return Err(Error::NonIntegralDilate { k, denominator: p.denominator().to_string() });
        };
        offsets.push(ci);
    }
    let n = p.dim();
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    for v in p.vertices() {
        for i in 0..n {
            let x = (&v.coords[i] * &kq).to_integer().to_i64().expect("coordinate fits in i64");
            lo[i] = lo[i].min(x);
            hi[i] = hi[i].max(x);
        }
    }
    Ok(Dilate { normals: p.facets().iter().map(|f| f.normal.clone()).collect(), offsets, lo, hi })
}

impl Dilate {
    fn contains(&self, m: &[i64]) -> bool {
        self.normals
            .iter()
            .zip(&self.offsets)
            .all(|(a, &c)| a.iter().zip(m).map(|(x, y)| x * y).sum::<i64>() >= c)
    }

    /// Visits every point of the bounding box whose first coordinate is `x0`.
    fn scan_slice(&self, x0: i64, mut f: impl FnMut(&[i64])) {
        let n = self.lo.len();
        let mut m = self.lo.clone();
        m[0] = x0;
        loop {
            if self.contains(&m) {
                f(&m);
            }
            let mut i = n;
            loop {
                if i == 1 {
                    return;
                }
                i -= 1;
                if m[i] < self.hi[i] {
                    m[i] += 1;
                    break;
                }
                m[i] = self.lo[i];
            }
        }
    }
}

fn scan_single(d: &Dilate, x0: i64, f: impl FnMut(&[i64])) {
    if d.lo.len() == 1 {
        let m = [x0];
        let mut f = f;
        if d.contains(&m) {
            f(&m);
        }
    } else {
        d.scan_slice(x0, f);
    }
}

/// All integer points of `kP`, sorted lexicographically.
pub fn lattice_points(p: &DelzantPolytope, k: i64) -> Result<Vec<Vec<i64>>> {
    let d = dilate(p, k)?;
    let slices: Vec<Vec<Vec<i64>>> = (d.lo[0]..=d.hi[0])
        .into_par_iter()
        .map(|x0| {
            let mut out = Vec::new();
            scan_single(&d, x0, |m| out.push(m.to_vec()));
            out
        })
        .collect();
    Ok(slices.into_iter().flatten().collect())
}

/// Count and moments of the integer points of `kP`.
pub fn lattice_moments(p: &DelzantPolytope, k: i64) -> Result<LatticeMoments> {
    let d = dilate(p, k)?;
    let n = p.dim();
    let m = (d.lo[0]..=d.hi[0])
        .into_par_iter()
        .map(|x0| {
            let mut acc = LatticeMoments::zero(n);
            scan_single(&d, x0, |m| acc.add_point(m));
            acc
        })
        .reduce(|| LatticeMoments::zero(n), LatticeMoments::merge);
    Ok(m)
}

/// Sums of the weights `<u, m>` (and their squares) over the points of `kP`.
pub fn weight_sums(p: &DelzantPolytope, k: i64, u: &[Q], v: Option<&[Q]>) -> Result<WeightSums> {
    check_len(p, u)?;
    if let Some(v) = v {
        check_len(p, v)?;
    }
    let m = lattice_moments(p, k)?;
    Ok(WeightSums {
        k,
        dim: m.count,
        wt_u: m.weight(u),
        sq_u: m.cross(u, u),
        cross_uv: v.map(|v| m.cross(u, v)),
    })
}

pub(crate) fn check_len(p: &DelzantPolytope, u: &[Q]) -> Result<()> {
    if u.len() != p.dim() {
        return Err(Error::InvalidArgument(format!(
            "torus vector has {} entries, polytope has dimension {}",
            u.len(),
            p.dim()
        )));
    }
    Ok(())
}

/// Coefficient of `k^e` in the interpolated polynomial, zero if absent.
fn coeff(c: &[Q], e: usize) -> Q {
    c.get(e).cloned().unwrap_or_else(Q::zero)
}

/// Interpolates the four sequences over one window of dilates.
fn fit_window(ms: &[(i64, LatticeMoments)], u: &[Q], v: &[Q]) -> [Vec<Q>; 4] {
    let xs: Vec<Q> = ms.iter().map(|(k, _)| q(*k)).collect();
    let series = |f: &dyn Fn(&LatticeMoments) -> Q| {
        let ys: Vec<Q> = ms.iter().map(|(_, m)| f(m)).collect();
        rational::interpolate(&xs, &ys)
    };
    [
        series(&|m| q(m.count)),
        series(&|m| m.weight(u)),
        series(&|m| m.cross(u, u)),
        series(&|m| m.cross(u, v)),
    ]
}

/// Fits the dimension, weight, square-weight and cross-weight polynomials
/// of the dilates and reads off their top coefficients.
///
/// When `v` is absent the cross term uses `v = u`, so `d0 = c0`.
pub fn ehrhart_fit(p: &DelzantPolytope, u: &[Q], v: Option<&[Q]>) -> Result<EhrhartData> {
    check_len(p, u)?;
    let v = v.unwrap_or(u);
    check_len(p, v)?;
    let n = p.dim();
    let d = p
        .denominator()
        .to_i64()
        .ok_or_else(|| Error::InvalidArgument("offset denominators are too large".into()))?;
    let ks: Vec<i64> = (1..=(n as i64 + 5)).map(|j| j * d).collect();
    let moments: Vec<(i64, LatticeMoments)> = ks
        .par_iter()
        .map(|&k| lattice_moments(p, k).map(|m| (k, m)))
        .collect::<Result<_>>()?;
    let w1 = fit_window(&moments[..n + 4], u, v);
    let w2 = fit_window(&moments[1..], u, v);
    let names = ["dimension", "weight", "square weight", "cross weight"];
    let degree = [n, n + 1, n + 2, n + 2];
    for i in 0..4 {
        let len = w1[i].len().max(w2[i].len());
        for e in 0..len {
            if coeff(&w1[i], e) != coeff(&w2[i], e) {
                return Err(Error::FitInconsistent(format!(
                    "{} polynomial differs between windows at k^{e}",
                    names[i]
                )));
            }
            if e > degree[i] && !coeff(&w1[i], e).is_zero() {
                return Err(Error::FitInconsistent(format!(
                    "{} polynomial has degree above {}",
                    names[i], degree[i]
                )));
            }
        }
    }
    Ok(EhrhartData {
        a0: coeff(&w1[0], n),
        a1: coeff(&w1[0], n - 1),
        b0: coeff(&w1[1], n + 1),
        b1: coeff(&w1[1], n),
        c0: coeff(&w1[2], n + 2),
        d0: coeff(&w1[3], n + 2),
    })
}

/// `<u, e_i>` for the edge generators of a vertex.
pub fn edge_weights(vd: &VertexData, u: &[Q]) -> Vec<Q> {
    vd.edge_generators.iter().map(|e| dot_int(e, u)).collect()
}

/// Weights of the monomials of degree at most `l - 1` in the edge
/// coordinates of a vertex; monomial `m` has weight `-sum m_i <u, e_i>`.
pub fn jet_weights(vd: &VertexData, u: &[Q], l: usize) -> JetWeights {
    let w = edge_weights(vd, u);
    let n = w.len();
    let mut out = JetWeights { l, dim: 0, wt: Q::zero(), sq: Q::zero() };
    if l == 0 {
        return out;
    }
    let mut m = vec![0usize; n];
    loop {
        {
            let weight: Q = -m.iter().zip(&w).map(|(&mi, wi)| wi * q(mi as i64)).sum::<Q>();
            out.dim += 1;
            out.sq += &weight * &weight;
            out.wt += weight;
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            m[i] += 1;
            if m.iter().sum::<usize>() < l {
                break;
            }
            m[i] = 0;
            i += 1;
        }
    }
}

/// `H(p) = -<u, p>`, `Delta H(p) = -sum <u, e_i>`, `|Hess H|^2 = sum <u, e_i>^2`.
pub fn fixed_point_data(vd: &VertexData, u: &[Q]) -> FixedPointData {
    let w = edge_weights(vd, u);
    FixedPointData {
        h: -dot(u, &vd.coords),
        lap_h: -w.iter().sum::<Q>(),
        hess: w.iter().map(|x| x * x).sum(),
    }
}

/// The bilinear Hessian pairing `sum <u, e_i><v, e_i>`.
pub fn fixed_point_cross(vd: &VertexData, u: &[Q], v: &[Q]) -> Q {
    edge_weights(vd, u).iter().zip(edge_weights(vd, v)).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{chop_corner, integrate, Polynomial};
    use crate::rational::qr;

    fn simplex() -> DelzantPolytope {
        DelzantPolytope::simplex(2)
    }

    #[test]
    fn enumerates_points() {
        let p = simplex();
        assert_eq!(lattice_points(&p, 1).unwrap(), vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(lattice_points(&p, 2).unwrap().len(), 6);
        let sq = DelzantPolytope::cuboid(&[q(1), q(1)]).unwrap();
        assert_eq!(lattice_points(&sq, 3).unwrap().len(), 16);
        let seg = DelzantPolytope::simplex(1);
        assert_eq!(lattice_points(&seg, 4).unwrap().len(), 5);
    }

    #[test]
    fn rejects_fractional_dilates() {
        let c = chop_corner(&simplex(), 0, &qr(1, 3)).unwrap();
        assert!(matches!(lattice_points(&c, 2), Err(Error::NonIntegralDilate { k: 2, .. })));
        assert_eq!(lattice_points(&c, 3).unwrap().len(), 10 - 1);
    }

    #[test]
    fn weight_sum_examples() {
        let p = simplex();
        let u = [q(1), q(0)];
        let w = weight_sums(&p, 1, &u, None).unwrap();
        assert_eq!((w.dim, w.wt_u, w.sq_u), (3, q(1), q(1)));
        let w = weight_sums(&p, 2, &u, None).unwrap();
        assert_eq!((w.dim, w.wt_u, w.sq_u), (6, q(4), q(6)));
        let w = weight_sums(&p, 3, &[q(0), q(0)], Some(&u)).unwrap();
        assert_eq!((w.wt_u, w.sq_u, w.cross_uv), (q(0), q(0), Some(q(0))));
    }

    #[test]
    fn fits_simplex_and_square() {
        let e = ehrhart_fit(&simplex(), &[q(1), q(0)], Some(&[q(0), q(1)])).unwrap();
        assert_eq!(
            e,
            EhrhartData { a0: qr(1, 2), a1: qr(3, 2), b0: qr(1, 6), b1: qr(1, 2), c0: qr(1, 12), d0: qr(1, 24) }
        );
        let sq = DelzantPolytope::cuboid(&[q(1), q(1)]).unwrap();
        let e = ehrhart_fit(&sq, &[q(1), q(0)], None).unwrap();
        assert_eq!((e.a0, e.a1, e.b0, e.b1), (q(1), q(2), qr(1, 2), q(1)));
    }

    #[test]
    fn fit_on_rational_polytope_matches_volume() {
        let c = chop_corner(&simplex(), 0, &qr(1, 3)).unwrap();
        let e = ehrhart_fit(&c, &[q(1), q(1)], None).unwrap();
        assert_eq!(e.a0, integrate(&c, &Polynomial::constant(2, q(1))).unwrap());
    }

    #[test]
    fn jet_examples() {
        let p = simplex();
        let v0 = &p.vertices()[p.vertex_index(&[q(0), q(0)]).unwrap()];
        let j = jet_weights(v0, &[q(1), q(0)], 3);
        assert_eq!((j.dim, j.wt, j.sq), (6, q(-4), q(6)));
        let j = jet_weights(v0, &[q(1), q(0)], 1);
        assert_eq!((j.dim, j.wt, j.sq), (1, q(0), q(0)));
        let j = jet_weights(v0, &[q(0), q(0)], 5);
        assert_eq!((j.dim, j.wt, j.sq), (15, q(0), q(0)));
    }

    #[test]
    fn fixed_point_examples() {
        let p = simplex();
        let v1 = &p.vertices()[p.vertex_index(&[q(1), q(0)]).unwrap()];
        assert_eq!(fixed_point_data(v1, &[q(1), q(0)]), FixedPointData { h: q(-1), lap_h: q(2), hess: q(2) });
        let v0 = &p.vertices()[p.vertex_index(&[q(0), q(0)]).unwrap()];
        assert_eq!(fixed_point_data(v0, &[q(1), q(0)]), FixedPointData { h: q(0), lap_h: q(-1), hess: q(1) });
        assert_eq!(fixed_point_data(v0, &[q(0), q(0)]), FixedPointData { h: q(0), lap_h: q(0), hess: q(0) });
        assert_eq!(fixed_point_cross(v1, &[q(1), q(0)], &[q(0), q(1)]), q(-1));
    }
}
