//! Relative K-stability of the blowup at a point `p`, decided by the sign of
//! `A_eps H_u(q_u) + B_eps Delta H_u(q_u)` over the `eps`-orthogonal
//! complement of the stabiliser of `p`.
//!
//! A point is described by the face of the polytope whose relative interior
//! contains its moment image. Flowing along `u` specializes it to the face
//! minimizing `<u, .>`; when that face is a vertex `q`, the test uses the
//! pairing of the blowup at `q`.

pub mod cone;
pub mod kempf_ness;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::counts::{check_len, edge_weights};
use crate::error::{Error, Result};
use crate::expansion::{ab_from_data, perp_basis, Blowup};
use crate::invariants::{relative_value, standard_basis, Moments};
use crate::polytope::{DelzantPolytope, Face};
use crate::rational::{self, int_vec_to_q, Q};

/// A point of the manifold, up to the torus action: the open face stratum
/// containing its moment image.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSpec {
    pub face: Face,
}

impl PointSpec {
    /// A point of the open orbit.
    pub fn generic(p: &DelzantPolytope) -> Self {
        Self { face: p.whole_face() }
    }

    pub fn on_face(p: &DelzantPolytope, active: &[usize]) -> Result<Self> {
        p.face(active)
            .map(|face| Self { face })
            .ok_or_else(|| Error::InvalidArgument(format!("facets {active:?} do not meet in a face")))
    }

    /// Basis of the stabiliser subalgebra: the normals of the facets through
    /// the face.
    pub fn stabiliser(&self, p: &DelzantPolytope) -> Vec<Vec<Q>> {
        self.face.active.iter().map(|&i| int_vec_to_q(&p.facets()[i].normal)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Stable,
    Borderline,
    Unstable,
}

/// Values of the functional on the extreme rays of one cone.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeReport {
    pub vertex: usize,
    pub rays: Vec<(Vec<Q>, Q)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub status: Status,
    pub witness: Option<Vec<Q>>,
    /// Minimum of the functional over the primitive extreme rays; `None`
    /// when there is nothing to test.
    pub certificate: Option<Q>,
    pub eps: Q,
    pub a: Q,
    pub b: Q,
    pub vacuous: bool,
    pub cones: Vec<ConeReport>,
}

/// The face of `ps.face` on which `<u, .>` is minimal.
pub fn specialization(p: &DelzantPolytope, ps: &PointSpec, u: &[Q]) -> Result<Face> {
    check_len(p, u)?;
    if u.iter().all(Zero::is_zero) {
        return Err(Error::ZeroVector);
    }
    let values: Vec<(usize, Q)> =
        ps.face.vertices.iter().map(|&i| (i, rational::dot(u, &p.vertices()[i].coords))).collect();
    let min = values.iter().map(|(_, x)| x).min().expect("face has vertices").clone();
    let mut active: Option<Vec<usize>> = None;
    for (i, x) in &values {
        if *x != min {
            continue;
        }
        let a = &p.vertices()[*i].active;
        active = Some(match active {
            None => a.clone(),
            Some(prev) => prev.into_iter().filter(|j| a.contains(j)).collect(),
        });
    }
    let active = active.expect("some vertex attains the minimum");
    Ok(p.face(&active).expect("minimizing set is a face"))
}

/// `H_u(q) = -(<u, q> - b0(u)/a0)` and `Delta H_u(q) = -sum <u, e_i>`.
fn hamiltonian_at(p: &DelzantPolytope, m: &Moments, q: usize, u: &[Q]) -> (Q, Q) {
    let vd = &p.vertices()[q];
    let h = -(rational::dot(u, &vd.coords) - m.b0(u) / &m.a0);
    let lap = -edge_weights(vd, u).into_iter().sum::<Q>();
    (h, lap)
}

fn check_eps(eps: &Q) -> Result<()> {
    if !eps.is_positive() {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// Checks that `eps^2` is an admissible chop size at `q`.
fn check_chop(b: &Blowup<'_>, eps: &Q) -> Result<()> {
    if eps * eps >= b.chop_limit() {
        return Err(Error::EpsTooLarge(eps.to_string()));
    }
    Ok(())
}

/// Orthogonal complement of the stabiliser for the pairing of the blowup
/// at `b.vertex()`.
fn perp_at(b: &Blowup<'_>, stab: &[Vec<Q>], eps: &Q) -> Result<Vec<Vec<Q>>> {
    check_chop(b, eps)?;
    let g = b.gram(&standard_basis(b.polytope().dim()));
    perp_basis(&g, stab, eps).map_err(|e| match e {
        Error::NotPositiveDefinite(_) => Error::EpsTooLarge(eps.to_string()),
        other => other,
    })
}

/// Primitive generators of `C_q = {u in perp : <u, e> >= 0 for the edges of
/// the face at q}`.
pub fn cone_rays(p: &DelzantPolytope, face: &Face, q: usize, perp: &[Vec<Q>]) -> Result<Vec<Vec<Q>>> {
    let vd = &p.vertices()[q];
    let edges: Vec<Vec<Q>> = vd
        .active
        .iter()
        .zip(&vd.edge_generators)
        .filter(|(f, _)| !face.active.contains(f))
        .map(|(_, e)| int_vec_to_q(e))
        .collect();
    let rows: Vec<Vec<Q>> =
        edges.iter().map(|e| perp.iter().map(|b| rational::dot(b, e)).collect()).collect();
    let rays = cone::extreme_rays(&rows, perp.len()).ok_or(Error::DegenerateCone(q))?;
    Ok(rays
        .into_iter()
        .map(|c| {
            let u: Vec<Q> = (0..p.dim()).map(|i| perp.iter().zip(&c).map(|(b, ck)| &b[i] * ck).sum()).collect();
            rational::primitive_direction(&u)
        })
        .collect())
}

/// Decides the sign of `A H_u(q_u) + B Delta H_u(q_u)` over the nonzero
/// vectors of the `eps`-orthogonal complement of the stabiliser.
///
/// `overrides` replaces `(A_eps, B_eps)` by fixed values.
pub fn check_point_stability(
    p: &DelzantPolytope,
    ps: &PointSpec,
    eps: &Q,
    overrides: Option<(Q, Q)>,
) -> Result<StabilityVerdict> {
    check_eps(eps)?;
    let m = Moments::of(p)?;
    let (a, b) = match overrides {
        Some(ab) => ab,
        None => {
            let (a, b) = ab_from_data(p.dim(), &m.a0, &m.a1)?;
            (a.eval(eps)?, b.eval(eps)?)
        }
    };
    if ps.face.dim == 0 {
        return Ok(StabilityVerdict {
            status: Status::Stable,
            witness: None,
            certificate: None,
            eps: eps.clone(),
            a,
            b,
            vacuous: true,
            cones: Vec::new(),
        });
    }
    let stab = ps.stabiliser(p);
    let mut cones = Vec::with_capacity(ps.face.vertices.len());
    for &qv in &ps.face.vertices {
        let blowup = Blowup::with_moments(p, qv, m.clone())?;
        let perp = perp_at(&blowup, &stab, eps)?;
        let rays = cone_rays(p, &ps.face, qv, &perp)?;
        let values = rays
            .into_iter()
            .map(|u| {
                let (h, lap) = hamiltonian_at(p, &m, qv, &u);
                let f = &a * h + &b * lap;
                (u, f)
            })
            .collect();
        cones.push(ConeReport { vertex: qv, rays: values });
    }
    let best = cones
        .iter()
        .flat_map(|c| c.rays.iter())
        .min_by(|(u1, f1), (u2, f2)| f1.cmp(f2).then_with(|| u2.cmp(u1)))
        .cloned();
    let (status, witness, certificate) = match best {
        None => (Status::Stable, None, None),
        Some((u, f)) => {
            if f.is_positive() {
                (Status::Stable, None, Some(f))
            } else if f.is_zero() {
                (Status::Borderline, Some(u), Some(f))
            } else {
                (Status::Unstable, Some(u), Some(f))
            }
        }
    };
    Ok(StabilityVerdict { status, witness, certificate, eps: eps.clone(), a, b, vacuous: false, cones })
}

/// The relative Donaldson-Futaki invariant of the blowup at vertex `v`,
/// relative to `stab`, at `eps`.
pub fn relative_df_eps(p: &DelzantPolytope, v: usize, u: &[Q], stab: &[Vec<Q>], eps: &Q) -> Result<Q> {
    check_len(p, u)?;
    for s in stab {
        check_len(p, s)?;
    }
    if eps.is_negative() {
        return Err(Error::InvalidArgument(format!("eps must be nonnegative, got {eps}")));
    }
    let b = Blowup::new(p, v)?;
    if !eps.is_zero() {
        check_chop(&b, eps)?;
    }
    relative_value(u, stab, |x, y| b.inner_eps(x, y).eval(eps), |x| b.futaki_eps(x).eval(eps))
}

/// The functional `A H_u(q) + B Delta H_u(q)` at a vertex.
pub fn functional_at(p: &DelzantPolytope, q: usize, u: &[Q], eps: &Q) -> Result<Q> {
    check_len(p, u)?;
    let b = Blowup::new(p, q)?;
    b.functional(u, eps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub point: PointSpec,
    pub verdicts: Vec<std::result::Result<StabilityVerdict, Error>>,
    pub stable_on_grid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinderReport {
    pub grid: Vec<Q>,
    pub candidates: Vec<Candidate>,
    /// Index into `candidates` of the first face stable on the whole grid.
    pub found: Option<usize>,
}

impl FinderReport {
    pub fn point(&self) -> Option<&PointSpec> {
        self.found.map(|i| &self.candidates[i].point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FinderOptions {
    /// Also list the torus-fixed points, which pass vacuously.
    pub include_fixed_points: bool,
}

/// Runs the stability check over the faces of `p` in decreasing dimension and
/// reports the first face whose points are stable at every `eps` of the grid.
pub fn find_stable_point(p: &DelzantPolytope, grid: &[Q], opts: FinderOptions) -> FinderReport {
    let faces: Vec<Face> =
        p.faces().into_iter().filter(|f| opts.include_fixed_points || f.dim >= 1).collect();
    let candidates: Vec<Candidate> = faces
        .into_par_iter()
        .map(|face| {
            let point = PointSpec { face };
            let verdicts: Vec<_> = grid.iter().map(|e| check_point_stability(p, &point, e, None)).collect();
            let stable_on_grid =
                !grid.is_empty() && verdicts.iter().all(|v| matches!(v, Ok(v) if v.status == Status::Stable));
            Candidate { point, verdicts, stable_on_grid }
        })
        .collect();
    let found = candidates.iter().position(|c| c.stable_on_grid);
    FinderReport { grid: grid.to_vec(), candidates, found }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::relative_df;
    use crate::rational::{q, qr};

    fn simplex() -> DelzantPolytope {
        DelzantPolytope::simplex(2)
    }

    #[test]
    fn specialization_examples() {
        let p = simplex();
        let g = PointSpec::generic(&p);
        let f = specialization(&p, &g, &[q(-2), q(-1)]).unwrap();
        assert_eq!(f.dim, 0);
        assert_eq!(p.vertices()[f.vertices[0]].coords, vec![q(1), q(0)]);

        // the edge y = 0 is facet 1
        let edge = PointSpec::on_face(&p, &[1]).unwrap();
        let f = specialization(&p, &edge, &[q(-2), q(-1)]).unwrap();
        assert_eq!(p.vertices()[f.vertices[0]].coords, vec![q(1), q(0)]);

        let f = specialization(&p, &g, &[q(0), q(1)]).unwrap();
        assert_eq!(f.dim, 1);
        let hs: Vec<Q> = f.vertices.iter().map(|&i| rational::dot(&[q(0), q(1)], &p.vertices()[i].coords)).collect();
        assert!(hs.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(specialization(&p, &g, &[q(0), q(0)]), Err(Error::ZeroVector));
    }

    #[test]
    fn generic_simplex_is_stable() {
        let p = simplex();
        let v = check_point_stability(&p, &PointSpec::generic(&p), &qr(1, 10), None).unwrap();
        assert_eq!(v.status, Status::Stable);
        assert!(v.certificate.unwrap().is_positive());
        assert_eq!(v.cones.len(), 3);
    }

    #[test]
    fn fixed_point_is_vacuous() {
        let p = simplex();
        let ps = PointSpec::on_face(&p, &p.vertices()[0].active).unwrap();
        let v = check_point_stability(&p, &ps, &qr(1, 10), None).unwrap();
        assert_eq!(v.status, Status::Stable);
        assert!(v.vacuous && v.certificate.is_none());
    }

    #[test]
    fn laplacian_only_functional_fails() {
        let p = simplex();
        let v = check_point_stability(&p, &PointSpec::generic(&p), &qr(1, 10), Some((q(0), q(1)))).unwrap();
        assert_eq!(v.status, Status::Unstable);
        assert_eq!(v.witness, Some(vec![q(1), q(0)]));
        assert_eq!(v.certificate, Some(q(-1)));
    }

    #[test]
    fn edge_points_are_checked() {
        let p = simplex();
        let ps = PointSpec::on_face(&p, &[1]).unwrap();
        let v = check_point_stability(&p, &ps, &qr(1, 8), None).unwrap();
        assert_eq!(v.cones.len(), 2);
        assert!(v.cones.iter().all(|c| c.rays.len() == 1));
    }

    #[test]
    fn large_eps_rejected() {
        let p = simplex();
        let e = check_point_stability(&p, &PointSpec::generic(&p), &q(1), None);
        assert_eq!(e.unwrap_err(), Error::EpsTooLarge("1".into()));
    }

    #[test]
    fn relative_df_eps_base_cases() {
        let p = DelzantPolytope::cuboid(&[q(1), q(2)]).unwrap();
        let stab = vec![vec![q(1), q(1)]];
        let u = [q(2), q(-1)];
        assert_eq!(relative_df_eps(&p, 0, &u, &stab, &q(0)).unwrap(), relative_df(&p, &u, &stab).unwrap());
        assert_eq!(relative_df_eps(&p, 0, &[q(3), q(3)], &stab, &qr(1, 10)).unwrap(), q(0));
    }

    #[test]
    fn bridge_on_simplex() {
        let p = simplex();
        let eps = qr(1, 10);
        let v = check_point_stability(&p, &PointSpec::generic(&p), &eps, None).unwrap();
        for c in &v.cones {
            for (u, f) in &c.rays {
                let df = relative_df_eps(&p, c.vertex, u, &[], &eps).unwrap();
                assert_eq!(-df, f.clone());
            }
        }
    }

    #[test]
    fn finder_prefers_generic_point() {
        let p = simplex();
        let grid = [qr(1, 8), qr(1, 16), qr(1, 32)];
        let r = find_stable_point(&p, &grid, FinderOptions::default());
        assert_eq!(r.found, Some(0));
        assert_eq!(r.point().unwrap().face.dim, 2);
        assert_eq!(r.candidates.len(), 4);
        let r = find_stable_point(&p, &grid, FinderOptions { include_fixed_points: true });
        assert_eq!(r.candidates.len(), 7);
        assert!(find_stable_point(&p, &[], FinderOptions::default()).found.is_none());
    }
}
