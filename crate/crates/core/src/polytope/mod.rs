//! Delzant polytopes given by facet inequalities `<a, x> >= c`.
//!
//! Vertices, edge generators and faces are computed once at validation
//! time and cached on the polytope.

mod integrate;

pub use integrate::{boundary_integrate, integrate, integrate_with, triangulate, Apex, Polynomial};

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, dot_int, factorial, int_vec_to_q, parse_q, Q};

/// One inequality `<normal, x> >= offset`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: Q,
}

impl Facet {
    pub fn new(normal: Vec<i64>, offset: Q) -> Self {
        Self { normal, offset }
    }

    pub fn slack(&self, x: &[Q]) -> Q {
        dot_int(&self.normal, x) - &self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexData {
    pub coords: Vec<Q>,
    /// Indices of the facets through the vertex, sorted.
    pub active: Vec<usize>,
    /// `edge_generators[i]` is dual to the normal of `active[i]`: it pairs
    /// to 1 with that normal and to 0 with the others.
    pub edge_generators: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    pub active: Vec<usize>,
    pub dim: usize,
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelzantPolytope {
    dim: usize,
    facets: Vec<Facet>,
    vertices: Vec<VertexData>,
}

fn fmt_vec(v: &[Q]) -> String {
    let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(","))
}

fn fmt_ivec(v: &[i64]) -> String {
    let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(","))
}

/// Calls `f` on every `k`-subset of `0..m` in lexicographic order.
pub(crate) fn for_each_subset(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + m - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

fn to_i64(x: &Q) -> Option<i64> {
    if x.is_integer() {
        x.to_integer().to_i64()
    } else {
        None
    }
}

/// Validates a facet list and builds the vertex cache.
pub fn validate_delzant(dim: usize, facets: Vec<Facet>) -> Result<DelzantPolytope> {
    if dim == 0 {
        return Err(Error::NotFullDimensional("dimension must be positive".into()));
    }
    for (i, f) in facets.iter().enumerate() {
        if f.normal.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "facet {i} has {} normal entries, expected {dim}",
                f.normal.len()
            )));
        }
    }
    check_bounded(dim, &facets)?;
    for (i, f) in facets.iter().enumerate() {
        if gcd_all(&f.normal) != 1 {
            return Err(Error::NonPrimitiveNormal { facet: i, normal: fmt_ivec(&f.normal) });
        }
    }

    let rows: Vec<Vec<Q>> = facets.iter().map(|f| int_vec_to_q(&f.normal)).collect();
    let mut points: BTreeSet<Vec<Q>> = BTreeSet::new();
    for_each_subset(facets.len(), dim, |s| {
        let m: Vec<Vec<Q>> = s.iter().map(|&i| rows[i].clone()).collect();
        let b: Vec<Q> = s.iter().map(|&i| facets[i].offset.clone()).collect();
        if let Some(x) = rational::solve(&m, &b) {
            if facets.iter().all(|f| !f.slack(&x).is_negative()) {
                points.insert(x);
            }
        }
    });
    if points.is_empty() {
        return Err(Error::NotFullDimensional("the inequalities have no vertex".into()));
    }
    let points: Vec<Vec<Q>> = points.into_iter().collect();
    let base = &points[0];
    let diffs: Vec<Vec<Q>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    if rational::rank(&diffs) < dim {
        return Err(Error::NotFullDimensional(format!(
            "{} vertices span an affine subspace of dimension {}",
            points.len(),
            rational::rank(&diffs)
        )));
    }

    let mut vertices = Vec::with_capacity(points.len());
    for x in points {
        let active: Vec<usize> =
            (0..facets.len()).filter(|&i| facets[i].slack(&x).is_zero()).collect();
        if active.len() != dim {
            return Err(Error::NonSimpleVertex { vertex: fmt_vec(&x), facets: active });
        }
        vertices.push(VertexData { coords: x, active, edge_generators: Vec::new() });
    }

    for (i, _) in facets.iter().enumerate() {
        let on: Vec<&Vec<Q>> =
            vertices.iter().filter(|v| v.active.contains(&i)).map(|v| &v.coords).collect();
        let span = match on.split_first() {
            None => 0,
            Some((b, rest)) => {
                let d: Vec<Vec<Q>> =
                    rest.iter().map(|p| p.iter().zip(b.iter()).map(|(a, c)| a - c).collect()).collect();
                rational::rank(&d)
            }
        };
        if on.is_empty() || span + 1 < dim {
            return Err(Error::RedundantFacet { facet: i });
        }
    }

    for v in &mut vertices {
        let m: Vec<Vec<Q>> = v.active.iter().map(|&i| rows[i].clone()).collect();
        let d = rational::det(&m);
        if d.abs() != Q::one() {
            return Err(Error::NonUnimodularVertex { vertex: fmt_vec(&v.coords), det: d.to_string() });
        }
        let inv = rational::inverse(&m).expect("unimodular matrix is invertible");
        v.edge_generators = (0..dim)
            .map(|col| (0..dim).map(|row| to_i64(&inv[row][col]).expect("integral inverse")).collect())
            .collect();
    }

    Ok(DelzantPolytope { dim, facets, vertices })
}

/// Rejects facet systems whose recession cone `{d : A d >= 0}` is nonzero.
fn check_bounded(dim: usize, facets: &[Facet]) -> Result<()> {
    let rows: Vec<Vec<Q>> = facets.iter().map(|f| int_vec_to_q(&f.normal)).collect();
    let unbounded = |d: &[Q]| Error::Unbounded { direction: fmt_vec(&rational::primitive_direction(d)) };
    let recedes = |d: &[Q]| rows.iter().all(|r| !rational::dot(r, d).is_negative());
    if rational::rank(&rows) < dim {
        let k = rational::kernel(&rows, dim);
        return Err(unbounded(&k[0]));
    }
    let mut found: Option<Vec<Q>> = None;
    for_each_subset(rows.len(), dim - 1, |s| {
        if found.is_some() {
            return;
        }
        let m: Vec<Vec<Q>> = s.iter().map(|&i| rows[i].clone()).collect();
        let k = rational::kernel(&m, dim);
        if k.len() != 1 {
            return;
        }
        let d = &k[0];
        let neg: Vec<Q> = d.iter().map(|x| -x).collect();
        if recedes(d) {
            found = Some(d.clone());
        } else if recedes(&neg) {
            found = Some(neg);
        }
    });
    match found {
        Some(d) => Err(unbounded(&d)),
        None => Ok(()),
    }
}

impl DelzantPolytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn vertices(&self) -> &[VertexData] {
        &self.vertices
    }

    pub fn vertex(&self, index: usize) -> Result<&VertexData> {
        self.vertices.get(index).ok_or(Error::NotAVertex(index))
    }

    pub fn vertex_index(&self, coords: &[Q]) -> Option<usize> {
        self.vertices.iter().position(|v| v.coords == coords)
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        self.facets.iter().all(|f| !f.slack(x).is_negative())
    }

    /// The standard simplex `x_i >= 0, sum x_i <= 1`.
    pub fn simplex(dim: usize) -> Self {
        let mut facets: Vec<Facet> = (0..dim)
            .map(|i| {
                let mut a = vec![0; dim];
                a[i] = 1;
                Facet::new(a, Q::zero())
            })
            .collect();
        facets.push(Facet::new(vec![-1; dim], rational::q(-1)));
        validate_delzant(dim, facets).expect("standard simplex is Delzant")
    }

    /// The box `0 <= x_i <= sides[i]`.
    pub fn cuboid(sides: &[Q]) -> Result<Self> {
        let dim = sides.len();
        let mut facets = Vec::with_capacity(2 * dim);
        for (i, s) in sides.iter().enumerate() {
            let mut a = vec![0; dim];
            a[i] = 1;
            facets.push(Facet::new(a.clone(), Q::zero()));
            a[i] = -1;
            facets.push(Facet::new(a, -s.clone()));
        }
        validate_delzant(dim, facets)
    }

    /// All nonempty faces, each represented by its full set of active facets.
    /// The whole polytope comes first, then faces by decreasing dimension.
    pub fn faces(&self) -> Vec<Face> {
        let mut sets: BTreeSet<Vec<usize>> = BTreeSet::new();
        for v in &self.vertices {
            let k = v.active.len();
            for mask in 0u32..(1 << k) {
                let s: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| v.active[i]).collect();
                sets.insert(s);
            }
        }
        let mut faces: Vec<Face> = sets.into_iter().map(|s| self.face(&s).expect("nonempty face")).collect();
        faces.sort_by(|a, b| b.dim.cmp(&a.dim).then_with(|| a.active.cmp(&b.active)));
        faces
    }

    /// The face cut out by the facets `active`, or `None` if it is empty.
    pub fn face(&self, active: &[usize]) -> Option<Face> {
        let mut active = active.to_vec();
        active.sort_unstable();
        active.dedup();
        let vertices: Vec<usize> = (0..self.vertices.len())
            .filter(|&i| active.iter().all(|a| self.vertices[i].active.contains(a)))
            .collect();
        if vertices.is_empty() || active.len() > self.dim {
            return None;
        }
        Some(Face { dim: self.dim - active.len(), active, vertices })
    }

    pub fn whole_face(&self) -> Face {
        self.face(&[]).expect("polytope is nonempty")
    }

    /// The lattice length of the edge leaving vertex `v` along generator `i`.
    pub fn edge_length(&self, v: usize, i: usize) -> Result<Q> {
        let vd = self.vertex(v)?;
        let e = &vd.edge_generators[i];
        let mut best: Option<Q> = None;
        for f in &self.facets {
            let rate = dot_int(&f.normal, &int_vec_to_q(e));
            if rate.is_negative() {
                let s = f.slack(&vd.coords) / -rate;
                if best.as_ref().is_none_or(|b| &s < b) {
                    best = Some(s);
                }
            }
        }
        Ok(best.expect("bounded polytope"))
    }

    /// Applies `x -> m x + shift` for a unimodular integer matrix `m`.
    pub fn transform(&self, m: &[Vec<i64>], shift: &[Q]) -> Result<Self> {
        let mq: Vec<Vec<Q>> = m.iter().map(|r| int_vec_to_q(r)).collect();
        let inv = rational::inverse(&mq).ok_or_else(|| Error::InvalidArgument("matrix is singular".into()))?;
        let inv_t = rational::transpose(&inv);
        let mut facets = Vec::with_capacity(self.facets.len());
        for f in &self.facets {
            let a = int_vec_to_q(&f.normal);
            let na: Vec<Q> = inv_t.iter().map(|r| rational::dot(r, &a)).collect();
            let normal: Option<Vec<i64>> = na.iter().map(to_i64).collect();
            let normal = normal.ok_or_else(|| Error::InvalidArgument("matrix is not unimodular".into()))?;
            let offset = &f.offset + rational::dot(&na, shift);
            facets.push(Facet::new(normal, offset));
        }
        validate_delzant(self.dim, facets)
    }

    pub fn translate(&self, shift: &[Q]) -> Result<Self> {
        let id: Vec<Vec<i64>> =
            (0..self.dim).map(|i| (0..self.dim).map(|j| i64::from(i == j)).collect()).collect();
        self.transform(&id, shift)
    }

    /// Least common multiple of the offset denominators.
    pub fn denominator(&self) -> BigInt {
        rational::lcm_of_denominators(self.facets.iter().map(|f| &f.offset))
    }

    /// Serializes to the line-oriented text format read by [`parse_polytope`].
    pub fn to_text(&self) -> String {
        let mut s = format!("dim {}\n", self.dim);
        for f in &self.facets {
            s.push_str("facet");
            for a in &f.normal {
                let _ = write!(s, " {a}");
            }
            let _ = writeln!(s, " {}", f.offset);
        }
        s
    }
}

/// Cuts vertex `v` off with the facet `<N, x> >= <N, v> + t`, where `N` is
/// the sum of the normals through `v`.
pub fn chop_corner(p: &DelzantPolytope, v: usize, t: &Q) -> Result<DelzantPolytope> {
    let vd = p.vertex(v)?;
    if !t.is_positive() {
        return Err(Error::InvalidArgument(format!("chop size must be positive, got {t}")));
    }
    let normal: Vec<i64> =
        (0..p.dim).map(|k| vd.active.iter().map(|&i| p.facets[i].normal[k]).sum()).collect();
    let base = dot_int(&normal, &vd.coords);
    let limit = p
        .vertices
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != v)
        .map(|(_, w)| dot_int(&normal, &w.coords) - &base)
        .min()
        .expect("polytope has at least two vertices");
    if t >= &limit {
        return Err(Error::ChopTooLarge { t: t.to_string(), limit: limit.to_string() });
    }
    let mut facets = p.facets.clone();
    facets.push(Facet::new(normal, base + t));
    validate_delzant(p.dim, facets)
}

/// Volume removed by a chop of size `t` in dimension `n`.
pub fn chop_volume(n: usize, t: &Q) -> Q {
    num_traits::pow(t.clone(), n) / factorial(n)
}

fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out
}

/// Parses the polytope text format:
///
/// ```text
/// # 2-simplex
/// dim 2
/// facet 1 0 0
/// facet 0 1 0
/// facet -1 -1 -1
/// ```
pub fn parse_facets(text: &str) -> Result<(usize, Vec<Facet>)> {
    let mut dim: Option<usize> = None;
    let mut facets = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("");
        let toks = tokens(line);
        let Some(&(col0, head)) = toks.first() else {
            continue;
        };
        match head {
            "dim" => {
                if dim.is_some() {
                    return Err(Error::parse(line_no, col0 + 1, "duplicate `dim` line"));
                }
                if toks.len() != 2 {
                    return Err(Error::parse(line_no, col0 + 1, "expected `dim <n>`"));
                }
                let (c, tok) = toks[1];
                let n: usize = tok
                    .parse()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| Error::parse(line_no, c + 1, format!("invalid dimension `{tok}`")))?;
                dim = Some(n);
            }
            "facet" => {
                let n = dim.ok_or_else(|| Error::parse(line_no, col0 + 1, "`facet` before `dim`"))?;
                if toks.len() != n + 2 {
                    return Err(Error::parse(
                        line_no,
                        col0 + 1,
                        format!("expected {} normal entries and an offset, found {} values", n, toks.len() - 1),
                    ));
                }
                let mut normal = Vec::with_capacity(n);
                for &(c, tok) in &toks[1..=n] {
                    let a: i64 = tok
                        .parse()
                        .map_err(|_| Error::parse(line_no, c + 1, format!("invalid integer `{tok}`")))?;
                    normal.push(a);
                }
                let (c, tok) = toks[n + 1];
                let offset =
                    parse_q(tok).ok_or_else(|| Error::parse(line_no, c + 1, format!("invalid rational `{tok}`")))?;
                facets.push(Facet::new(normal, offset));
            }
            other => {
                return Err(Error::parse(line_no, col0 + 1, format!("unknown directive `{other}`")));
            }
        }
    }
    let dim = dim.ok_or_else(|| Error::parse(1, 1, "missing `dim` line"))?;
    Ok((dim, facets))
}

pub fn parse_polytope(text: &str) -> Result<DelzantPolytope> {
    let (dim, facets) = parse_facets(text)?;
    validate_delzant(dim, facets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr};

    fn square() -> DelzantPolytope {
        DelzantPolytope::cuboid(&[q(1), q(1)]).unwrap()
    }

    #[test]
    fn simplex_vertices() {
        let p = DelzantPolytope::simplex(2);
        let coords: Vec<Vec<Q>> = p.vertices().iter().map(|v| v.coords.clone()).collect();
        assert_eq!(coords, vec![vec![q(0), q(0)], vec![q(0), q(1)], vec![q(1), q(0)]]);
        let v = &p.vertices()[p.vertex_index(&[q(1), q(0)]).unwrap()];
        let mut e = v.edge_generators.clone();
        e.sort();
        assert_eq!(e, vec![vec![-1, 0], vec![-1, 1]]);
    }

    #[test]
    fn square_has_four_vertices() {
        assert_eq!(square().vertices().len(), 4);
    }

    #[test]
    fn cone_is_unbounded() {
        let f = vec![Facet::new(vec![1, 0], q(0)), Facet::new(vec![0, 1], q(0))];
        assert!(matches!(validate_delzant(2, f), Err(Error::Unbounded { .. })));
    }

    #[test]
    fn strip_is_unbounded() {
        let f = vec![
            Facet::new(vec![1, 0], q(0)),
            Facet::new(vec![-1, 0], q(-1)),
            Facet::new(vec![0, 1], q(0)),
        ];
        assert!(matches!(validate_delzant(2, f), Err(Error::Unbounded { .. })));
    }

    #[test]
    fn rejects_bad_normals_and_vertices() {
        let f = vec![Facet::new(vec![2, 0], q(0)), Facet::new(vec![0, 1], q(0)), Facet::new(vec![-1, -1], q(-1))];
        assert!(matches!(validate_delzant(2, f), Err(Error::NonPrimitiveNormal { facet: 0, .. })));

        let f = vec![Facet::new(vec![1, 0], q(0)), Facet::new(vec![0, 1], q(0)), Facet::new(vec![-1, -2], q(-2))];
        assert!(matches!(validate_delzant(2, f), Err(Error::NonUnimodularVertex { .. })));

        // square pyramid apex has four facets
        let f = vec![
            Facet::new(vec![0, 0, 1], q(0)),
            Facet::new(vec![1, 0, -1], q(-1)),
            Facet::new(vec![-1, 0, -1], q(-1)),
            Facet::new(vec![0, 1, -1], q(-1)),
            Facet::new(vec![0, -1, -1], q(-1)),
        ];
        assert!(matches!(validate_delzant(3, f), Err(Error::NonSimpleVertex { .. })));

        let mut f = square().facets().to_vec();
        f.push(Facet::new(vec![1, 1], q(-5)));
        assert!(matches!(validate_delzant(2, f), Err(Error::RedundantFacet { facet: 4 })));
    }

    #[test]
    fn empty_and_flat_inputs() {
        let f = vec![Facet::new(vec![1], q(2)), Facet::new(vec![-1], q(-1))];
        assert!(matches!(validate_delzant(1, f), Err(Error::NotFullDimensional(_))));
    }

    #[test]
    fn chop_simplex() {
        let p = DelzantPolytope::simplex(2);
        let c = chop_corner(&p, 0, &qr(1, 3)).unwrap();
        let coords: Vec<Vec<Q>> = c.vertices().iter().map(|v| v.coords.clone()).collect();
        assert_eq!(
            coords,
            vec![vec![q(0), qr(1, 3)], vec![q(0), q(1)], vec![qr(1, 3), q(0)], vec![q(1), q(0)]]
        );
        assert_eq!(integrate(&c, &Polynomial::constant(2, q(1))).unwrap(), qr(4, 9));
        assert!(matches!(chop_corner(&p, 0, &q(2)), Err(Error::ChopTooLarge { .. })));
        assert!(matches!(chop_corner(&p, 0, &q(1)), Err(Error::ChopTooLarge { .. })));
        assert!(matches!(chop_corner(&p, 7, &qr(1, 3)), Err(Error::NotAVertex(7))));
    }

    #[test]
    fn small_chop_approaches_vertices() {
        let p = DelzantPolytope::simplex(2);
        let t = qr(1, 1_000_000);
        let c = chop_corner(&p, 0, &t).unwrap();
        for w in c.vertices() {
            let near = p.vertices().iter().any(|v| {
                v.coords.iter().zip(&w.coords).all(|(a, b)| (a - b).abs() <= t)
            });
            assert!(near);
        }
    }

    #[test]
    fn faces_of_square() {
        let faces = square().faces();
        assert_eq!(faces.len(), 1 + 4 + 4);
        assert_eq!(faces[0].dim, 2);
        assert_eq!(faces.iter().filter(|f| f.dim == 1).count(), 4);
        assert!(faces.iter().filter(|f| f.dim == 1).all(|f| f.vertices.len() == 2));
    }

    #[test]
    fn edge_lengths() {
        let r = DelzantPolytope::cuboid(&[q(1), q(2)]).unwrap();
        let v = r.vertex_index(&[q(0), q(0)]).unwrap();
        let mut l = vec![r.edge_length(v, 0).unwrap(), r.edge_length(v, 1).unwrap()];
        l.sort();
        assert_eq!(l, vec![q(1), q(2)]);
    }

    #[test]
    fn text_round_trip() {
        let p = chop_corner(&DelzantPolytope::simplex(3), 1, &qr(1, 4)).unwrap();
        let back = parse_polytope(&p.to_text()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn parse_errors_cite_position() {
        let e = parse_facets("dim 2\nfacet 1 0 0\nfacet 1 x 0\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 3, column: 9, message: "invalid integer `x`".into() });
        let e = parse_facets("# comment\nfacet 1 0 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_facets("dim 2\nfacet 1 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, column: 1, .. }));
        let e = parse_facets("dim 2\nfacet 1 0 1/0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, column: 11, .. }));
    }

    #[test]
    fn subsets_enumerate_binomially() {
        let mut count = 0;
        for_each_subset(6, 3, |_| count += 1);
        assert_eq!(count, 20);
        let mut count = 0;
        for_each_subset(4, 0, |s| {
            assert!(s.is_empty());
            count += 1
        });
        assert_eq!(count, 1);
    }

    #[test]
    fn transform_moves_vertices() {
        let p = DelzantPolytope::simplex(2);
        let t = p.transform(&[vec![1, 1], vec![0, 1]], &[q(3), qr(-1, 2)]).unwrap();
        assert!(t.vertex_index(&[q(4), qr(-1, 2)]).is_some());
        assert!(t.vertex_index(&[q(4), qr(1, 2)]).is_some());
    }
}
