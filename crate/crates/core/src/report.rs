//! Machine-readable reports for the command-line tool.
//!
//! Every report is a JSON object with the fields `schema`, `version`,
//! `command`, `inputs`, `results`, `oracle` (a list of `{identity, pass}`
//! checks), an optional `table` of sweep rows and `timing_ms`. Exact values
//! are strings `n` or `n/d` in lowest terms; only the moment solver emits
//! floating-point numbers.

use std::time::Instant;

use num_traits::{Signed, Zero};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::counts::{ehrhart_fit, lattice_moments, EhrhartData};
use crate::error::{Error, Result};
use crate::expansion::{ab_coefficients, check_against_chops, default_oracle_ts, eps_from_t, Blowup, EpsPoly, EpsRatio};
use crate::invariants::{self, standard_basis, Moments};
use crate::moment::{self, HamiltonianFamily};
use crate::polytope::{parse_polytope, DelzantPolytope};
use crate::rational::{self, q, Q};
use crate::stability::{check_point_stability, find_stable_point, relative_df_eps, FinderOptions, PointSpec, StabilityVerdict};

pub const SCHEMA: &str = "toric-stability/report";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub identity: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl OracleCheck {
    fn new(identity: impl Into<String>, pass: bool) -> Self {
        Self { identity: identity.into(), pass, detail: None }
    }

    fn from_result(identity: impl Into<String>, r: Result<()>) -> Self {
        match r {
            Ok(()) => Self::new(identity, true),
            Err(e) => Self { identity: identity.into(), pass: false, detail: Some(e.to_string()) },
        }
    }
}

/// One line of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub eps: String,
    pub quantity: String,
    pub value: String,
}

impl Row {
    fn new(eps: impl ToString, quantity: impl Into<String>, value: impl ToString) -> Self {
        Self { eps: eps.to_string(), quantity: quantity.into(), value: value.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub version: u32,
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub oracle: Vec<OracleCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<Row>,
    pub timing_ms: f64,
}

impl Report {
    fn new(command: &str, inputs: Value, results: Value, oracle: Vec<OracleCheck>, table: Vec<Row>, start: Instant) -> Self {
        Self {
            schema: SCHEMA,
            version: VERSION,
            command: command.to_string(),
            inputs,
            results,
            oracle,
            table,
            timing_ms: start.elapsed().as_secs_f64() * 1e3,
        }
    }

    pub fn oracle_passed(&self) -> bool {
        self.oracle.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// The sweep table as CSV with header `eps,quantity,value`.
    pub fn to_csv(&self) -> Result<String> {
        if self.table.is_empty() {
            return Err(Error::InvalidArgument(format!("`{}` has no sweep table; use --format json", self.command)));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.table {
            w.serialize(row).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// The JSON value with `timing_ms` removed, for comparisons.
    pub fn without_timing(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        if let Value::Object(m) = &mut v {
            m.remove("timing_ms");
        }
        v
    }
}

fn rat(x: &Q) -> Value {
    Value::String(x.to_string())
}

fn rats(v: &[Q]) -> Value {
    Value::Array(v.iter().map(rat).collect())
}

fn poly(p: &EpsPoly) -> Value {
    Value::Object(p.terms().map(|(e, c)| (e.to_string(), rat(c))).collect())
}

fn ratio(r: &EpsRatio) -> Value {
    json!({
        "num": poly(&r.num),
        "den": poly(&r.den),
        "leading": r.leading().map(|(e, c)| json!({ "exponent": e, "coefficient": rat(&c) })),
    })
}

fn data(e: &EhrhartData) -> Value {
    json!({
        "a0": rat(&e.a0),
        "a1": rat(&e.a1),
        "b0": rat(&e.b0),
        "b1": rat(&e.b1),
        "c0": rat(&e.c0),
        "d0": rat(&e.d0),
    })
}

fn matrix(m: &[Vec<Q>]) -> Value {
    Value::Array(m.iter().map(|r| rats(r)).collect())
}

fn polytope_json(p: &DelzantPolytope) -> Value {
    json!({
        "dim": p.dim(),
        "facets": p.facets().iter().map(|f| json!({ "normal": f.normal, "offset": rat(&f.offset) })).collect::<Vec<_>>(),
    })
}

pub fn cmd_validate(text: &str) -> Result<Report> {
    let start = Instant::now();
    let p = parse_polytope(text)?;
    let vertices: Vec<Value> = p
        .vertices()
        .iter()
        .map(|v| {
            json!({
                "coords": rats(&v.coords),
                "active": v.active,
                "edge_generators": v.edge_generators,
            })
        })
        .collect();
    let mut faces = vec![0usize; p.dim() + 1];
    for f in p.faces() {
        faces[f.dim] += 1;
    }
    let echo = p.to_text();
    let round_trip = parse_polytope(&echo).map(|r| r == p).unwrap_or(false);
    let results = json!({
        "polytope": polytope_json(&p),
        "vertices": vertices,
        "faces_by_dim": faces,
        "echo": echo,
    });
    Ok(Report::new("validate", json!({}), results, vec![OracleCheck::new("echo parses to the same polytope", round_trip)], vec![], start))
}

pub fn cmd_invariants(text: &str, u: &[Q], v: Option<&[Q]>) -> Result<Report> {
    let start = Instant::now();
    let p = parse_polytope(text)?;
    let integrals = invariants::integral_data(&p, u, v)?;
    let fit = ehrhart_fit(&p, u, v)?;
    let w = v.unwrap_or(u);
    let m = Moments::of(&p)?;
    let fut = m.futaki(u);
    let ip = m.inner_product(u, w);
    let basis = standard_basis(p.dim());
    let gram = invariants::gram(&p, &basis)?;
    let character = invariants::futaki_character(&p, &basis)?;
    let extremal = invariants::extremal_field(&p)?;
    let results = json!({
        "integrals": data(&integrals),
        "lattice_fit": data(&fit),
        "futaki": rat(&fut),
        "inner_product": rat(&ip),
        "gram": matrix(&gram.entries),
        "futaki_character": rats(&character.values),
        "extremal_field": rats(&extremal),
    });
    let oracle = vec![
        OracleCheck::new("lattice fit equals polytope integrals", fit == integrals),
        OracleCheck::new("futaki from lattice fit equals futaki from integrals", invariants::futaki_from(&fit) == fut),
        OracleCheck::new("inner product from lattice fit equals integrals", invariants::inner_product_oracle(&p, u, w)? == ip),
        OracleCheck::new("gram matrix is positive definite", gram.is_positive_definite()),
    ];
    let inputs = json!({ "u": rats(u), "v": v.map(rats) });
    Ok(Report::new("invariants", inputs, results, oracle, vec![], start))
}

/// Exceptional divisor size, given as `t` or as `eps` with `t = eps^2`.
#[derive(Debug, Clone, PartialEq)]
pub enum ChopSize {
    T(Q),
    Eps(Q),
}

impl ChopSize {
    pub fn t(&self) -> Q {
        match self {
            ChopSize::T(t) => t.clone(),
            ChopSize::Eps(e) => e * e,
        }
    }

    pub fn eps(&self) -> Option<Q> {
        match self {
            ChopSize::T(t) => eps_from_t(t),
            ChopSize::Eps(e) => Some(e.clone()),
        }
    }
}

pub fn cmd_blowup(text: &str, vertex: usize, u: &[Q], w: Option<&[Q]>, size: &ChopSize) -> Result<Report> {
    let start = Instant::now();
    let p = parse_polytope(text)?;
    crate::counts::check_len(&p, u)?;
    if let Some(w) = w {
        crate::counts::check_len(&p, w)?;
    }
    let b = Blowup::new(&p, vertex)?;
    let t = size.t();
    let limit = b.chop_limit();
    if !t.is_positive() || t >= limit {
        return Err(Error::ChopTooLarge { t: t.to_string(), limit: limit.to_string() });
    }
    let exp = b.expand(u, w);
    let expansions: Map<String, Value> = exp.named().iter().map(|(n, e)| (n.to_string(), poly(e))).collect();
    let (a, bb) = ab_coefficients(&p)?;
    let formal = b.formal_futaki(u);
    let eps = size.eps();
    let mut results = json!({
        "vertex": rats(&p.vertices()[vertex].coords),
        "chop_limit": rat(&limit),
        "t": rat(&t),
        "expansions": expansions,
        "at_t": data(&exp.eval_t(&t)),
        "futaki_eps": ratio(&b.futaki_eps(u)),
        "A": ratio(&a),
        "B": ratio(&bb),
        "h": rat(&formal.h),
        "lap_h": rat(&formal.lap_h),
    });
    if let Some(e) = &eps {
        results["eps"] = rat(e);
        results["functional"] = rat(&b.functional(u, e)?);
    }
    let mut ts = vec![t.clone()];
    ts.extend(default_oracle_ts().into_iter().filter(|s| *s < limit && *s != t));
    let mut oracle: Vec<OracleCheck> = ts
        .iter()
        .map(|s| OracleCheck::from_result(format!("expansions equal lattice fit of the chop at t = {s}"), check_against_chops(&p, vertex, u, w, &exp, std::slice::from_ref(s))))
        .collect();
    oracle.push(OracleCheck::new("formal split reassembles F_eps", formal.assemble().same_function(&b.futaki_eps(u))));
    let inputs = json!({ "vertex": vertex, "u": rats(u), "w": w.map(rats), "t": rat(&t), "eps": eps.as_ref().map(rat) });
    Ok(Report::new("blowup", inputs, results, oracle, vec![], start))
}

/// Which point to test: the open orbit, or the stratum of a face given by
/// the facets through it.
#[derive(Debug, Clone, PartialEq)]
pub enum FaceSelector {
    All,
    Facets(Vec<usize>),
}

impl FaceSelector {
    pub fn point(&self, p: &DelzantPolytope) -> Result<PointSpec> {
        match self {
            FaceSelector::All => Ok(PointSpec::generic(p)),
            FaceSelector::Facets(f) => PointSpec::on_face(p, f),
        }
    }

    fn to_value(&self) -> Value {
        match self {
            FaceSelector::All => json!("all"),
            FaceSelector::Facets(f) => json!(f),
        }
    }
}

fn verdict_json(v: &StabilityVerdict) -> Value {
    json!({
        "eps": rat(&v.eps),
        "status": v.status,
        "vacuous": v.vacuous,
        "witness": v.witness.as_deref().map(rats),
        "certificate": v.certificate.as_ref().map(rat),
        "A": rat(&v.a),
        "B": rat(&v.b),
        "cones": v.cones.iter().map(|c| json!({
            "vertex": c.vertex,
            "rays": c.rays.iter().map(|(u, f)| json!({ "u": rats(u), "value": rat(f) })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

fn status_name(v: &StabilityVerdict) -> &'static str {
    match v.status {
        crate::stability::Status::Stable => "Stable",
        crate::stability::Status::Borderline => "Borderline",
        crate::stability::Status::Unstable => "Unstable",
    }
}

fn verdict_rows(v: &StabilityVerdict) -> Vec<Row> {
    let mut rows = vec![Row::new(&v.eps, "status", status_name(v)), Row::new(&v.eps, "A", &v.a), Row::new(&v.eps, "B", &v.b)];
    if let Some(c) = &v.certificate {
        rows.push(Row::new(&v.eps, "certificate", c));
    }
    rows
}

fn is_csck(p: &DelzantPolytope) -> Result<bool> {
    let m = Moments::of(p)?;
    Ok(standard_basis(p.dim()).iter().all(|e| m.futaki(e).is_zero()))
}

/// Sign agreement between `-relative_df_eps` and the functional on every
/// ray of every cone.
fn bridge_check(p: &DelzantPolytope, ps: &PointSpec, v: &StabilityVerdict) -> Result<()> {
    let stab = ps.stabiliser(p);
    for c in &v.cones {
        for (u, f) in &c.rays {
            let df = relative_df_eps(p, c.vertex, u, &stab, &v.eps)?;
            if (-df.clone()).signum() != f.signum() {
                return Err(Error::OracleMismatch(format!("u = {u:?} at vertex {}: -DF = {}, functional = {f}", c.vertex, -df)));
            }
        }
    }
    Ok(())
}

fn check_grid(grid: &[Q]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty eps grid".into()));
    }
    Ok(())
}

pub fn cmd_check(text: &str, face: &FaceSelector, grid: &[Q]) -> Result<Report> {
    let start = Instant::now();
    check_grid(grid)?;
    let p = parse_polytope(text)?;
    let ps = face.point(&p)?;
    let verdicts = grid.iter().map(|e| check_point_stability(&p, &ps, e, None)).collect::<Result<Vec<_>>>()?;
    let mut oracle = Vec::new();
    if is_csck(&p)? {
        for v in &verdicts {
            oracle.push(OracleCheck::from_result(format!("relative DF sign matches the functional at eps = {}", v.eps), bridge_check(&p, &ps, v)));
        }
    }
    let results = json!({
        "face": { "active": ps.face.active, "dim": ps.face.dim },
        "verdicts": verdicts.iter().map(verdict_json).collect::<Vec<_>>(),
    });
    let table = verdicts.iter().flat_map(verdict_rows).collect();
    let inputs = json!({ "face": face.to_value(), "grid": rats(grid) });
    Ok(Report::new("check", inputs, results, oracle, table, start))
}

pub fn cmd_find_point(text: &str, grid: &[Q], include_fixed_points: bool) -> Result<Report> {
    let start = Instant::now();
    check_grid(grid)?;
    let p = parse_polytope(text)?;
    let r = find_stable_point(&p, grid, FinderOptions { include_fixed_points });
    let candidates: Vec<Value> = r
        .candidates
        .iter()
        .map(|c| {
            json!({
                "face": { "active": c.point.face.active, "dim": c.point.face.dim },
                "stable_on_grid": c.stable_on_grid,
                "verdicts": c.verdicts.iter().map(|v| match v {
                    Ok(v) => json!({ "eps": rat(&v.eps), "status": v.status, "certificate": v.certificate.as_ref().map(rat) }),
                    Err(e) => json!({ "error": e.to_string() }),
                }).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut table = Vec::new();
    if let Some(i) = r.found {
        for v in r.candidates[i].verdicts.iter().flatten() {
            table.extend(verdict_rows(v));
        }
    }
    let results = json!({
        "found": r.point().map(|ps| json!({ "active": ps.face.active, "dim": ps.face.dim })),
        "candidates": candidates,
    });
    let inputs = json!({ "grid": rats(grid), "include_fixed_points": include_fixed_points });
    Ok(Report::new("find-point", inputs, results, vec![], table, start))
}

/// Ehrhart identities up to the `kmax`-th admissible dilate: the top
/// coefficients equal the polytope integrals, and the polynomials fitted on
/// dilates above `kmax` reproduce every count below it.
pub fn cmd_oracle(text: &str, kmax: usize) -> Result<Report> {
    let start = Instant::now();
    if kmax == 0 {
        return Err(Error::InvalidArgument("kmax must be positive".into()));
    }
    let p = parse_polytope(text)?;
    let n = p.dim();
    let d = num_traits::ToPrimitive::to_i64(&p.denominator()).ok_or_else(|| Error::InvalidArgument("offset denominators are too large".into()))?;
    let mut dirs = standard_basis(n);
    dirs.push(vec![q(1); n]);

    let mut oracle = Vec::new();
    let mut fits = Vec::new();
    for u in &dirs {
        let fit = ehrhart_fit(&p, u, None)?;
        let integrals = invariants::integral_data(&p, u, None)?;
        oracle.push(OracleCheck::new(format!("lattice fit equals integrals for u = {}", fmt_vec(u)), fit == integrals));
        fits.push(json!({ "u": rats(u), "fit": data(&fit) }));
    }

    let window: Vec<i64> = (kmax + 1..=kmax + n + 3).map(|j| j as i64 * d).collect();
    let below: Vec<i64> = (1..=kmax).map(|j| j as i64 * d).collect();
    let moments = |ks: &[i64]| ks.iter().map(|&k| lattice_moments(&p, k)).collect::<Result<Vec<_>>>();
    let (mw, mb) = (moments(&window)?, moments(&below)?);
    let xs: Vec<Q> = window.iter().map(|&k| q(k)).collect();
    let eval = |c: &[Q], k: i64| c.iter().rev().fold(Q::zero(), |acc, a| acc * q(k) + a);
    let count_poly = rational::interpolate(&xs, &mw.iter().map(|m| q(m.count)).collect::<Vec<_>>());
    oracle.push(OracleCheck::new(
        format!("dimension polynomial reproduces counts for k <= {kmax}"),
        below.iter().zip(&mb).all(|(&k, m)| eval(&count_poly, k) == q(m.count)),
    ));
    for u in &dirs {
        let wt = rational::interpolate(&xs, &mw.iter().map(|m| m.weight(u)).collect::<Vec<_>>());
        let sq = rational::interpolate(&xs, &mw.iter().map(|m| m.cross(u, u)).collect::<Vec<_>>());
        oracle.push(OracleCheck::new(
            format!("weight polynomials reproduce sums for k <= {kmax}, u = {}", fmt_vec(u)),
            below.iter().zip(&mb).all(|(&k, m)| eval(&wt, k) == m.weight(u) && eval(&sq, k) == m.cross(u, u)),
        ));
    }
    for u in &dirs {
        oracle.push(OracleCheck::new(
            format!("futaki from counts equals futaki from integrals for u = {}", fmt_vec(u)),
            invariants::futaki_oracle(&p, u)? == invariants::futaki(&p, u)?,
        ));
    }
    let results = json!({
        "dilates": below,
        "counts": mb.iter().map(|m| m.count).collect::<Vec<_>>(),
        "dimension_polynomial": rats(&count_poly),
        "fits": fits,
    });
    Ok(Report::new("oracle", json!({ "kmax": kmax }), results, oracle, vec![], start))
}

fn fmt_vec(u: &[Q]) -> String {
    u.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOptions {
    pub order: usize,
    pub tol: f64,
    /// Shrinking-ball exponent; falls back to the model's `kappa`.
    pub kappa: Option<f64>,
    pub ball_c: f64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self { order: 2, tol: moment::DEFAULT_TOL, kappa: None, ball_c: 1.0 }
    }
}

fn complex_json(z: &[num_complex::Complex64]) -> Value {
    Value::Array(z.iter().map(|c| json!([c.re, c.im])).collect())
}

pub fn cmd_solve_moment(model_text: &str, grid: &[f64], opts: MomentOptions) -> Result<Report> {
    let start = Instant::now();
    if grid.is_empty() || grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument("eps grid must be nonempty and positive".into()));
    }
    let f: HamiltonianFamily = moment::parse_family(model_text)?;
    let validation = moment::validate_hypotheses(&f)?;
    let kappa = opts.kappa.or(f.kappa);
    let traces = grid
        .iter()
        .map(|&eps| match kappa {
            Some(k) => moment::surface_mode_solve(&f, eps, k, opts.ball_c, opts.order, opts.tol),
            None => moment::solve(&f, eps, opts.order, opts.tol),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = Vec::new();
    for t in &traces {
        for a in &t.approximations {
            table.push(Row::new(t.eps, format!("residual_b{}", a.order), a.residual));
        }
        table.push(Row::new(t.eps, "residual", t.residual));
        table.push(Row::new(t.eps, "norm", t.norm()));
    }
    let mut oracle = Vec::new();
    for t in &traces {
        oracle.push(OracleCheck::new(format!("residual below tol at eps = {}", t.eps), t.residual < opts.tol));
        oracle.push(OracleCheck::new(format!("active coordinates nonzero at eps = {}", t.eps), t.magnitudes.iter().all(|m| *m > 0.0)));
    }
    let mut slopes = Vec::new();
    if grid.len() >= 2 {
        for l in 1..=opts.order {
            let s = moment::residual_slope(&f, grid, l)?;
            oracle.push(OracleCheck::new(format!("order-{l} residual slope >= {}", l as f64 + 0.9), s >= l as f64 + 1.0 - 0.1));
            slopes.push(json!({ "order": l, "slope": if s.is_finite() { json!(s) } else { json!("inf") } }));
        }
    }
    let results = json!({
        "leading": validation.leading.iter().map(|l| json!({ "c": l.c, "p": l.p, "samples": l.samples })).collect::<Vec<_>>(),
        "kappa": kappa,
        "residual_slopes": slopes,
        "norm_slope": (grid.len() >= 2).then(|| moment::log_log_slope(&traces.iter().map(|t| (t.eps, t.norm())).collect::<Vec<_>>())),
        "traces": traces.iter().map(|t| json!({
            "eps": t.eps,
            "approximations": t.approximations.iter().map(|a| json!({ "order": a.order, "point": a.point, "residual": a.residual })).collect::<Vec<_>>(),
            "newton_steps": t.newton_steps,
            "residual_history": t.residual_history,
            "point": complex_json(&t.point),
            "residual": t.residual,
            "magnitudes": t.magnitudes,
        })).collect::<Vec<_>>(),
    });
    let inputs = json!({ "grid": grid, "order": opts.order, "tol": opts.tol, "kappa": opts.kappa, "ball_c": opts.ball_c });
    Ok(Report::new("solve-moment", inputs, results, oracle, table, start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qr;

    const SIMPLEX: &str = "dim 2\nfacet 1 0 0\nfacet 0 1 0\nfacet -1 -1 -1\n";
    const SQUARE: &str = "dim 2\nfacet 1 0 0\nfacet 0 1 0\nfacet -1 0 -1\nfacet 0 -1 -1\n";

    #[test]
    fn check_reports_three_stable_verdicts() {
        let grid = [qr(1, 8), qr(1, 16), qr(1, 32)];
        let r = cmd_check(SIMPLEX, &FaceSelector::All, &grid).unwrap();
        let v = r.results["verdicts"].as_array().unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|x| x["status"] == "Stable"));
        assert!(r.oracle_passed());
        assert!(r.to_csv().unwrap().starts_with("eps,quantity,value\n1/8,status,Stable\n"));
    }

    #[test]
    fn oracle_on_square_passes() {
        let r = cmd_oracle(SQUARE, 8).unwrap();
        assert!(!r.oracle.is_empty());
        assert!(r.oracle_passed(), "{:?}", r.oracle);
    }

    #[test]
    fn rationals_are_strings() {
        let r = cmd_blowup(SIMPLEX, 0, &[q(1), q(0)], None, &ChopSize::Eps(qr(1, 2))).unwrap();
        assert_eq!(r.results["expansions"]["c0"], json!({ "0": "1/12", "8": "-1/12" }));
        assert_eq!(r.results["t"], "1/4");
        assert!(r.oracle_passed(), "{:?}", r.oracle);
    }

    #[test]
    fn csv_needs_a_table() {
        let r = cmd_validate(SIMPLEX).unwrap();
        assert!(r.to_csv().is_err());
        assert!(r.oracle_passed());
    }
}
