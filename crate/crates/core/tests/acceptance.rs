//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};

use toric_stability::counts::{ehrhart_fit, jet_weights, EhrhartData};
use toric_stability::expansion::{check_against_chops, expand_counts, futaki_eps_formal, ab_coefficients, EpsPoly};
use toric_stability::invariants::{futaki, futaki_oracle, integral_data, relative_df, standard_basis};
use toric_stability::moment::{self, approximate_solution, newton_polish, parse_family, residual_slope, surface_mode_solve, HamiltonianFamily};
use toric_stability::rational::{binomial, factorial, interpolate, q, qr, to_f64};
use toric_stability::stability::kempf_ness::{kempf_ness_search, AffineModel, SearchOptions, ToricOrbitModel};
use toric_stability::stability::{check_point_stability, functional_at, relative_df_eps, specialization, PointSpec, Status};
use toric_stability::{chop_corner, DelzantPolytope, Q};

const C1_BUDGET: Duration = Duration::from_secs(30);
const C6_BUDGET: Duration = Duration::from_secs(10);
const JET_MAX_L: usize = 12;
const BRIDGE_MIN_TUPLES: usize = 20;
const SLOPE_MARGIN: f64 = 0.1;
const SOLVER_GRID: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];
const SOLVER_ORDERS: [usize; 3] = [1, 2, 3];
const NEWTON_TOL: f64 = 1e-12;
const SURFACE_KAPPA: f64 = 0.25;
const SURFACE_C: f64 = 1.0;
const SURFACE_GRID: [f64; 2] = [1e-2, 1e-4];
const KN_TOL: f64 = 1e-10;
const KN_MAX_ITERATIONS: usize = 1000;
const KN_POINT_TOL: f64 = 1e-9;

const MODELS: [(&str, &str); 3] = [
    ("perturbed", include_str!("../models/perturbed.txt")),
    ("coupled", include_str!("../models/coupled.txt")),
    ("frozen", include_str!("../models/frozen.txt")),
];

type Outcome = Result<(), String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn v(xs: &[i64]) -> Vec<Q> {
    xs.iter().map(|&x| q(x)).collect()
}

fn simplex2() -> DelzantPolytope {
    DelzantPolytope::simplex(2)
}

fn square() -> DelzantPolytope {
    DelzantPolytope::cuboid(&[q(1), q(1)]).unwrap()
}

fn rectangle(a: i64, b: i64) -> DelzantPolytope {
    DelzantPolytope::cuboid(&[q(a), q(b)]).unwrap()
}

fn vertex_at(p: &DelzantPolytope, coords: &[i64]) -> usize {
    p.vertex_index(&v(coords)).expect("vertex exists")
}

fn directions(n: usize) -> Vec<Vec<Q>> {
    let mut d = standard_basis(n);
    d.push(vec![q(1); n]);
    d
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let s = simplex2();
    let chopped = chop_corner(&s, vertex_at(&s, &[0, 0]), &qr(1, 3)).map_err(|e| e.to_string())?;
    let corpus = [("2-simplex", s), ("unit square", square()), ("1x2 rectangle", rectangle(1, 2)), ("chopped 2-simplex", chopped), ("3-simplex", DelzantPolytope::simplex(3))];
    for (name, p) in &corpus {
        let dirs = directions(p.dim());
        for u in &dirs {
            for w in &dirs {
                let fit = ehrhart_fit(p, u, Some(w)).map_err(|e| e.to_string())?;
                let int = integral_data(p, u, Some(w)).map_err(|e| e.to_string())?;
                ensure(fit == int, || format!("{name}, u = {u:?}, v = {w:?}: fit {fit:?} vs integrals {int:?}"))?;
            }
        }
    }
    // hand values: volume, half the lattice boundary, first moment, second moment
    let d = integral_data(&corpus[0].1, &v(&[1, 0]), None).unwrap();
    let want = EhrhartData { a0: qr(1, 2), a1: qr(3, 2), b0: qr(1, 6), b1: qr(1, 2), c0: qr(1, 12), d0: qr(1, 12) };
    ensure(d == want, || format!("2-simplex data {d:?}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < C1_BUDGET, || format!("took {elapsed:?}"))
}

fn criterion_2() -> Outcome {
    let ts = [qr(1, 3), qr(1, 4), qr(1, 5)];
    let s = simplex2();
    let sq = square();
    let cases = [(&s, [0, 0]), (&s, [1, 0]), (&sq, [0, 0]), (&sq, [1, 1])];
    for (p, at) in cases {
        let vtx = vertex_at(p, &at);
        let dirs = directions(2);
        for u in &dirs {
            for w in std::iter::once(None).chain(dirs.iter().map(Some)) {
                let w = w.map(|x| x.as_slice());
                let exp = expand_counts(p, vtx, u, w).map_err(|e| e.to_string())?;
                check_against_chops(p, vtx, u, w, &exp, &ts).map_err(|e| format!("vertex {at:?}, u = {u:?}: {e}"))?;
            }
        }
    }
    let exp = expand_counts(&s, vertex_at(&s, &[0, 0]), &v(&[1, 0]), None).unwrap();
    let want = &EpsPoly::constant(qr(1, 12)) - &EpsPoly::term(8, qr(1, 12));
    ensure(exp.c0 == want, || format!("c0(eps) = {:?}", exp.c0))
}

fn criterion_3() -> Outcome {
    let vectors: [&[i64]; 4] = [&[1, 0, 0], &[0, 1, 0], &[1, 2, 3], &[-2, 1, 5]];
    for n in [2usize, 3] {
        let p = DelzantPolytope::simplex(n);
        for vd in p.vertices() {
            for raw in vectors {
                let u = v(&raw[..n]);
                let w: Vec<Q> = vd.edge_generators.iter().map(|e| e.iter().zip(&u).map(|(a, b)| q(*a) * b).sum()).collect();
                let wt_v: Q = -w.iter().sum::<Q>();
                let sq_v: Q = w.iter().map(|x| x * x).sum();
                let mut sq_series = Vec::new();
                for l in 1..=JET_MAX_L {
                    let j = jet_weights(vd, &u, l);
                    let dim = binomial((n + l - 1) as i64, n as i64);
                    let wt = binomial((n + l - 1) as i64, (n + 1) as i64) * &wt_v;
                    ensure(q(j.dim) == dim && j.wt == wt, || format!("n = {n}, l = {l}, u = {u:?}: jets {j:?}"))?;
                    sq_series.push(j.sq);
                }
                let ls: Vec<Q> = (1..=JET_MAX_L as i64).map(q).collect();
                let c = interpolate(&ls, &sq_series);
                let lead = c.get(n + 2).cloned().unwrap_or_else(Q::zero);
                ensure(c.iter().skip(n + 3).all(Zero::is_zero), || format!("sq degree exceeds {} for u = {u:?}", n + 2))?;
                let want = (sq_v + &wt_v * &wt_v) / factorial(n + 2);
                ensure(lead == want, || format!("n = {n}, u = {u:?}: leading sq coefficient {lead} vs {want}"))?;
            }
        }
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    let polys = [("2-simplex", simplex2()), ("square", square()), ("1x2", rectangle(1, 2)), ("2x3", rectangle(2, 3)), ("3x1", rectangle(3, 1))];
    for (name, p) in &polys {
        for u in directions(2) {
            let a = futaki(p, &u).map_err(|e| e.to_string())?;
            let b = futaki_oracle(p, &u).map_err(|e| e.to_string())?;
            ensure(a.is_zero() && b.is_zero(), || format!("{name}, u = {u:?}: futaki {a}, lattice {b}"))?;
        }
    }
    let bases = [(2, qr(1, 2), qr(3, 2)), (2, q(1), q(2)), (3, qr(1, 6), q(1)), (4, qr(7, 3), qr(5, 2))];
    for (n, a0, a1) in bases {
        let base = EhrhartData { a0, a1, b0: q(0), b1: q(0), c0: qr(1, 7), d0: qr(2, 9) };
        let f = futaki_eps_formal(n, &base, &q(0), &q(0));
        ensure(f.is_identically_zero(), || format!("n = {n}: F_eps = {f:?}"))?;
    }
    let unimodular: [[i64; 4]; 3] = [[1, 0, 0, 1], [2, 1, 1, 1], [1, -3, 0, 1]];
    for (name, p) in &polys {
        for m in unimodular {
            let basis = vec![v(&m[..2]), v(&m[2..])];
            for b in &basis {
                let r = relative_df(p, b, &basis).map_err(|e| e.to_string())?;
                ensure(r.is_zero(), || format!("{name}: relative DF of {b:?} is {r}"))?;
            }
        }
    }
    Ok(())
}

fn criterion_5() -> Outcome {
    let polys = [simplex2(), square(), rectangle(1, 2), rectangle(2, 1)];
    let us: [[i64; 2]; 6] = [[1, 2], [2, 1], [-1, 3], [3, -1], [-2, -1], [1, -3]];
    let grid = [qr(1, 8), qr(1, 16)];
    let mut tuples = 0;
    let mut disagreements = Vec::new();
    let mut compare = |p: &DelzantPolytope, ps: &PointSpec, u: &[Q], eps: &Q| -> Result<(), String> {
        let face = specialization(p, ps, u).map_err(|e| e.to_string())?;
        if face.dim != 0 {
            return Ok(());
        }
        let qv = face.vertices[0];
        let df = relative_df_eps(p, qv, u, &ps.stabiliser(p), eps).map_err(|e| e.to_string())?;
        let f = functional_at(p, qv, u, eps).map_err(|e| e.to_string())?;
        tuples += 1;
        if (-df.clone()).signum() != f.signum() {
            disagreements.push(format!("u = {u:?}, vertex {qv}, eps = {eps}: -DF = {}, functional = {f}", -df));
        }
        Ok(())
    };
    for p in &polys {
        let ps = PointSpec::generic(p);
        for u in us {
            for eps in &grid {
                compare(p, &ps, &v(&u), eps)?;
            }
        }
        for facet in 0..p.facets().len() {
            let ps = PointSpec::on_face(p, &[facet]).map_err(|e| e.to_string())?;
            for eps in &grid {
                let verdict = check_point_stability(p, &ps, eps, None).map_err(|e| e.to_string())?;
                for cone in &verdict.cones {
                    for (u, _) in &cone.rays {
                        compare(p, &ps, u, eps)?;
                    }
                }
            }
        }
    }
    ensure(tuples >= BRIDGE_MIN_TUPLES, || format!("only {tuples} tuples"))?;
    ensure(disagreements.is_empty(), || format!("{} disagreements: {:?}", disagreements.len(), disagreements))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let grid = [qr(1, 8), qr(1, 16), qr(1, 32)];
    for (name, p) in [("2-simplex", simplex2()), ("unit square", square())] {
        for eps in &grid {
            let verdict = check_point_stability(&p, &PointSpec::generic(&p), eps, None).map_err(|e| e.to_string())?;
            ensure(verdict.status == Status::Stable && !verdict.vacuous, || format!("{name} generic at {eps}: {:?}", verdict.status))?;
            ensure(verdict.certificate.as_ref().is_some_and(|c| c.is_positive()), || format!("{name}: certificate {:?}", verdict.certificate))?;
            for vd in p.vertices() {
                let ps = PointSpec::on_face(&p, &vd.active).map_err(|e| e.to_string())?;
                let verdict = check_point_stability(&p, &ps, eps, None).map_err(|e| e.to_string())?;
                ensure(verdict.status == Status::Stable && verdict.vacuous, || format!("{name} vertex {:?}: not vacuous", vd.coords))?;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < C6_BUDGET, || format!("took {elapsed:?}"))
}

/// The models written out by hand, independent of the monomial evaluator.
fn hand_residual(name: &str, eps: f64, z: &[num_complex::Complex64]) -> f64 {
    let re = |c: num_complex::Complex64| c.re;
    let h: Vec<f64> = match name {
        "perturbed" => vec![-eps + (1.0 + eps) * z[0].norm_sqr()],
        "coupled" => vec![-eps + z[0].norm_sqr() + z[0].re.powi(3), -eps * eps + z[1].norm_sqr()],
        "frozen" => vec![
            -2.0 * eps + eps * eps + (1.0 + eps) * z[0].norm_sqr() + z[0].norm_sqr() * z[1].norm_sqr() - z[0].norm_sqr().powi(2),
            -3.0 * eps.powi(3) + z[1].norm_sqr() + 2.0 * re(z[1] * z[1] * z[0].conj()),
        ],
        _ => unreachable!(),
    };
    h.into_iter().map(f64::abs).fold(0.0, f64::max)
}

fn criterion_7() -> Outcome {
    for (name, text) in MODELS {
        let f: HamiltonianFamily = parse_family(text).map_err(|e| e.to_string())?;
        for l in SOLVER_ORDERS {
            let s = residual_slope(&f, &SOLVER_GRID, l).map_err(|e| e.to_string())?;
            ensure(s >= l as f64 + 1.0 - SLOPE_MARGIN, || format!("{name}: order {l} slope {s}"))?;
        }
        for eps in SOLVER_GRID {
            let start = approximate_solution(&f, eps, 2).map_err(|e| e.to_string())?;
            let z: Vec<num_complex::Complex64> = start.point.iter().map(|x| num_complex::Complex64::new(*x, 0.0)).collect();
            let (mine, theirs) = (hand_residual(name, eps, &z), f.residual(&z, eps));
            ensure((mine - theirs).abs() <= 1e-12 * theirs.max(1e-300) + start.noise, || format!("{name} at {eps}: evaluators disagree, {mine} vs {theirs}"))?;
            let t = newton_polish(&f, eps, &start, NEWTON_TOL).map_err(|e| format!("{name} at {eps}: {e}"))?;
            ensure(t.residual < NEWTON_TOL, || format!("{name} at {eps}: residual {}", t.residual))?;
            ensure(t.magnitudes.iter().all(|m| *m > 0.0), || format!("{name} at {eps}: zero coordinate"))?;
            let hand = hand_residual(name, eps, &t.point);
            ensure(hand < NEWTON_TOL, || format!("{name} at {eps}: hand-evaluated residual {hand}"))?;
        }
        for eps in SURFACE_GRID {
            let t = surface_mode_solve(&f, eps, SURFACE_KAPPA, SURFACE_C, 2, NEWTON_TOL).map_err(|e| format!("{name} at {eps}: {e}"))?;
            let radius = SURFACE_C * eps.powf(SURFACE_KAPPA);
            let norms = t.approximations.iter().map(|a| a.point.iter().map(|x| x * x).sum::<f64>().sqrt()).chain([t.norm()]);
            for n in norms {
                ensure(n <= radius, || format!("{name} at {eps}: norm {n} outside {radius}"))?;
            }
        }
    }
    let f = parse_family(MODELS[0].1).unwrap();
    let t = moment::solve(&f, 1e-3, 1, NEWTON_TOL).unwrap();
    ensure((t.magnitudes[0] - (1e-3f64 / (1.0 + 1e-3)).sqrt()).abs() < 1e-12, || format!("perturbed zero {:?}", t.magnitudes))
}

fn criterion_8() -> Outcome {
    let cases = [(vec![0.2, 0.5, -0.1], -3.0, 1.0, 0.1), (vec![1.0, -2.0], 2.0, 0.5, 0.25), (vec![0.0], -1.0, 2.0, 1.0)];
    for (center, lambda, a, b) in cases {
        let m = AffineModel { center: center.clone(), lambda, euclidean: None };
        let start = vec![1.0; center.len()];
        let r = kempf_ness_search(&m, a, b, &start, KN_TOL, SearchOptions::default()).map_err(|e| e.to_string())?;
        ensure(r.residual < KN_TOL && r.iterations < KN_MAX_ITERATIONS, || format!("residual {} after {}", r.residual, r.iterations))?;
        ensure(r.point.iter().zip(&center).all(|(x, c)| (x - c).abs() < KN_POINT_TOL), || format!("converged to {:?}", r.point))?;
    }
    let p = simplex2();
    let eps = qr(1, 10);
    let verdict = check_point_stability(&p, &PointSpec::generic(&p), &eps, None).map_err(|e| e.to_string())?;
    let (a, b) = ab_coefficients(&p).map_err(|e| e.to_string())?;
    let (a, b) = (to_f64(&a.eval(&eps).unwrap()), to_f64(&b.eval(&eps).unwrap()));
    let m = ToricOrbitModel::new(&p);
    let found = kempf_ness_search(&m, a, b, &[0.3, -0.7], KN_TOL, SearchOptions::default());
    ensure(found.is_ok() == (verdict.status == Status::Stable), || format!("search {:?} vs verdict {:?}", found.map(|r| r.residual), verdict.status))
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "Ehrhart fits equal polytope integrals", criterion_1),
        (2, "blowup expansions equal chopped-polytope fits", criterion_2),
        (3, "jet dimension, weight and square-weight formulas", criterion_3),
        (4, "vanishing identities", criterion_4),
        (5, "relative DF sign matches the fixed-point functional", criterion_5),
        (6, "stability regression", criterion_6),
        (7, "moment solver orders, zeros and shrinking ball", criterion_7),
        (8, "Kempf-Ness descent", criterion_8),
    ];
    let mut failed = 0;
    for (n, what, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("[PASS] criterion {n}: {what} ({secs:.2} s)"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] criterion {n}: {what} ({secs:.2} s): {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
