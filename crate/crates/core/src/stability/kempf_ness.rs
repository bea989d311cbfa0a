//! Damped descent along complexified torus orbits towards a zero of
//! `A mu + B Delta mu (+ k mu_Euc)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::polytope::DelzantPolytope;
use crate::rational;

/// A moment map on the orbit coordinates `y` of a torus action.
pub trait MomentModel {
    fn dim(&self) -> usize;
    fn mu(&self, y: &[f64]) -> Vec<f64>;
    fn lap_mu(&self, y: &[f64]) -> Vec<f64>;

    /// Scale `k` of the Euclidean moment map, if present.
    fn euclidean_scale(&self) -> Option<f64> {
        None
    }

    /// `mu_Euc(y) = (|y_1|^2, ..., |y_r|^2)`.
    fn euclidean(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|x| x * x).collect()
    }

    /// Spanning vectors of the stabiliser subalgebra at `y`.
    fn stabiliser(&self, _y: &[f64]) -> Vec<Vec<f64>> {
        Vec::new()
    }

    fn contains(&self, _y: &[f64]) -> bool {
        true
    }
}

/// `mu(x) = x - c`, `Delta mu = lambda mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineModel {
    pub center: Vec<f64>,
    pub lambda: f64,
    pub euclidean: Option<f64>,
}

impl MomentModel for AffineModel {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn mu(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.center).map(|(a, c)| a - c).collect()
    }

    fn lap_mu(&self, y: &[f64]) -> Vec<f64> {
        self.mu(y).into_iter().map(|m| self.lambda * m).collect()
    }

    fn euclidean_scale(&self) -> Option<f64> {
        self.euclidean
    }
}

/// The moment map of the open orbit of a toric manifold with its Guillemin
/// metric, `g = 1/2 sum l_k log l_k`. The state `y` is the Legendre dual
/// coordinate `grad g(x)`, so the orbit acts by translation of `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToricOrbitModel {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    centroid: Vec<f64>,
}

impl ToricOrbitModel {
    pub fn new(p: &DelzantPolytope) -> Self {
        let normals = p.facets().iter().map(|f| f.normal.iter().map(|&a| a as f64).collect()).collect();
        let offsets = p.facets().iter().map(|f| rational::to_f64(&f.offset)).collect();
        let m = crate::invariants::Moments::of(p).expect("valid polytope");
        let centroid = m.first.iter().map(|x| rational::to_f64(&(x / &m.a0))).collect();
        Self { normals, offsets, centroid }
    }

    fn n(&self) -> usize {
        self.centroid.len()
    }

    fn slacks(&self, x: &DVector<f64>) -> Vec<f64> {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(a, c)| a.iter().zip(x.iter()).map(|(ai, xi)| ai * xi).sum::<f64>() - c)
            .collect()
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let l = self.slacks(x);
        let mut g = DVector::zeros(self.n());
        for (a, lk) in self.normals.iter().zip(&l) {
            for i in 0..self.n() {
                g[i] += 0.5 * a[i] * (lk.ln() + 1.0);
            }
        }
        g
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let l = self.slacks(x);
        let n = self.n();
        let mut h = DMatrix::zeros(n, n);
        for (a, lk) in self.normals.iter().zip(&l) {
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += 0.5 * a[i] * a[j] / lk;
                }
            }
        }
        h
    }

    /// Solves `grad g(x) = y` by damped Newton from the centroid.
    pub fn legendre(&self, y: &[f64]) -> Option<DVector<f64>> {
        let target = DVector::from_column_slice(y);
        let mut x = DVector::from_column_slice(&self.centroid);
        for _ in 0..200 {
            let r = self.grad(&x) - &target;
            if r.norm() < 1e-14 * (1.0 + target.norm()) {
                return Some(x);
            }
            let step = self.hessian(&x).lu().solve(&r)?;
            let mut s = 1.0;
            loop {
                let trial = &x - &step * s;
                if self.slacks(&trial).iter().all(|&l| l > 0.0) {
                    x = trial;
                    break;
                }
                s *= 0.5;
                if s < 1e-20 {
                    return None;
                }
            }
        }
        let r = self.grad(&x) - &target;
        (r.norm() < 1e-10 * (1.0 + target.norm())).then_some(x)
    }
}

impl MomentModel for ToricOrbitModel {
    fn dim(&self) -> usize {
        self.n()
    }

    fn mu(&self, y: &[f64]) -> Vec<f64> {
        match self.legendre(y) {
            Some(x) => x.iter().zip(&self.centroid).map(|(a, c)| a - c).collect(),
            None => vec![f64::NAN; self.n()],
        }
    }

    /// `(Delta mu)_j = 1/2 sum_i d_i G^{ij}` with `G` the Hessian of `g`.
    fn lap_mu(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n();
        let Some(x) = self.legendre(y) else {
            return vec![f64::NAN; n];
        };
        let Some(ginv) = self.hessian(&x).try_inverse() else {
            return vec![f64::NAN; n];
        };
        let l = self.slacks(&x);
        let mut out = vec![0.0; n];
        for i in 0..n {
            // d_i G = -1/2 sum_k a_k a_k^T a_ki / l_k^2
            let mut dg = DMatrix::zeros(n, n);
            for (a, lk) in self.normals.iter().zip(&l) {
                for r in 0..n {
                    for c in 0..n {
                        dg[(r, c)] -= 0.5 * a[r] * a[c] * a[i] / (lk * lk);
                    }
                }
            }
            let d_inv = -(&ginv * dg * &ginv);
            for (j, o) in out.iter_mut().enumerate() {
                *o += 0.5 * d_inv[(i, j)];
            }
        }
        out
    }

    fn contains(&self, y: &[f64]) -> bool {
        self.legendre(y).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub max_iterations: usize,
    pub armijo: f64,
    pub initial_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { max_iterations: 100_000, armijo: 1e-4, initial_step: 1.0 }
    }
}

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub point: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Residual norm after each accepted step, starting with the initial one.
    pub trace: Vec<f64>,
}

/// `A mu + B Delta mu + k mu_Euc`, projected off the stabiliser.
pub fn direction(m: &dyn MomentModel, a: f64, b: f64, y: &[f64]) -> Vec<f64> {
    let mu = m.mu(y);
    let lap = m.lap_mu(y);
    let mut rho: Vec<f64> = mu.iter().zip(&lap).map(|(x, l)| a * x + b * l).collect();
    if let Some(k) = m.euclidean_scale() {
        for (r, e) in rho.iter_mut().zip(m.euclidean(y)) {
            *r += k * e;
        }
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for s in m.stabiliser(y) {
        let mut w = s.clone();
        for o in &basis {
            let c: f64 = w.iter().zip(o).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(o).for_each(|(x, y)| *x -= c * y);
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-14 {
            basis.push(w.into_iter().map(|x| x / norm).collect());
        }
    }
    for o in &basis {
        let c: f64 = rho.iter().zip(o).map(|(x, y)| x * y).sum();
        rho.iter_mut().zip(o).for_each(|(x, y)| *x -= c * y);
    }
    rho
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Backtracking descent `y <- y - eta rho(y)` on `phi = |rho|^2 / 2`.
pub fn kempf_ness_search(
    m: &dyn MomentModel,
    a: f64,
    b: f64,
    start: &[f64],
    tol: f64,
    opts: SearchOptions,
) -> Result<SearchResult> {
    if start.len() != m.dim() {
        return Err(Error::InvalidArgument(format!("start has {} entries, model has {}", start.len(), m.dim())));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if !m.contains(start) {
        return Err(Error::InvalidArgument("start point is outside the model".into()));
    }
    let phi = |y: &[f64]| {
        let r = direction(m, a, b, y);
        0.5 * r.iter().map(|x| x * x).sum::<f64>()
    };
    let mut y = start.to_vec();
    let mut rho = direction(m, a, b, &y);
    let mut res = norm(&rho);
    let mut trace = vec![res];
    let fail = |y: Vec<f64>, res: f64, trace: Vec<f64>, iterations: usize| Error::NonConvergence {
        iterations,
        residual: res,
        last: y,
        trace,
    };
    for it in 0..opts.max_iterations {
        if res < tol {
            return Ok(SearchResult { point: y, residual: res, iterations: it, trace });
        }
        let f0 = 0.5 * res * res;
        // directional derivative of phi along -rho, from a unit-length probe
        let h = 1e-6;
        let probe: Vec<f64> = y.iter().zip(&rho).map(|(x, r)| x - h * r / res).collect();
        let slope = if m.contains(&probe) {
            let moved = direction(m, a, b, &probe);
            rho.iter().zip(&moved).map(|(r, s)| r * (s - r)).sum::<f64>() * res / h
        } else {
            f64::NAN
        };
        if !(slope < 0.0) {
            return Err(fail(y, res, trace, it));
        }
        let mut eta = opts.initial_step;
        let accepted = loop {
            let trial: Vec<f64> = y.iter().zip(&rho).map(|(x, r)| x - eta * r).collect();
            if m.contains(&trial) {
                let f = phi(&trial);
                if f <= f0 + opts.armijo * eta * slope {
                    break Some(trial);
                }
            }
            eta *= 0.5;
            if eta < 1e-16 {
                break None;
            }
        };
        let Some(next) = accepted else {
            return Err(fail(y, res, trace, it));
        };
        y = next;
        rho = direction(m, a, b, &y);
        res = norm(&rho);
        trace.push(res);
    }
    if res < tol {
        return Ok(SearchResult { point: y, residual: res, iterations: opts.max_iterations, trace });
    }
    Err(fail(y, res, trace, opts.max_iterations))
}
