//! Perturbative zeros of finite-dimensional Hamiltonian families
//! `h_{eps,j}(z)`, `j = 1..w`, on a ball in `C^r`.
//!
//! Approximate zeros are power series in `sigma = eps^{1/2}` along the real
//! axis, built one order at a time; Newton polishing then finds a genuine
//! zero of `(Re h_1, ..., Re h_w)` in the first `w` coordinates with the
//! remaining coordinates frozen at zero. The Hamiltonian `h_j` is the real
//! part of its listed polynomial.

mod model;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use model::{parse_family, to_text};

/// `coeff * z^z * zbar^zbar * eps^eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub z: Vec<u32>,
    pub zbar: Vec<u32>,
    pub eps: u32,
}

impl Monomial {
    fn degree_in(&self, j: usize) -> u32 {
        self.z[j] + self.zbar[j]
    }

    fn z_degree(&self) -> u32 {
        self.z.iter().chain(&self.zbar).sum()
    }

    fn eval(&self, z: &[Complex64], eps: f64) -> Complex64 {
        let mut v = Complex64::new(self.coeff * eps.powi(self.eps as i32), 0.0);
        for (k, zk) in z.iter().enumerate() {
            v *= zk.powu(self.z[k]) * zk.conj().powu(self.zbar[k]);
        }
        v
    }

    /// `(d/dx_i, d/dy_i)` at `z`, where `z_i = x_i + i y_i`.
    fn gradient(&self, z: &[Complex64], eps: f64, i: usize) -> (Complex64, Complex64) {
        let (a, b) = (self.z[i], self.zbar[i]);
        if a + b == 0 {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        let mut rest = Complex64::new(self.coeff * eps.powi(self.eps as i32), 0.0);
        for (k, zk) in z.iter().enumerate() {
            if k != i {
                rest *= zk.powu(self.z[k]) * zk.conj().powu(self.zbar[k]);
            }
        }
        let zi = z[i];
        let dz = if a > 0 { zi.powu(a - 1) * zi.conj().powu(b) * a as f64 } else { Complex64::new(0.0, 0.0) };
        let dzbar = if b > 0 { zi.powu(a) * zi.conj().powu(b - 1) * b as f64 } else { Complex64::new(0.0, 0.0) };
        (rest * (dz + dzbar), rest * Complex64::i() * (dz - dzbar))
    }

    pub fn to_text(&self) -> String {
        let list = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        format!("{:?} {} {} {}", self.coeff, list(&self.z), list(&self.zbar), self.eps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianFamily {
    /// Number of variables and Hamiltonians.
    pub r: usize,
    /// `h_1..h_w` must vanish.
    pub w: usize,
    pub models: Vec<Vec<Monomial>>,
    pub radius: f64,
    pub kappa: Option<f64>,
}

impl HamiltonianFamily {
    /// `h_{eps,j}(z)`, zero-based `j`.
    pub fn eval(&self, j: usize, z: &[Complex64], eps: f64) -> f64 {
        self.models[j].iter().map(|m| m.eval(z, eps)).sum::<Complex64>().re
    }

    /// `max_{j < w} |h_{eps,j}(z)|`.
    pub fn residual(&self, z: &[Complex64], eps: f64) -> f64 {
        (0..self.w).map(|j| self.eval(j, z, eps).abs()).fold(0.0, f64::max)
    }

    pub fn residual_real(&self, x: &[f64], eps: f64) -> f64 {
        self.residual(&to_complex(x), eps)
    }

    /// Rounding level of [`residual`](Self::residual) at `z`: a few ulps of
    /// the largest sum of monomial magnitudes.
    pub fn noise_floor(&self, z: &[Complex64], eps: f64) -> f64 {
        let scale = self.models.iter().take(self.w).map(|m| m.iter().map(|t| t.eval(z, eps).norm()).sum::<f64>()).fold(0.0, f64::max);
        8.0 * f64::EPSILON * scale
    }
}

fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

fn norm(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Leading behaviour `h_{eps,j}(0) = c eps^p + ...` of an active Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Leading {
    pub c: f64,
    pub p: u32,
    /// `h_{eps,j}(0)` at `eps = 1e-6` and `1e-7`.
    pub samples: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub leading: Vec<Leading>,
}

impl ValidationReport {
    /// `min_j p_j / 2`.
    pub fn e(&self) -> f64 {
        self.leading.iter().map(|l| l.p).min().map_or(0.0, |p| p as f64 / 2.0)
    }
}

pub fn validate_hypotheses(f: &HamiltonianFamily) -> Result<ValidationReport> {
    if f.w == 0 || f.w > f.r || f.models.len() != f.r {
        return Err(Error::InvalidArgument(format!("family with r = {}, w = {} and {} models", f.r, f.w, f.models.len())));
    }
    for model in &f.models {
        if model.iter().any(|m| m.z.len() != f.r || m.zbar.len() != f.r) {
            return Err(Error::InvalidArgument("monomial exponent length differs from r".into()));
        }
    }
    let mut leading = Vec::with_capacity(f.w);
    for (j, model) in f.models.iter().take(f.w).enumerate() {
        let violation = |m: &Monomial, why: &str| Error::StructureViolation { index: j + 1, message: format!("`{}` {why}", m.to_text()) };
        let mut quad = None;
        for m in model.iter().filter(|m| m.z_degree() > 0) {
            match m.degree_in(j) {
                0 => return Err(violation(m, &format!("does not contain z{0} or zbar{0}", j + 1))),
                1 => return Err(violation(m, &format!("has nonzero differential where z{} = 0", j + 1))),
                _ => {}
            }
            if m.eps == 0 && m.z_degree() == 2 {
                if m.z[j] == 1 && m.zbar[j] == 1 {
                    quad = Some(m.coeff);
                } else {
                    return Err(violation(m, "is quadratic at eps = 0 but not |z|^2"));
                }
            }
        }
        if quad != Some(1.0) {
            return Err(Error::StructureViolation {
                index: j + 1,
                message: format!("coefficient of |z{}|^2 at eps = 0 is {}, not 1", j + 1, quad.unwrap_or(0.0)),
            });
        }
        let constant = model.iter().filter(|m| m.z_degree() == 0).min_by_key(|m| m.eps);
        let Some(lead) = constant.filter(|m| m.eps > 0 && m.coeff < 0.0) else {
            let message = match constant {
                None => "h(0) vanishes identically".to_string(),
                Some(m) => format!("leading term `{}` of h(0) is not c eps^p with c < 0, p > 0", m.to_text()),
            };
            return Err(Error::StructureViolation { index: j + 1, message });
        };
        let zero = vec![Complex64::new(0.0, 0.0); f.r];
        let samples = [f.eval(j, &zero, 1e-6), f.eval(j, &zero, 1e-7)];
        if samples.iter().any(|s| !(*s < 0.0)) {
            return Err(Error::StructureViolation { index: j + 1, message: format!("h(0) sampled at small eps is {samples:?}") });
        }
        leading.push(Leading { c: lead.coeff, p: lead.eps, samples });
    }
    Ok(ValidationReport { leading })
}

/// Truncated power series in `sigma`, `s[k]` the coefficient of `sigma^k`.
fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    for (i, x) in a.iter().enumerate().filter(|(_, x)| **x != 0.0) {
        for (k, y) in b.iter().take(n - i).enumerate() {
            out[i + k] += x * y;
        }
    }
    out
}

/// Series of `h_j` along real series `b`, truncated at `b[0].len()` terms.
fn series_eval(model: &[Monomial], b: &[Vec<f64>]) -> Vec<f64> {
    let n = b[0].len();
    let mut out = vec![0.0; n];
    for m in model {
        let shift = 2 * m.eps as usize;
        if shift >= n {
            continue;
        }
        let mut s = vec![0.0; n];
        s[shift] = m.coeff;
        for (k, bk) in b.iter().enumerate() {
            for _ in 0..m.z[k] + m.zbar[k] {
                s = series_mul(&s, bk);
            }
        }
        out.iter_mut().zip(s).for_each(|(o, x)| *o += x);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximateSolution {
    pub order: usize,
    pub eps: f64,
    pub point: Vec<f64>,
    /// `max_{j < w} |h_{eps,j}(b_l)|` as evaluated.
    pub residual: f64,
    /// Residuals at or below this level are rounding noise.
    pub noise: f64,
    /// Coefficients of `b_{l,j}` in powers of `sigma = eps^{1/2}`.
    pub series: Vec<Vec<f64>>,
}

/// The order-`l` approximate zero `b_l`, with `|h_{eps,j}(b_l)| = O(eps^{l+1})`.
///
/// `b_{1,j} = (-c_j)^{1/2} eps^{p_j/2}`; the correction of `b_j` at
/// `sigma^{p_j+m}` removes the error of `h_j` at `sigma^{2 p_j + m}` and is
/// `-psi / (2 lambda_{1,j})`. All indices are corrected simultaneously at
/// each `m`, which is exact because the corrections decouple at that order.
pub fn approximate_solution(f: &HamiltonianFamily, eps: f64, order: usize) -> Result<ApproximateSolution> {
    if order == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    let report = validate_hypotheses(f)?;
    let max_p = report.leading.iter().map(|l| l.p as usize).max().unwrap_or(0);
    let n = (2 * order + 2).max(max_p + 1);
    let mut b = vec![vec![0.0; n]; f.r];
    let mut levels = vec![0usize; f.w];
    for (j, l) in report.leading.iter().enumerate() {
        let p = l.p as usize;
        b[j][p] = (-l.c).sqrt();
        levels[j] = (2 * order + 1).saturating_sub(2 * p);
    }
    for m in 1..=levels.iter().copied().max().unwrap_or(0) {
        let updates: Vec<(usize, usize, f64)> = (0..f.w)
            .filter(|&j| m <= levels[j])
            .map(|j| {
                let p = report.leading[j].p as usize;
                let psi = series_eval(&f.models[j], &b)[2 * p + m];
                (j, p + m, -psi / (2.0 * b[j][p]))
            })
            .collect();
        for (j, k, v) in updates {
            b[j][k] = v;
        }
    }
    let sigma = eps.sqrt();
    let point: Vec<f64> = b.iter().map(|s| s.iter().rev().fold(0.0, |acc, c| acc * sigma + c)).collect();
    if point.iter().map(|x| x * x).sum::<f64>().sqrt() > f.radius {
        return Err(Error::OrderUnreachable { order });
    }
    let z = to_complex(&point);
    let residual = f.residual(&z, eps);
    let noise = f.noise_floor(&z, eps);
    Ok(ApproximateSolution { order, eps, point, residual, noise, series: b })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub eps: f64,
    pub approximations: Vec<ApproximateSolution>,
    pub newton_steps: usize,
    /// Residual before polishing and after each accepted Newton step.
    pub residual_history: Vec<f64>,
    pub point: Vec<Complex64>,
    pub residual: f64,
    /// `|z_j|` for the active coordinates.
    pub magnitudes: Vec<f64>,
}

impl SolveTrace {
    pub fn norm(&self) -> f64 {
        norm(&self.point)
    }
}

pub const DEFAULT_TOL: f64 = 1e-12;
const DAMPING: f64 = 1e-10;
const MAX_NEWTON: usize = 100;
const MAX_STALLS: usize = 3;

fn check_coordinates(f: &HamiltonianFamily, z: &[Complex64], eps: f64) -> Result<()> {
    match z.iter().take(f.w).position(|c| c.norm() == 0.0) {
        Some(j) => Err(Error::CoordinateCollapse { index: j + 1, value: f.eval(j, z, eps) }),
        None => Ok(()),
    }
}

fn check_ball(z: &[Complex64], ball: Option<f64>) -> Result<()> {
    match ball {
        Some(radius) if norm(z) > radius => Err(Error::BallViolation { norm: norm(z), radius }),
        _ => Ok(()),
    }
}

fn polish(f: &HamiltonianFamily, eps: f64, start: &[f64], tol: f64, ball: Option<f64>) -> Result<(Vec<Complex64>, Vec<f64>)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    let w = f.w;
    let mut z = to_complex(start);
    let mut res = f.residual(&z, eps);
    let mut history = vec![res];
    let mut damping = DAMPING;
    let mut stalls = 0;
    loop {
        check_coordinates(f, &z, eps)?;
        check_ball(&z, ball)?;
        if res < tol {
            return Ok((z, history));
        }
        if history.len() > MAX_NEWTON {
            return Err(Error::NewtonDiverged(format!("no convergence after {MAX_NEWTON} steps, residuals {history:?}")));
        }
        let fv = DVector::from_iterator(w, (0..w).map(|k| f.eval(k, &z, eps)));
        let mut jac = DMatrix::<f64>::zeros(w, 2 * w);
        for (k, model) in f.models.iter().take(w).enumerate() {
            for i in 0..w {
                for m in model {
                    let (dx, dy) = m.gradient(&z, eps, i);
                    jac[(k, 2 * i)] += dx.re;
                    jac[(k, 2 * i + 1)] += dy.re;
                }
            }
        }
        let gram = &jac * jac.transpose() + DMatrix::identity(w, w) * damping;
        let step = gram.lu().solve(&(-&fv)).map(|y| jac.transpose() * y);
        let mut accepted = None;
        if let Some(step) = step {
            let mut s = 1.0;
            for _ in 0..30 {
                let trial: Vec<Complex64> = z
                    .iter()
                    .enumerate()
                    .map(|(i, c)| if i < w { c + Complex64::new(s * step[2 * i], s * step[2 * i + 1]) } else { *c })
                    .collect();
                let r = f.residual(&trial, eps);
                if r < res {
                    accepted = Some((trial, r));
                    break;
                }
                s *= 0.5;
            }
        }
        match accepted {
            Some((trial, r)) => {
                z = trial;
                res = r;
                history.push(r);
                stalls = 0;
                damping = DAMPING;
            }
            None => {
                stalls += 1;
                if stalls >= MAX_STALLS {
                    return Err(Error::NewtonDiverged(format!("{MAX_STALLS} damped steps without decrease, residuals {history:?}")));
                }
                damping *= 1e4;
            }
        }
    }
}

fn finish(f: &HamiltonianFamily, eps: f64, approximations: Vec<ApproximateSolution>, z: Vec<Complex64>, history: Vec<f64>) -> SolveTrace {
    let residual = f.residual(&z, eps);
    SolveTrace {
        eps,
        approximations,
        newton_steps: history.len() - 1,
        residual_history: history,
        magnitudes: z.iter().take(f.w).map(|c| c.norm()).collect(),
        point: z,
        residual,
    }
}

/// Damped Gauss-Newton on `(Re h_1, ..., Re h_w)` in `(Re z_j, Im z_j)`,
/// `j <= w`, from `start`.
pub fn newton_polish(f: &HamiltonianFamily, eps: f64, start: &ApproximateSolution, tol: f64) -> Result<SolveTrace> {
    let (z, history) = polish(f, eps, &start.point, tol, None)?;
    Ok(finish(f, eps, vec![start.clone()], z, history))
}

fn approximations(f: &HamiltonianFamily, eps: f64, order: usize, ball: Option<f64>) -> Result<Vec<ApproximateSolution>> {
    let mut out = Vec::with_capacity(order);
    for l in 1..=order {
        let a = approximate_solution(f, eps, l)?;
        check_ball(&to_complex(&a.point), ball)?;
        out.push(a);
    }
    Ok(out)
}

/// `b_1, ..., b_order` followed by Newton polishing of `b_order`.
pub fn solve(f: &HamiltonianFamily, eps: f64, order: usize, tol: f64) -> Result<SolveTrace> {
    let approx = approximations(f, eps, order, None)?;
    let (z, history) = polish(f, eps, &approx[order - 1].point, tol, None)?;
    Ok(finish(f, eps, approx, z, history))
}

/// [`solve`] inside the shrinking ball `|b| <= c eps^kappa`, which needs
/// `kappa < min_j p_j / 2`.
pub fn surface_mode_solve(f: &HamiltonianFamily, eps: f64, kappa: f64, c: f64, order: usize, tol: f64) -> Result<SolveTrace> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("ball constant c = {c} must be positive")));
    }
    let bound = validate_hypotheses(f)?.e();
    if !(kappa > 0.0 && kappa < bound) {
        return Err(Error::KappaTooLarge { kappa, bound });
    }
    let ball = Some(c * eps.powf(kappa));
    let approx = approximations(f, eps, order, ball)?;
    let (z, history) = polish(f, eps, &approx[order - 1].point, tol, ball)?;
    Ok(finish(f, eps, approx, z, history))
}

/// [`solve`] over a grid of `eps`, in grid order.
pub fn sweep(f: &HamiltonianFamily, grid: &[f64], order: usize, tol: f64) -> Vec<Result<SolveTrace>> {
    grid.par_iter().map(|&eps| solve(f, eps, order, tol)).collect()
}

/// Least-squares slope of `log y` against `log x`, skipping `y = 0`;
/// `+inf` when no point survives.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(_, y)| *y != 0.0).map(|(x, y)| (x.ln(), y.abs().ln())).collect();
    match pts.len() {
        0 => f64::INFINITY,
        1 => f64::NAN,
        n => {
            let n = n as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
            sxy / sxx
        }
    }
}

/// Empirical order of `max_j |h_{eps,j}(b_l)|` over `grid`, with residuals
/// at the rounding level counted as exact zeros.
pub fn residual_slope(f: &HamiltonianFamily, grid: &[f64], order: usize) -> Result<f64> {
    let pts = grid
        .par_iter()
        .map(|&eps| approximate_solution(f, eps, order).map(|a| (eps, if a.residual <= a.noise { 0.0 } else { a.residual })))
        .collect::<Result<Vec<_>>>()?;
    Ok(log_log_slope(&pts))
}
