//! Exact rational scalars and the small dense linear algebra the geometry
//! modules need (elimination, determinants, kernels).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// The exact scalar used throughout the toolkit.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `3`, `-3/2` or a terminating decimal such as `0.125`.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let neg = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{int_digits}{frac}");
        let mut n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
        if neg {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10), frac.len());
        return Some(Q::new(n, d));
    }
    s.parse::<BigInt>().ok().map(Q::from_integer)
}

/// Parses a comma-separated list of rationals, e.g. `1,-1/2,0`.
pub fn parse_q_list(s: &str) -> Option<Vec<Q>> {
    s.split(',').map(parse_q).collect()
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn factorial(n: usize) -> Q {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    Q::from_integer(acc)
}

pub fn binomial(n: i64, k: i64) -> Q {
    if k < 0 || n < 0 || k > n {
        return Q::zero();
    }
    let mut acc = Q::one();
    for i in 0..k {
        acc = acc * q(n - i) / q(i + 1);
    }
    acc
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot_int(a: &[i64], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| y * BigInt::from(*x)).sum()
}

pub fn int_vec_to_q(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&x| q(x)).collect()
}

pub fn lcm_of_denominators<'a>(xs: impl IntoIterator<Item = &'a Q>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Scales a nonzero rational vector to the primitive integer vector on the
/// same ray. The zero vector is returned unchanged.
pub fn primitive_direction(v: &[Q]) -> Vec<Q> {
    if v.iter().all(Zero::is_zero) {
        return v.to_vec();
    }
    let l = lcm_of_denominators(v);
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    ints.into_iter().map(|x| Q::from_integer(x / &g)).collect()
}

/// Determinant by Gaussian elimination over Q.
pub fn det(m: &[Vec<Q>]) -> Q {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut d = Q::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Q::zero();
        };
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        let p = a[col][col].clone();
        d *= &p;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &p;
            for c in col..n {
                let sub = &f * &a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    d
}

/// Reduced row echelon form; returns the pivot columns.
fn rref(a: &mut [Vec<Q>]) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(piv, r);
        let p = a[r][c].clone();
        for x in a[r].iter_mut() {
            *x /= &p;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let sub = &f * &a[r][j];
                    a[i][j] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &[Vec<Q>]) -> usize {
    let mut a = m.to_vec();
    rref(&mut a).len()
}

/// Basis of `{x : m x = 0}`.
pub fn kernel(m: &[Vec<Q>], cols: usize) -> Vec<Vec<Q>> {
    let mut a = m.to_vec();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Q::zero(); cols];
            x[f] = Q::one();
            for (row, &pc) in pivots.iter().enumerate() {
                x[pc] = -a[row][f].clone();
            }
            x
        })
        .collect()
}

/// Solves the square system `m x = b`; `None` when `m` is singular.
pub fn solve(m: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut a);
    if pivots.len() < n || pivots.iter().any(|&p| p >= n) {
        return None;
    }
    Some(a.into_iter().map(|r| r[n].clone()).collect())
}

/// Inverse of a square matrix, if it exists.
pub fn inverse(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut a);
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn transpose(m: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let cols = m.first().map_or(0, Vec::len);
    (0..cols).map(|c| m.iter().map(|r| r[c].clone()).collect()).collect()
}

/// Sylvester's criterion with exact leading principal minors.
pub fn is_positive_definite(m: &[Vec<Q>]) -> bool {
    (1..=m.len()).all(|k| {
        let minor: Vec<Vec<Q>> = m[..k].iter().map(|r| r[..k].to_vec()).collect();
        det(&minor).is_positive()
    })
}

/// Exact polynomial interpolation through `(xs[i], ys[i])`; returns
/// coefficients in increasing degree.
pub fn interpolate(xs: &[Q], ys: &[Q]) -> Vec<Q> {
    let n = xs.len();
    // Newton divided differences, then expand to the monomial basis.
    let mut coef: Vec<Q> = ys.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            coef[i] = (&coef[i] - &coef[i - 1]) / (&xs[i] - &xs[i - j]);
        }
    }
    let mut poly = vec![Q::zero(); n];
    for i in (0..n).rev() {
        // poly = poly * (x - xs[i]) + coef[i]
        let mut next = vec![Q::zero(); n];
        for d in 0..n {
            if poly[d].is_zero() {
                continue;
            }
            if d + 1 < n {
                next[d + 1] += &poly[d];
            }
            next[d] -= &poly[d] * &xs[i];
        }
        next[0] += &coef[i];
        poly = next;
    }
    poly
}
