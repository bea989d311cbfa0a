//! Text format for Hamiltonian families.
//!
//! ```text
//! vars 2
//! active 2
//! radius 1
//! kappa 1/4
//! h1 -1 0,0 0,0 1
//! h1 1 1,0 1,0 0
//! ```
//!
//! Each `h<j>` line is one monomial `coeff * z^a * zbar^b * eps^e`; the
//! exponent lists have one entry per variable. `kappa` is optional and `#`
//! starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rational;

use super::{HamiltonianFamily, Monomial};

/// `(line, 1-based column)` of each whitespace-separated token.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn number(s: &str) -> Option<f64> {
    rational::parse_q(s).map(|x| rational::to_f64(&x)).or_else(|| s.parse::<f64>().ok().filter(|x| x.is_finite()))
}

fn exponents(s: &str, r: usize, line: usize, col: usize) -> Result<Vec<u32>> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != r {
        return Err(Error::parse(line, col, format!("expected {r} exponents, found {}", parts.len())));
    }
    let mut out = Vec::with_capacity(r);
    let mut offset = 0;
    for p in parts {
        let e = p.trim().parse::<u32>().map_err(|_| Error::parse(line, col + offset, format!("bad exponent `{p}`")))?;
        out.push(e);
        offset += p.len() + 1;
    }
    Ok(out)
}

pub fn parse_family(text: &str) -> Result<HamiltonianFamily> {
    let mut r: Option<usize> = None;
    let mut w: Option<usize> = None;
    let mut radius: Option<f64> = None;
    let mut kappa: Option<f64> = None;
    let mut terms: BTreeMap<usize, BTreeMap<(Vec<u32>, Vec<u32>, u32), f64>> = BTreeMap::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.split('#').next().unwrap_or("");
        let toks = tokens(line);
        let Some(&(col, head)) = toks.first() else { continue };
        let arg = |k: usize| -> Result<(usize, &str)> {
            toks.get(k).copied().ok_or_else(|| Error::parse(line_no, line.len() + 1, format!("`{head}` needs more fields")))
        };
        let single = |toks: &[(usize, &str)]| -> Result<()> {
            match toks.get(2) {
                Some(&(c, _)) => Err(Error::parse(line_no, c, "unexpected trailing field")),
                None => Ok(()),
            }
        };
        match head {
            "vars" | "active" => {
                let (c, v) = arg(1)?;
                single(&toks)?;
                let n: usize = v.parse().map_err(|_| Error::parse(line_no, c, format!("bad count `{v}`")))?;
                let slot = if head == "vars" { &mut r } else { &mut w };
                if slot.replace(n).is_some() {
                    return Err(Error::parse(line_no, col, format!("duplicate `{head}`")));
                }
            }
            "radius" | "kappa" => {
                let (c, v) = arg(1)?;
                single(&toks)?;
                let x = number(v).filter(|x| *x > 0.0).ok_or_else(|| Error::parse(line_no, c, format!("expected a positive number, found `{v}`")))?;
                let slot = if head == "radius" { &mut radius } else { &mut kappa };
                if slot.replace(x).is_some() {
                    return Err(Error::parse(line_no, col, format!("duplicate `{head}`")));
                }
            }
            h if h.starts_with('h') => {
                let nvars = r.ok_or_else(|| Error::parse(line_no, col, "`vars` must precede monomials"))?;
                let j: usize = h[1..]
                    .parse()
                    .ok()
                    .filter(|&j| j >= 1 && j <= nvars)
                    .ok_or_else(|| Error::parse(line_no, col, format!("bad Hamiltonian index `{h}`")))?;
                if toks.len() != 5 {
                    let c = toks.get(5).map_or(line.len() + 1, |t| t.0);
                    return Err(Error::parse(line_no, c, format!("expected 5 fields, found {}", toks.len())));
                }
                let (cc, cs) = toks[1];
                let coeff = number(cs).ok_or_else(|| Error::parse(line_no, cc, format!("bad coefficient `{cs}`")))?;
                let z = exponents(toks[2].1, nvars, line_no, toks[2].0)?;
                let zbar = exponents(toks[3].1, nvars, line_no, toks[3].0)?;
                let (ec, es) = toks[4];
                let eps: u32 = es.parse().map_err(|_| Error::parse(line_no, ec, format!("bad eps exponent `{es}`")))?;
                *terms.entry(j).or_default().entry((z, zbar, eps)).or_insert(0.0) += coeff;
            }
            other => return Err(Error::parse(line_no, col, format!("unknown directive `{other}`"))),
        }
    }

    let end = last_line + 1;
    let r = r.ok_or_else(|| Error::parse(end, 1, "missing `vars`"))?;
    let w = w.ok_or_else(|| Error::parse(end, 1, "missing `active`"))?;
    if w == 0 || w > r {
        return Err(Error::parse(end, 1, format!("`active` must lie in 1..={r}")));
    }
    let radius = radius.ok_or_else(|| Error::parse(end, 1, "missing `radius`"))?;
    let models = (1..=r)
        .map(|j| {
            terms
                .remove(&j)
                .unwrap_or_default()
                .into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|((z, zbar, eps), coeff)| Monomial { coeff, z, zbar, eps })
                .collect()
        })
        .collect();
    Ok(HamiltonianFamily { r, w, models, radius, kappa })
}

pub fn to_text(f: &HamiltonianFamily) -> String {
    let list = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
    let mut s = format!("vars {}\nactive {}\nradius {:?}\n", f.r, f.w, f.radius);
    if let Some(k) = f.kappa {
        let _ = writeln!(s, "kappa {k:?}");
    }
    for (j, model) in f.models.iter().enumerate() {
        for m in model {
            let _ = writeln!(s, "h{} {:?} {} {} {}", j + 1, m.coeff, list(&m.z), list(&m.zbar), m.eps);
        }
    }
    s
}
