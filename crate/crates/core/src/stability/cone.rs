//! Extreme rays of pointed polyhedral cones `{c : L c >= 0}`.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::polytope::for_each_subset;
use crate::rational::{self, Q};

/// Extreme rays of `{c in Q^m : rows . c >= 0}`, as primitive integer
/// vectors in lexicographic order. `None` if the cone is not pointed.
///
/// Each ray spans the kernel of some `m - 1` linearly independent rows.
pub fn extreme_rays(rows: &[Vec<Q>], m: usize) -> Option<Vec<Vec<Q>>> {
    if m == 0 {
        return Some(Vec::new());
    }
    if rational::rank(rows) < m {
        return None;
    }
    let feasible = |c: &[Q]| rows.iter().all(|r| !rational::dot(r, c).is_negative());
    let mut rays: BTreeSet<Vec<Q>> = BTreeSet::new();
    for_each_subset(rows.len(), m - 1, |s| {
        let sub: Vec<Vec<Q>> = s.iter().map(|&i| rows[i].clone()).collect();
        if m > 1 && rational::rank(&sub) != m - 1 {
            return;
        }
        let k = rational::kernel(&sub, m);
        if k.len() != 1 {
            return;
        }
        let d = rational::primitive_direction(&k[0]);
        let neg: Vec<Q> = d.iter().map(|x| -x).collect();
        for c in [d, neg] {
            if !c.iter().all(Zero::is_zero) && feasible(&c) {
                rays.insert(c);
            }
        }
    });
    Some(rays.into_iter().collect())
}
