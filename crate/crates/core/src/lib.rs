//! Exact relative K-stability checks for blowups of smooth polarized toric
//! manifolds at torus-fixed points.
//!
//! The toolkit works with Delzant polytopes. Blowing up a fixed point with
//! exceptional class of size `t = eps^2` is a corner chop of the polytope,
//! and every invariant is computed two ways: from closed forms in `eps`
//! and by brute-force lattice-point counting.

pub mod counts;
pub mod error;
pub mod expansion;
pub mod invariants;
pub mod moment;
pub mod polytope;
pub mod rational;
pub mod report;
pub mod stability;

pub use error::{Error, Result};
pub use polytope::{chop_corner, parse_polytope, validate_delzant, DelzantPolytope, Face, Facet, VertexData};
pub use rational::Q;
