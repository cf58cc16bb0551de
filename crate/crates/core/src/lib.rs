//! Numerical laboratory for partial sums of modified Dirichlet characters.
//!
//! A modified character `f` agrees with a primitive Dirichlet character χ at
//! every prime except a finite set S, where it takes other unimodular values.
//! The crate evaluates the pieces of the Ω-growth argument for
//! `M(x) = Σ_{n≤x} f(n)` end to end:
//!
//! * [`characters`]: exact character tables, conductors, parity, Gauss sums.
//! * [`modchar`]: modified characters, sieved partial sums, exponent bookkeeping.
//! * [`lfunction`]: Hurwitz zeta and L(s, χ) with error bounds, functional equation.
//! * [`series`]: the Dirichlet series F(s) along the Euler-product and
//!   partial-sum-integral routes, and the pole lattice of 1/E_f.
//! * [`torus`]: fixed-point orbits n·α − θ mod 1, box hits, star discrepancy,
//!   Erdős–Turán–Koksma bounds, linear forms in logarithms.
//! * [`analysis`]: the Plancherel moment identity, Γ-moments, spike scans,
//!   moment accumulation and exponent fits.

pub mod analysis;
pub mod arith;
pub mod characters;
pub mod error;
pub mod fixed;
pub mod lfunction;
pub mod modchar;
pub mod numeric;
pub mod phase;
pub mod quad;
pub mod series;
pub mod special;
pub mod torus;

pub use error::{Error, Result};
pub use numeric::BoundedValue;

/// Version string stamped into every report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
