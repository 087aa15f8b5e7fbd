//! Renormalization of skew-product maps `(x, y) -> (x + α, A(x) y)` over
//! rotations by a quadratic irrational α, with trigonometric factors.
//!
//! The crate is layered bottom-up:
//!
//! - [`qfield`]: exact arithmetic in `Q(√d)`, continued fractions, convergents,
//!   the mod-4 period ℓ(α) and the `j_n` construction.
//! - [`skewfactor`]: products of translated/scaled sine and cosine factors,
//!   skew maps, log-space evaluation.
//! - [`renorm`]: the renormalization step, its closed-form iterates and
//!   convergence probes for rescaled products.
//! - [`zerolat`]: zero/pole lattices, gap statistics, discrepancy and the
//!   stabilization search for `(μ, n)`.
//! - [`limitfn`]: limit zero sequences, symmetric sums, limit factors and the
//!   fixed-point check.
//! - [`hofstadter`]: zero-energy orbits, growth fits, the Θ-lift and the
//!   residual of the approximate eigenvectors.
//!
//! Exact quantities use [`QuadIrr`]. Floating-point evaluation is generic over
//! [`Real`], implemented for `f32` and `f64`; the `*64` aliases below fix `f64`.

pub mod error;
pub mod hofstadter;
pub mod limitfn;
pub mod qfield;
pub mod real;
pub mod renorm;
pub mod skewfactor;
pub mod zerolat;

pub use error::{Error, Result};
pub use qfield::{CfExpansion, ConvergentTable, QuadIrr};
pub use real::Real;
pub use skewfactor::{ElemFactor, ExtValue, FactorKind, FactorProduct, SkewMap, ValueClass};

pub type ExtValue64 = skewfactor::ExtValue<f64>;
pub type ExtValue32 = skewfactor::ExtValue<f32>;
pub type OrbitSeq64 = hofstadter::OrbitSeq<f64>;
pub type LatticeVector64 = hofstadter::LatticeVector<f64>;
