use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

use crate::qfield::QuadIrr;

/// Floating-point scalar used for evaluation.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Significand bits.
    const PRECISION: u32;

    fn from_quad(q: &QuadIrr) -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("representable integer")
    }

    /// Fraction `f / 2^64` of a 64-bit fixed-point phase.
    fn from_phase(f: u64) -> Self;

    /// `sin(πθ)` with reduction to `[-1/2, 1/2]` first.
    fn sin_pi(theta: Self) -> Self {
        let r = theta.round();
        let f = theta - r;
        let s = (Self::PI() * f).sin();
        if odd(r) { -s } else { s }
    }

    /// `cos(πθ)` via `sin(π(θ + 1/2))`.
    fn cos_pi(theta: Self) -> Self {
        Self::sin_pi(theta + Self::lit(0.5))
    }
}

fn odd<T: Float>(r: T) -> bool {
    let two = T::one() + T::one();
    (r - two * (r / two).floor()) != T::zero()
}

impl Real for f64 {
    const PRECISION: u32 = 53;

    fn from_quad(q: &QuadIrr) -> Self {
        q.to_f64()
    }

    fn from_phase(f: u64) -> Self {
        f as f64 * (-64f64).exp2()
    }
}

impl Real for f32 {
    const PRECISION: u32 = 24;

    fn from_quad(q: &QuadIrr) -> Self {
        q.to_f64() as f32
    }

    fn from_phase(f: u64) -> Self {
        (f as f64 * (-64f64).exp2()) as f32
    }
}
