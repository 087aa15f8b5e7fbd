use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::{Acc, ElemFactor, ExtValue, FactorKind, FactorProduct};
use crate::error::{Error, Result};
use crate::qfield::QuadIrr;
use crate::real::Real;

/// `A^{*k}(λx + t)` kept in compact form: `Π_{j=0}^{k-1} A(λx + t + jα)`
/// for `k > 0`, `Π_{j=1}^{|k|} A(λx + t - jα)^{-1}` for `k < 0`.
///
/// Evaluation walks the orbit with 64-bit fixed-point phases, so no exact
/// arithmetic happens per factor. Zero/pole candidates in a window are found
/// by a float prefilter and then made exact.
#[derive(Clone, Debug)]
pub struct OrbitProduct {
    base: FactorProduct,
    step: QuadIrr,
    count: i64,
    lambda: QuadIrr,
    offset: QuadIrr,
}

/// One base factor unrolled along the orbit.
struct Track {
    kind: FactorKind,
    exponent: i64,
    /// exact argument constant at the first orbit index, and its increment
    c0: QuadIrr,
    dc: QuadIrr,
    phase0: u64,
    dphase: u64,
    /// parities of `⌊c0⌋` and `⌊dc⌋`
    n0_odd: bool,
    nd_odd: bool,
    /// exact slope `scale · λ`
    slope: QuadIrr,
}

impl OrbitProduct {
    /// # Panics
    /// If `base` contains marker factors.
    pub fn new(base: FactorProduct, step: QuadIrr, count: i64) -> Self {
        assert!(
            base.iter().all(|f| f.kind.is_trig()),
            "orbit products need trigonometric factors"
        );
        OrbitProduct {
            base,
            step,
            count,
            lambda: QuadIrr::one(),
            offset: QuadIrr::zero(),
        }
    }

    pub fn count(&self) -> i64 {
        self.count
    }

    pub fn lambda(&self) -> &QuadIrr {
        &self.lambda
    }

    pub fn offset(&self) -> &QuadIrr {
        &self.offset
    }

    pub fn step(&self) -> &QuadIrr {
        &self.step
    }

    /// `x ↦ P(s x)`.
    pub fn rescale(&self, s: &QuadIrr) -> Self {
        OrbitProduct {
            lambda: &self.lambda * s,
            ..self.clone()
        }
    }

    /// `x ↦ P(x + u)`.
    pub fn translate(&self, u: &QuadIrr) -> Self {
        OrbitProduct {
            offset: &self.offset + &(&self.lambda * u),
            ..self.clone()
        }
    }

    pub fn factor_count(&self) -> u64 {
        self.count.unsigned_abs() * self.base.factor_count()
    }

    fn first_index(&self) -> i64 {
        if self.count >= 0 { 0 } else { self.count }
    }

    fn sgn(&self) -> i64 {
        if self.count >= 0 { 1 } else { -1 }
    }

    fn tracks(&self) -> Vec<Track> {
        let j0 = BigInt::from(self.first_index());
        self.base
            .iter()
            .map(|f| {
                let dc = &f.scale * &self.step;
                let c0 = &(&(&f.scale * &self.offset) + &f.shift) + &dc.mul_int(&j0);
                let (n0, nd) = (c0.floor(), dc.floor());
                Track {
                    kind: f.kind,
                    exponent: f.exponent * self.sgn(),
                    phase0: c0.phase64(),
                    dphase: dc.phase64(),
                    n0_odd: n0.is_odd(),
                    nd_odd: nd.is_odd(),
                    c0,
                    dc,
                    slope: &f.scale * &self.lambda,
                }
            })
            .collect()
    }

    /// Float evaluator; build once and evaluate many points.
    pub fn compile<T: Real>(&self) -> CompiledOrbit<T> {
        let n = self.count.unsigned_abs();
        let odd_n = n % 2 == 1;
        CompiledOrbit {
            tracks: self
                .tracks()
                .into_iter()
                .map(|t| {
                    // Σ_{i<n} ⌊c0 + i·dc⌋ = n⌊c0⌋ + ⌊dc⌋·n(n-1)/2 + carries
                    let tri_odd = (n as u128 * n.saturating_sub(1) as u128 / 2) % 2 == 1;
                    let parity = (t.n0_odd && odd_n)
                        ^ (t.nd_odd && tri_odd)
                        ^ carry_parity(t.phase0, t.dphase, n);
                    CompiledTrack {
                        kind: t.kind,
                        exponent: t.exponent,
                        phase0: t.phase0,
                        dphase: t.dphase,
                        parity,
                        slope: T::from_quad(&t.slope),
                    }
                })
                .collect(),
            n,
            sign: if self.base.sign() < 0 && odd_n { -1 } else { 1 },
            log_mag: T::lit(self.base.log_mag() * (n as f64) * self.sgn() as f64),
        }
    }

    pub fn eval<T: Real>(&self, x: T) -> ExtValue<T> {
        self.compile().eval(x)
    }

    pub fn eval_grid<T: Real>(&self, xs: &[T]) -> Vec<ExtValue<T>> {
        self.compile().eval_grid(xs)
    }

    /// Exact elementary factors that may vanish or blow up for `x ∈ [lo, hi)`.
    /// Every factor with a root there is included; a few without may be too.
    pub fn candidates(&self, lo: &QuadIrr, hi: &QuadIrr) -> Vec<ElemFactor> {
        let n = self.count.unsigned_abs();
        let (lo_f, hi_f) = (lo.to_f64(), hi.to_f64());
        let margin = 1e-9;
        let mut out = Vec::new();
        for t in self.tracks() {
            let s = t.slope.to_f64();
            let (a, b) = (s * lo_f, s * hi_f);
            let (mn, mx) = (a.min(b) - margin, a.max(b) + margin);
            let o = if t.kind == FactorKind::Cos { 0.5 } else { 0.0 };
            let mut ph = t.phase0;
            for i in 0..n {
                let f = f64::from_phase(ph);
                if (f + mx - o).floor() >= (f + mn - o).ceil() {
                    out.push(ElemFactor {
                        kind: t.kind,
                        scale: t.slope.clone(),
                        shift: &t.c0 + &t.dc.mul_int(&BigInt::from(i)),
                        exponent: t.exponent,
                    });
                }
                ph = ph.wrapping_add(t.dphase);
            }
        }
        out
    }

    /// Materializes the product, subject to a factor budget.
    pub fn to_explicit(&self, budget: u64) -> Result<FactorProduct> {
        if self.factor_count() > budget {
            return Err(Error::Capacity(format!(
                "{} elementary factors exceed budget {budget}",
                self.factor_count()
            )));
        }
        let n = self.count.unsigned_abs();
        let mut out = FactorProduct::constant(
            if self.base.sign() < 0 && n % 2 == 1 {
                -1
            } else {
                1
            },
            self.base.log_mag() * n as f64 * self.sgn() as f64,
        );
        for t in self.tracks() {
            let mut c = t.c0.clone();
            for _ in 0..n {
                out.insert(t.kind, t.slope.clone(), c.clone(), t.exponent);
                c = &c + &t.dc;
            }
        }
        Ok(out)
    }

    /// Number of orbit factors, as a float; handy for densities.
    pub fn count_f64(&self) -> f64 {
        self.count.to_f64().unwrap_or(f64::NAN)
    }
}

struct CompiledTrack<T> {
    kind: FactorKind,
    exponent: i64,
    phase0: u64,
    dphase: u64,
    /// parity of the integer parts dropped along the orbit
    parity: bool,
    slope: T,
}

/// Float snapshot of an [`OrbitProduct`].
pub struct CompiledOrbit<T> {
    tracks: Vec<CompiledTrack<T>>,
    n: u64,
    sign: i8,
    log_mag: T,
}

impl<T: Real> CompiledOrbit<T> {
    pub fn eval(&self, x: T) -> ExtValue<T> {
        let mut acc = Acc::new(self.sign, self.log_mag);
        for t in &self.tracks {
            let sx = t.slope * x;
            let mut ph = t.phase0;
            for _ in 0..self.n {
                acc.push(t.kind, T::from_phase(ph) + sx, t.exponent);
                ph = ph.wrapping_add(t.dphase);
            }
            acc.flip(t.parity && t.exponent % 2 != 0);
        }
        acc.finish()
    }

    pub fn eval_grid(&self, xs: &[T]) -> Vec<ExtValue<T>> {
        xs.par_iter().map(|&x| self.eval(x)).collect()
    }
}

/// Parity of `Σ_{i<n} ⌊(p0 + i·d) / 2^64⌋`.
fn carry_parity(p0: u64, d: u64, n: u64) -> bool {
    let mut acc = p0 as u128;
    let mut parity = false;
    for _ in 0..n {
        parity ^= (acc >> 64) & 1 == 1;
        acc += d as u128;
    }
    parity
}
