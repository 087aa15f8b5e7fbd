//! Products of translated and scaled sine/cosine factors, skew maps built on
//! them, and log-space evaluation.

mod eval;
mod map;
mod orbit;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use rayon::prelude::*;

use crate::qfield::QuadIrr;
use crate::real::Real;

pub(crate) use eval::Acc;
pub use eval::{ExtValue, ValueClass, hit_tolerance};
pub use map::{
    DEFAULT_FACTOR_BUDGET, GridDefect, SkewMap, check_reversible, commute_defect, trig_factor,
};
pub use orbit::OrbitProduct;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactorKind {
    Sin,
    Cos,
    /// Opaque symbol, used to trace where factors of a composite map come
    /// from. Never reduced mod 1 and never evaluated.
    Marker(u8),
}

impl FactorKind {
    pub fn is_trig(self) -> bool {
        !matches!(self, FactorKind::Marker(_))
    }

    /// Roots of `kind(πθ)` sit at `θ ∈ ℤ + offset`.
    pub fn root_offset(self) -> QuadIrr {
        match self {
            FactorKind::Cos => QuadIrr::from_ratio(1, 2),
            _ => QuadIrr::zero(),
        }
    }
}

impl fmt::Display for FactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorKind::Sin => write!(f, "sin"),
            FactorKind::Cos => write!(f, "cos"),
            FactorKind::Marker(m) => write!(f, "mark{m}"),
        }
    }
}

/// `kind(π(scale·x + shift))^exponent`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElemFactor {
    pub kind: FactorKind,
    pub scale: QuadIrr,
    pub shift: QuadIrr,
    pub exponent: i64,
}

impl ElemFactor {
    /// Exact roots `x = (k + offset - shift)/scale` in `[lo, hi)`, ascending.
    pub fn roots_in(&self, lo: &QuadIrr, hi: &QuadIrr) -> Vec<QuadIrr> {
        let o = self.kind.root_offset();
        let base = &self.shift - &o;
        let (kmin, kmax) = if self.scale.signum() > 0 {
            let a = (&(&self.scale * lo) + &base).ceil();
            let b = (&(&self.scale * hi) + &base).ceil() - 1;
            (a, b)
        } else {
            let a = (&(&self.scale * hi) + &base).floor() + 1;
            let b = (&(&self.scale * lo) + &base).floor();
            (a, b)
        };
        let mut out = Vec::new();
        let mut k = kmin;
        while k <= kmax {
            let num = &QuadIrr::from_bigint(k.clone()) - &base;
            out.push(&num / &self.scale);
            k += 1;
        }
        if self.scale.signum() < 0 {
            out.reverse();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Key {
    shift: QuadIrr,
    kind: FactorKind,
    scale: QuadIrr,
}

/// Finite product of elementary factors with net integer exponents, times a
/// constant `sign · e^log_mag`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorProduct {
    entries: BTreeMap<Key, i64>,
    sign: i8,
    log_mag: f64,
}

impl Default for FactorProduct {
    fn default() -> Self {
        Self::one()
    }
}

impl FactorProduct {
    pub fn one() -> Self {
        FactorProduct {
            entries: BTreeMap::new(),
            sign: 1,
            log_mag: 0.0,
        }
    }

    pub fn constant(sign: i8, log_mag: f64) -> Self {
        assert!(sign == 1 || sign == -1);
        FactorProduct {
            entries: BTreeMap::new(),
            sign,
            log_mag,
        }
    }

    pub fn single(kind: FactorKind, scale: QuadIrr, shift: QuadIrr, exponent: i64) -> Self {
        let mut p = Self::one();
        p.insert(kind, scale, shift, exponent);
        p
    }

    /// Multiplies in `kind(π(scale·x + shift))^exponent`. Trigonometric shifts
    /// are reduced to `[0, 1)`; entries whose exponents cancel are dropped.
    ///
    /// # Panics
    /// If `scale` is zero.
    pub fn insert(&mut self, kind: FactorKind, scale: QuadIrr, shift: QuadIrr, exponent: i64) {
        assert!(!scale.is_zero(), "zero scale");
        if exponent == 0 {
            return;
        }
        let shift = if kind.is_trig() {
            let k: BigInt = shift.floor();
            if k.is_odd() && exponent % 2 != 0 {
                self.sign = -self.sign;
            }
            &shift - &QuadIrr::from_bigint(k)
        } else {
            shift
        };
        let key = Key { shift, kind, scale };
        let slot = self.entries.entry(key);
        match slot {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(exponent);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += exponent;
                if *o.get() == 0 {
                    o.remove();
                }
            }
        }
    }

    pub(crate) fn negate(&mut self) {
        self.sign = -self.sign;
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn log_mag(&self) -> f64 {
        self.log_mag
    }

    /// True for the constant 1.
    pub fn is_one(&self) -> bool {
        self.entries.is_empty() && self.sign == 1 && self.log_mag == 0.0
    }

    /// Number of distinct elementary factors.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Elementary factor count with multiplicity, `Σ |exponent|`.
    pub fn factor_count(&self) -> u64 {
        self.entries.values().map(|e| e.unsigned_abs()).sum()
    }

    /// Entries in deterministic order (shift, kind, scale).
    pub fn iter(&self) -> impl Iterator<Item = ElemFactor> + '_ {
        self.entries.iter().map(|(k, &e)| ElemFactor {
            kind: k.kind,
            scale: k.scale.clone(),
            shift: k.shift.clone(),
            exponent: e,
        })
    }

    fn rebuild(&self, f: impl Fn(&Key) -> (QuadIrr, QuadIrr)) -> Self {
        let mut out = Self::constant(self.sign, self.log_mag);
        for (k, &e) in &self.entries {
            let (scale, shift) = f(k);
            out.insert(k.kind, scale, shift, e);
        }
        out
    }

    /// `x ↦ P(x + t)`.
    pub fn translate(&self, t: &QuadIrr) -> Self {
        if t.is_zero() {
            return self.clone();
        }
        self.rebuild(|k| (k.scale.clone(), &k.shift + &(&k.scale * t)))
    }

    /// `x ↦ P(λx)`.
    pub fn rescale(&self, lambda: &QuadIrr) -> Self {
        self.rebuild(|k| (&k.scale * lambda, k.shift.clone()))
    }

    /// `x ↦ P(x)^{-1}`.
    pub fn inverse(&self) -> Self {
        FactorProduct {
            entries: self.entries.iter().map(|(k, &e)| (k.clone(), -e)).collect(),
            sign: self.sign,
            log_mag: -self.log_mag,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (big, small) = if self.len() >= o.len() {
            (self, o)
        } else {
            (o, self)
        };
        let mut out = big.clone();
        out.sign *= small.sign;
        out.log_mag += small.log_mag;
        for (k, &e) in &small.entries {
            out.insert(k.kind, k.scale.clone(), k.shift.clone(), e);
        }
        out
    }

    /// Entries of one kind.
    pub fn of_kind(&self, kind: FactorKind) -> impl Iterator<Item = ElemFactor> + '_ {
        self.iter().filter(move |f| f.kind == kind)
    }

    pub fn compile<T: Real>(&self) -> CompiledProduct<T> {
        CompiledProduct {
            items: self
                .entries
                .iter()
                .map(|(k, &e)| {
                    assert!(k.kind.is_trig(), "marker factors cannot be evaluated");
                    (k.kind, T::from_quad(&k.scale), T::from_quad(&k.shift), e)
                })
                .collect(),
            sign: self.sign,
            log_mag: T::lit(self.log_mag),
        }
    }

    pub fn eval<T: Real>(&self, x: T) -> ExtValue<T> {
        self.compile().eval(x)
    }

    pub fn eval_grid<T: Real>(&self, xs: &[T]) -> Vec<ExtValue<T>> {
        self.compile().eval_grid(xs)
    }

    /// Evaluation at an exact point: zeros and poles are detected exactly.
    pub fn eval_exact<T: Real>(&self, x: &QuadIrr) -> ExtValue<T> {
        let mut acc = Acc::new(self.sign, T::lit(self.log_mag));
        for (k, &e) in &self.entries {
            assert!(k.kind.is_trig(), "marker factors cannot be evaluated");
            let theta = &(&k.scale * x) + &k.shift;
            let theta = &theta - &k.kind.root_offset();
            if theta.is_integer() {
                acc.push_hit(e);
                continue;
            }
            // kind(π(θ + o)) with θ = n + f: sign (-1)^n times kind at f + o
            let n = theta.floor();
            acc.flip(n.is_odd() && e % 2 != 0);
            let f = T::from_phase(theta.phase64());
            let o = if k.kind == FactorKind::Cos {
                T::lit(0.5)
            } else {
                T::zero()
            };
            acc.push(k.kind, f + o, e);
        }
        acc.finish()
    }
}

impl fmt::Display for FactorProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign < 0 {
            write!(f, "-")?;
        }
        if self.log_mag != 0.0 {
            write!(f, "exp({})·", self.log_mag)?;
        }
        if self.entries.is_empty() {
            return write!(f, "1");
        }
        for (i, (k, e)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, "·")?;
            }
            write!(f, "{}(π({}·x+{}))^{}", k.kind, k.scale, k.shift, e)?;
        }
        Ok(())
    }
}

/// Float snapshot of a [`FactorProduct`] for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledProduct<T> {
    items: Vec<(FactorKind, T, T, i64)>,
    sign: i8,
    log_mag: T,
}

impl<T: Real> CompiledProduct<T> {
    pub fn eval(&self, x: T) -> ExtValue<T> {
        let mut acc = Acc::new(self.sign, self.log_mag);
        for &(kind, s, h, e) in &self.items {
            acc.push(kind, s * x + h, e);
        }
        acc.finish()
    }

    pub fn eval_grid(&self, xs: &[T]) -> Vec<ExtValue<T>> {
        xs.par_iter().map(|&x| self.eval(x)).collect()
    }
}

/// `count` equally spaced points on `[lo, hi]`.
pub fn linspace<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / T::from_usize_exact(count - 1);
            (0..count)
                .map(|i| lo + step * T::from_usize_exact(i))
                .collect()
        }
    }
}
