use num_bigint::BigInt;

use super::{ExtValue, FactorKind, FactorProduct, OrbitProduct};
use crate::error::{Error, Result};
use crate::qfield::QuadIrr;
use crate::real::Real;

/// Default cap on elementary factors materialized by [`SkewMap::power`].
pub const DEFAULT_FACTOR_BUDGET: u64 = 4_000_000;

/// The skew map `(x, y) ↦ (x + rotation, A(x)·y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMap {
    pub rotation: QuadIrr,
    pub factor: FactorProduct,
}

/// The sine or cosine map `(α, A)` with
/// `A(x) = kind(π(x + α/4)) / kind(π(-x - 3α/4))`.
pub fn trig_factor(kind: FactorKind, alpha: &QuadIrr) -> SkewMap {
    assert!(kind.is_trig(), "trigonometric kind required");
    let four = BigInt::from(4);
    let mut f = FactorProduct::one();
    f.insert(kind, QuadIrr::one(), alpha.div_int(&four), 1);
    f.insert(
        kind,
        QuadIrr::from_int(-1),
        -&alpha.mul_int(&3.into()).div_int(&four),
        -1,
    );
    SkewMap {
        rotation: alpha.clone(),
        factor: f,
    }
}

impl SkewMap {
    pub fn new(rotation: QuadIrr, factor: FactorProduct) -> Self {
        SkewMap { rotation, factor }
    }

    pub fn identity() -> Self {
        SkewMap::new(QuadIrr::zero(), FactorProduct::one())
    }

    /// `(1, 1)`.
    pub fn unit_translation() -> Self {
        SkewMap::new(QuadIrr::one(), FactorProduct::one())
    }

    /// `self ∘ k`: apply `k` first.
    pub fn compose(&self, k: &SkewMap) -> SkewMap {
        SkewMap {
            rotation: &self.rotation + &k.rotation,
            factor: self.factor.translate(&k.rotation).mul(&k.factor),
        }
    }

    /// `(-α, A(· - α)^{-1})`.
    pub fn invert(&self) -> SkewMap {
        let r = -&self.rotation;
        SkewMap {
            factor: self.factor.translate(&r).inverse(),
            rotation: r,
        }
    }

    /// `G^k` with the default factor budget.
    pub fn power(&self, k: i64) -> Result<SkewMap> {
        self.power_with_budget(k, DEFAULT_FACTOR_BUDGET)
    }

    pub fn power_with_budget(&self, k: i64, budget: u64) -> Result<SkewMap> {
        let n = k.unsigned_abs();
        let cost = n.saturating_mul(self.factor.factor_count());
        if cost > budget {
            return Err(Error::Capacity(format!(
                "power {k} needs {cost} elementary factors, budget {budget}"
            )));
        }
        if k == 0 {
            return Ok(SkewMap::identity());
        }
        let base = if k > 0 { self.clone() } else { self.invert() };
        let rot = &base.rotation;
        let odd = n % 2 == 1;
        let mut out = FactorProduct::constant(
            if base.factor.sign() < 0 && odd { -1 } else { 1 },
            base.factor.log_mag() * n as f64,
        );
        for f in base.factor.iter() {
            let step = &f.scale * rot;
            let mut cur = f.shift.clone();
            for _ in 0..n {
                out.insert(f.kind, f.scale.clone(), cur.clone(), f.exponent);
                cur = &cur + &step;
                if f.kind.is_trig() && cur.to_f64().abs() > 1e6 {
                    // keep coefficients small; the parity of the dropped
                    // integer goes into the sign
                    let fl = cur.floor();
                    if num_integer::Integer::is_odd(&fl) && f.exponent % 2 != 0 {
                        out.negate();
                    }
                    cur = &cur - &QuadIrr::from_bigint(fl);
                }
            }
        }
        Ok(SkewMap {
            rotation: rot.mul_int(&BigInt::from(n)),
            factor: out,
        })
    }

    /// Compact form of `G^k` for trigonometric factors; no budget needed.
    pub fn orbit_power(&self, k: i64) -> OrbitProduct {
        OrbitProduct::new(self.factor.clone(), self.rotation.clone(), k)
    }

    /// `A°(z) = A(z - rotation/2)`.
    pub fn symmetric_factor(&self) -> FactorProduct {
        self.factor
            .translate(&(-&self.rotation.div_int(&BigInt::from(2))))
    }

    /// `Λ⁻¹ G Λ` with `Λ(x, y) = (λx, y)`: rotation divided by `λ`, factor
    /// rescaled by `λ`.
    pub fn conjugate_scale(&self, lambda: &QuadIrr) -> SkewMap {
        SkewMap {
            rotation: &self.rotation / lambda,
            factor: self.factor.rescale(lambda),
        }
    }
}

/// Maximum of a defect over a grid, with indices of skipped points.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDefect<T> {
    pub max_defect: T,
    pub skipped: Vec<usize>,
}

/// `max |A°(z)·A°(-z) - 1|` over the grid.
pub fn check_reversible<T: Real>(g: &SkewMap, grid: &[T]) -> GridDefect<T> {
    let s = g.symmetric_factor().compile::<T>();
    let mut max_defect = T::zero();
    let mut skipped = Vec::new();
    for (i, &z) in grid.iter().enumerate() {
        let p = s.eval(z).mul(&s.eval(-z));
        match p.rel_diff(&ExtValue::one()) {
            Some(d) if p.cancellations == 0 => max_defect = max_defect.max(d),
            _ => skipped.push(i),
        }
    }
    GridDefect {
        max_defect,
        skipped,
    }
}

/// `max` relative difference between the factors of `F∘G` and `G∘F`.
pub fn commute_defect<T: Real>(f: &SkewMap, g: &SkewMap, grid: &[T]) -> GridDefect<T> {
    let fg = f.compose(g);
    let gf = g.compose(f);
    let (a, b) = (fg.factor.compile::<T>(), gf.factor.compile::<T>());
    let mut max_defect = T::zero();
    let mut skipped = Vec::new();
    for (i, &x) in grid.iter().enumerate() {
        match a.eval(x).rel_diff(&b.eval(x)) {
            Some(d) => max_defect = max_defect.max(d),
            None => skipped.push(i),
        }
    }
    GridDefect {
        max_defect,
        skipped,
    }
}
