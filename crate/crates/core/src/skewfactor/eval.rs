use crate::real::Real;

use super::FactorKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueClass {
    Finite,
    Zero,
    Pole,
}

/// A point of `ℝ ∪ {∞}` in log scale. For zeros and poles, `sign` and
/// `log_mag` describe the product of the factors that do not vanish.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtValue<T> {
    pub class: ValueClass,
    pub sign: i8,
    pub log_mag: T,
    /// Net order; positive for zeros, negative for poles, 0 when finite.
    pub order: i64,
    /// Zero/pole pairs that cancelled at this point.
    pub cancellations: u32,
}

impl<T: Real> ExtValue<T> {
    pub fn one() -> Self {
        Self::finite(1, T::zero())
    }

    pub fn finite(sign: i8, log_mag: T) -> Self {
        ExtValue {
            class: ValueClass::Finite,
            sign,
            log_mag,
            order: 0,
            cancellations: 0,
        }
    }

    pub fn from_value(v: T) -> Self {
        if v == T::zero() {
            ExtValue {
                class: ValueClass::Zero,
                sign: 1,
                log_mag: T::zero(),
                order: 1,
                cancellations: 0,
            }
        } else if v.is_infinite() {
            ExtValue {
                class: ValueClass::Pole,
                sign: if v > T::zero() { 1 } else { -1 },
                log_mag: T::zero(),
                order: -1,
                cancellations: 0,
            }
        } else {
            Self::finite(if v < T::zero() { -1 } else { 1 }, v.abs().ln())
        }
    }

    pub fn is_finite(&self) -> bool {
        self.class == ValueClass::Finite
    }

    /// Plain value; overflows to ±∞ or underflows to 0 outside the range of `T`.
    pub fn value(&self) -> T {
        match self.class {
            ValueClass::Finite => T::from_i8(self.sign).unwrap() * self.log_mag.exp(),
            ValueClass::Zero => T::zero(),
            ValueClass::Pole => T::infinity(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let order = self.order + o.order;
        ExtValue {
            class: class_of(order),
            sign: self.sign * o.sign,
            log_mag: self.log_mag + o.log_mag,
            order,
            cancellations: self.cancellations
                + o.cancellations
                + (self.order.signum() * o.order.signum() < 0) as u32,
        }
    }

    pub fn recip(&self) -> Self {
        ExtValue {
            class: class_of(-self.order),
            sign: self.sign,
            log_mag: -self.log_mag,
            order: -self.order,
            cancellations: self.cancellations,
        }
    }

    /// Image on the unit circle under stereographic projection.
    fn circle_point(&self) -> (T, T) {
        match self.class {
            ValueClass::Zero => (T::zero(), -T::one()),
            ValueClass::Pole => (T::zero(), T::one()),
            ValueClass::Finite => {
                let l = self.log_mag;
                let s = T::from_i8(self.sign).unwrap();
                (s / l.cosh(), l.tanh())
            }
        }
    }

    /// Chordal distance `2|a - b| / √((1 + a²)(1 + b²))`; at most 2.
    pub fn chordal(&self, o: &Self) -> T {
        let (x1, y1) = self.circle_point();
        let (x2, y2) = o.circle_point();
        (x1 - x2).hypot(y1 - y2)
    }

    /// `|self/o - 1|` for finite values.
    pub fn rel_diff(&self, o: &Self) -> Option<T> {
        if !self.is_finite() || !o.is_finite() {
            return None;
        }
        let r = (self.log_mag - o.log_mag).exp();
        let s = T::from_i8(self.sign * o.sign).unwrap();
        Some((s * r - T::one()).abs())
    }
}

fn class_of(order: i64) -> ValueClass {
    match order.signum() {
        1 => ValueClass::Zero,
        -1 => ValueClass::Pole,
        _ => ValueClass::Finite,
    }
}

/// Distance from `theta` below which an elementary factor counts as vanishing.
pub fn hit_tolerance<T: Real>() -> T {
    T::lit(2f64.powi(-40)).max(T::epsilon() * T::lit(8.0))
}

/// Log-space accumulator over elementary factors.
pub(crate) struct Acc<T> {
    sign: i8,
    log: T,
    zero_order: i64,
    pole_order: i64,
    tol: T,
}

impl<T: Real> Acc<T> {
    pub fn new(sign: i8, log: T) -> Self {
        Acc {
            sign,
            log,
            zero_order: 0,
            pole_order: 0,
            tol: hit_tolerance(),
        }
    }

    /// Multiplies by `kind(π θ)^e`.
    #[inline]
    pub fn push(&mut self, kind: FactorKind, theta: T, e: i64) {
        let (v, dist) = match kind {
            FactorKind::Sin => (T::sin_pi(theta), (theta - theta.round()).abs()),
            FactorKind::Cos => {
                let h = theta - T::lit(0.5);
                (T::cos_pi(theta), (h - h.round()).abs())
            }
            FactorKind::Marker(_) => panic!("marker factors cannot be evaluated"),
        };
        if dist < self.tol {
            if e > 0 {
                self.zero_order += e;
            } else {
                self.pole_order -= e;
            }
            // sign of the regular part: drop the vanishing factor
            return;
        }
        self.push_value(v, e);
    }

    /// Multiplies by `v^e` for a nonzero `v`.
    #[inline]
    pub fn push_value(&mut self, v: T, e: i64) {
        if v < T::zero() && e % 2 != 0 {
            self.sign = -self.sign;
        }
        self.log = self.log + T::from_i64(e).unwrap() * v.abs().ln();
    }

    /// Registers an exact zero (`e > 0`) or pole of the given multiplicity.
    pub fn push_hit(&mut self, e: i64) {
        if e > 0 {
            self.zero_order += e;
        } else {
            self.pole_order -= e;
        }
    }

    pub fn flip(&mut self, odd: bool) {
        if odd {
            self.sign = -self.sign;
        }
    }

    pub fn finish(self) -> ExtValue<T> {
        let order = self.zero_order - self.pole_order;
        ExtValue {
            class: class_of(order),
            sign: self.sign,
            log_mag: self.log,
            order,
            cancellations: self.zero_order.min(self.pole_order) as u32,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chordal_formula() {
        let d = |a: f64, b: f64| 2.0 * (a - b).abs() / ((1.0 + a * a) * (1.0 + b * b)).sqrt();
        for (a, b) in [(0.3, -2.0), (5.0, 7.5), (-1e3, 1e-3), (0.0, 1.0)] {
            let (x, y) = (ExtValue::from_value(a), ExtValue::from_value(b));
            assert!((x.chordal(&y) - d(a, b)).abs() < 1e-14, "{a} {b}");
        }
        let pole = ExtValue::<f64>::from_value(f64::INFINITY);
        let zero = ExtValue::<f64>::from_value(0.0);
        assert!((pole.chordal(&zero) - 2.0).abs() < 1e-15);
        assert!((pole.chordal(&ExtValue::from_value(3.0)) - 2.0 / 10f64.sqrt()).abs() < 1e-15);
        let huge = ExtValue::<f64>::finite(1, 800.0);
        assert!(huge.chordal(&pole) < 1e-300);
    }

    #[test]
    fn mul_and_recip() {
        let a = ExtValue::<f64>::from_value(-2.0);
        let b = ExtValue::<f64>::from_value(0.25);
        assert!((a.mul(&b).value() + 0.5).abs() < 1e-15);
        assert!((a.recip().value() + 0.5).abs() < 1e-15);
        let z = ExtValue::<f64>::from_value(0.0);
        let p = z.recip();
        assert_eq!(p.class, ValueClass::Pole);
        let c = z.mul(&p);
        assert_eq!((c.class, c.cancellations), (ValueClass::Finite, 1));
    }
}
