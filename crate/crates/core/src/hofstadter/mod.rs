//! The self-dual Hofstadter model at zero energy: the one-step recursion,
//! orbit growth, the Θ-lift to `ℤ²` and approximate-eigenvector residuals.

mod growth;
mod lattice;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::qfield::QuadIrr;
use crate::real::Real;
use crate::skewfactor::{ExtValue, FactorKind, trig_factor};

pub use growth::{Envelope, GrowthFit, MIN_GROWTH_LEN, SideFit, growth_fit, growth_fit_range};
pub use lattice::{
    LatticeVector, Residual, calh_apply, default_xi, hofstadter_apply, residual, residual_with_xi,
    theta_lift,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrbitKind {
    Sine,
    Cosine,
    /// `y^s_j · y^c_j`, the even sublattice `w_{2j}` of the zero-energy solution.
    Combined,
}

impl OrbitKind {
    fn factors(self) -> &'static [FactorKind] {
        match self {
            OrbitKind::Sine => &[FactorKind::Sin],
            OrbitKind::Cosine => &[FactorKind::Cos],
            OrbitKind::Combined => &[FactorKind::Sin, FactorKind::Cos],
        }
    }
}

impl From<FactorKind> for OrbitKind {
    fn from(k: FactorKind) -> Self {
        match k {
            FactorKind::Sin => OrbitKind::Sine,
            FactorKind::Cos => OrbitKind::Cosine,
            FactorKind::Marker(_) => panic!("marker factors have no orbit"),
        }
    }
}

/// `y_0 = 1`, `y_{j+1} = A(x0 + jα) y_j`, stored as `(sign, log|y_j|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSeq<T> {
    pub kind: OrbitKind,
    pub alpha: QuadIrr,
    pub x0: QuadIrr,
    pub signs: Vec<i8>,
    pub logs: Vec<T>,
}

impl<T: Real> OrbitSeq<T> {
    /// Index of the last entry, `J_max`.
    pub fn j_max(&self) -> usize {
        self.logs.len() - 1
    }

    pub fn get(&self, j: usize) -> ExtValue<T> {
        ExtValue::finite(self.signs[j], self.logs[j])
    }

    /// Pointwise product, e.g. `w_{2j} = y^s_j y^c_j`.
    pub fn combine(&self, o: &Self) -> Result<Self> {
        if self.alpha != o.alpha || self.x0 != o.x0 {
            return Err(Error::Precondition("orbits of different maps".into()));
        }
        let len = self.logs.len().min(o.logs.len());
        Ok(OrbitSeq {
            kind: OrbitKind::Combined,
            alpha: self.alpha.clone(),
            x0: self.x0.clone(),
            signs: (0..len).map(|j| self.signs[j] * o.signs[j]).collect(),
            logs: (0..len).map(|j| self.logs[j] + o.logs[j]).collect(),
        })
    }
}

/// One elementary factor `sin(π u_j)^e` along `u_j = u_0 + j·step`, walked as
/// a 64-bit phase plus integer part.
struct PhaseWalk {
    start: QuadIrr,
    step: QuadIrr,
    step_phase: u64,
    step_floor: i64,
    phase: u64,
    floor: i64,
    exponent: i64,
}

// closer than this to an integer, the phase is replaced by an exact one
const NEAR: u64 = 1 << 24;

impl PhaseWalk {
    fn new(start: QuadIrr, step: QuadIrr, exponent: i64) -> Result<Self> {
        let to_i64 = |b: BigInt| {
            b.to_i64()
                .ok_or_else(|| Error::Capacity("orbit argument exceeds i64".into()))
        };
        let mut w = PhaseWalk {
            step_phase: step.phase64(),
            step_floor: to_i64(step.floor())?,
            phase: 0,
            floor: 0,
            start,
            step,
            exponent,
        };
        w.resync(0)?;
        Ok(w)
    }

    fn exact(&self, j: usize) -> QuadIrr {
        &self.start + &self.step.mul_int(&BigInt::from(j))
    }

    fn resync(&mut self, j: usize) -> Result<()> {
        let u = self.exact(j);
        if u.is_integer() {
            return Err(Error::PoleHit(j));
        }
        self.phase = u.phase64();
        self.floor = u
            .floor()
            .to_i64()
            .ok_or_else(|| Error::Capacity("orbit argument exceeds i64".into()))?;
        Ok(())
    }

    /// Current `(sign, log|sin(π u_j)|)`, resyncing exactly near roots.
    fn value<T: Real>(&mut self, j: usize) -> Result<(i8, T)> {
        if !(NEAR..=u64::MAX - NEAR).contains(&self.phase) {
            self.resync(j)?;
        }
        let f = self.phase.min(self.phase.wrapping_neg());
        let v = (T::PI() * T::from_phase(f)).sin().ln();
        let sign = if self.floor.rem_euclid(2) == 0 { 1 } else { -1 };
        Ok((sign, v))
    }

    fn advance(&mut self) {
        let (p, carry) = self.phase.overflowing_add(self.step_phase);
        self.phase = p;
        self.floor += self.step_floor + carry as i64;
    }
}

/// The orbit `y_{j+1} = A(x0 + jα) y_j`, `j = 0..J_max`, for the sine or cosine
/// factor or for their product.
///
/// Every elementary factor is tracked as an exact 64-bit phase, so the error
/// in `log|y_j|` grows at most linearly in `j`. A factor that vanishes exactly
/// along the orbit gives [`Error::PoleHit`].
pub fn orbit<T: Real>(
    alpha: &QuadIrr,
    kind: OrbitKind,
    x0: &QuadIrr,
    j_max: usize,
) -> Result<OrbitSeq<T>> {
    let mut walks = Vec::new();
    // constant part of each factor, e.g. from normalizing sin(-u) = -sin(u)
    let (mut c_sign, mut c_log) = (1i8, T::zero());
    for &fk in kind.factors() {
        let map = trig_factor(fk, alpha);
        c_sign *= map.factor.sign();
        c_log = c_log + T::lit(map.factor.log_mag());
        for e in map.factor.iter() {
            // cos(πθ) = sin(π(θ + 1/2))
            let off = &e.kind.root_offset();
            let start = &(&(&e.scale * x0) + &e.shift) + off;
            let step = &e.scale * alpha;
            walks.push(PhaseWalk::new(start, step, e.exponent)?);
        }
    }
    let mut signs = Vec::with_capacity(j_max + 1);
    let mut logs = Vec::with_capacity(j_max + 1);
    let (mut s, mut l) = (1i8, T::zero());
    signs.push(s);
    logs.push(l);
    for j in 0..j_max {
        s *= c_sign;
        l = l + c_log;
        for w in walks.iter_mut() {
            let (ws, wl) = w.value::<T>(j)?;
            if w.exponent % 2 != 0 {
                s *= ws;
            }
            l = l + T::from_i64(w.exponent).unwrap() * wl;
            w.advance();
        }
        signs.push(s);
        logs.push(l);
    }
    Ok(OrbitSeq {
        kind,
        alpha: alpha.clone(),
        x0: x0.clone(),
        signs,
        logs,
    })
}
