//! Limit zero sequences, symmetric sums and the limit factors `A*°`, `B*°`.

mod fixed;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qfield::QuadIrr;
use crate::real::Real;
use crate::renorm::TrigSequence;
use crate::skewfactor::{Acc, ExtValue, FactorKind};
use crate::zerolat::{StabilizationReport, ZeroSeq, regularity_log_j};

pub use fixed::{
    AffineMap, ExpansionEstimate, FixedPointReport, MarkerMaps, SetSource, expansion_estimate,
    fixed_point_check, marker_maps,
};

/// Default tolerance for the adaptive truncation level.
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

/// Points closer than this to a zero or pole are classified, not evaluated.
pub const NEAR_ROOT: f64 = 1e-8;

/// Constants `(ρ, C, J0)` with `|ρ s_j - j| <= C log|j|` for `|j| >= J0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailModel {
    pub rho: f64,
    pub c: f64,
    pub j0: i64,
}

impl TailModel {
    /// Fits `C` over the given window as the largest ratio
    /// `|ρ s_j - j| / log|j|` for `|j| >= j0`, padded upward by 10% plus 0.01.
    pub fn fit(seq: &ZeroSeq, rho: f64, j0: i64) -> Self {
        let j0 = j0.max(2);
        let c = seq
            .iter()
            .filter(|(j, _)| j.abs() >= j0)
            .map(|(j, s)| (rho * s - j as f64).abs() / (j.abs() as f64).ln())
            .fold(0.0, f64::max);
        TailModel {
            rho,
            c: c * 1.1 + 0.01,
            j0,
        }
    }

    /// Constant for the shifted sequence `s_j - z`.
    fn shifted_c(&self, z_abs: f64) -> f64 {
        self.c + self.rho * z_abs / (self.j0.max(3) as f64).ln()
    }

    /// Bound `8Cρ(1 + log J)/J` on `Σ_{j>J} |1/(z - s_j) + 1/(z - s_{-j})|`,
    /// or `None` when `J` is outside the range where it applies.
    pub fn sum_tail(&self, j: i64, z_abs: f64) -> Option<f64> {
        let c = self.shifted_c(z_abs);
        let jf = j as f64;
        (j >= self.j0 && 2.0 * c * jf.ln() <= jf).then(|| 8.0 * c * self.rho * (1.0 + jf.ln()) / jf)
    }

    /// Smallest `J <= j_cap` whose tail bound at `|z| <= z_abs` is below
    /// `tol`; `j_cap` itself when none is.
    pub fn choose_j(&self, z_abs: f64, tol: f64, j_cap: i64) -> i64 {
        let ok = |j: i64| self.sum_tail(j, z_abs).is_some_and(|b| b <= tol);
        if !ok(j_cap) {
            return j_cap;
        }
        // the bound decreases in J once it applies
        let (mut lo, mut hi) = (self.j0, j_cap);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) { hi = mid } else { lo = mid + 1 }
        }
        lo
    }
}

/// A symmetric partial sum with its tail bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimeSum<T> {
    /// `±∞` at a pole
    pub value: T,
    pub tail_bound: T,
    /// index of the retained point that `z` hits
    pub pole: Option<i64>,
}

/// `Σ_{|j|<=J} 1/(z - s_j)` with the tail bound for the rest of the
/// symmetric limit.
pub fn sum_prime<T: Real>(seq: &ZeroSeq, tail: &TailModel, z: T, j: i64) -> Result<PrimeSum<T>> {
    if j < tail.j0 {
        return Err(Error::Precondition(format!(
            "J = {j} below J0 = {}",
            tail.j0
        )));
    }
    if j > seq.symmetric_extent() {
        return Err(Error::Capacity(format!(
            "J = {j} beyond the known window (|j| <= {})",
            seq.symmetric_extent()
        )));
    }
    let zf = z.to_f64().unwrap_or(f64::NAN);
    let bound = tail
        .sum_tail(j, zf.abs())
        .ok_or_else(|| Error::Precondition(format!("2C log J <= J fails at J = {j}")))?;
    let term = |k: i64| T::one() / (z - T::lit(seq.get(k).expect("within extent")));
    for k in -j..=j {
        let s = seq.get(k).expect("within extent");
        if (zf - s).abs() < NEAR_ROOT {
            return Ok(PrimeSum {
                value: T::infinity(),
                tail_bound: T::lit(bound),
                pole: Some(k),
            });
        }
    }
    // pair from the outside in, so the cancelling large-|j| terms meet first
    let mut acc = T::zero();
    for k in (1..=j).rev() {
        acc = acc + (term(k) + term(-k));
    }
    Ok(PrimeSum {
        value: acc + term(0),
        tail_bound: T::lit(bound),
        pole: None,
    })
}

/// The limit zero sequences `a_{*,j}`, `b_{*,j}` on the stabilized window.
#[derive(Clone, Debug)]
pub struct LimitZeros {
    pub kind: FactorKind,
    pub a: ZeroSeq,
    pub b: ZeroSeq,
    pub tail_a: TailModel,
    pub tail_b: TailModel,
    /// full width of the window the sequences come from
    pub window: QuadIrr,
}

impl LimitZeros {
    /// Zeros of the last level of a stabilization report, which agree with
    /// the limit sets on the last window.
    pub fn from_report(rep: &StabilizationReport) -> Result<Self> {
        let t = rep.t_max();
        let (a, b) = &rep.sets[t];
        let (lo, hi) = (&a.zeros.lo, &a.zeros.hi);
        let w = &rep.windows.radii[t - 1];
        let (a, b) = (
            a.zeros.restrict(lo, hi).seq(),
            b.zeros.restrict(lo, hi).seq(),
        );
        if a.symmetric_extent() < 4 {
            return Err(Error::Precondition(
                "stabilized window holds too few zeros".into(),
            ));
        }
        let (ra, rb) = rep.densities[t];
        Ok(LimitZeros {
            kind: rep.kind,
            tail_a: TailModel::fit(&a, ra, 2),
            tail_b: TailModel::fit(&b, rb, 2),
            a,
            b,
            window: w.clone(),
        })
    }

    /// `max_{|j|>=2} |j - ρ s_j| / log|j|` for both sequences.
    pub fn regularity(&self) -> (f64, f64) {
        (
            regularity_log_j(&self.a, self.tail_a.rho),
            regularity_log_j(&self.b, self.tail_b.rho),
        )
    }
}

/// A meromorphic function from its zero sequence: the symmetric sum
/// `ψ(z) = Σ' 1/(z - a_j)` and the paired product
/// `A°(z) = Π' (1 - z/a_j)(1 + z/a_j)⁻¹`, truncated at `|j| <= J`.
#[derive(Clone, Debug)]
pub struct LimitFn {
    pub zeros: ZeroSeq,
    pub tail: TailModel,
    pub j: i64,
}

/// A value of a limit factor with a relative error bound from truncation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitValue<T> {
    pub value: ExtValue<T>,
    /// bound on `|A_J(z)/A(z) - 1|`; infinite when no bound applies
    pub rel_tail: T,
}

impl LimitFn {
    pub fn new(zeros: ZeroSeq, tail: TailModel, j: i64) -> Result<Self> {
        if j > zeros.symmetric_extent() || j < tail.j0 {
            return Err(Error::Precondition(format!(
                "truncation J = {j} out of range"
            )));
        }
        Ok(LimitFn { zeros, tail, j })
    }

    /// `ψ(z)`.
    pub fn psi<T: Real>(&self, z: T) -> Result<PrimeSum<T>> {
        sum_prime(&self.zeros, &self.tail, z, self.j)
    }

    /// `ψ(z) + ψ(-z)`, the logarithmic derivative of the product.
    pub fn log_deriv<T: Real>(&self, z: T) -> Result<PrimeSum<T>> {
        let (p, m) = (self.psi(z)?, self.psi(-z)?);
        Ok(PrimeSum {
            value: p.value + m.value,
            tail_bound: p.tail_bound + m.tail_bound,
            pole: p.pole.or(m.pole),
        })
    }

    /// The paired product at `z`. Equals 1 at `z = 0` exactly.
    pub fn eval<T: Real>(&self, z: T) -> LimitValue<T> {
        let zf = z.to_f64().unwrap_or(f64::NAN);
        let mut acc = Acc::new(1, T::zero());
        let mut push = |a: f64| {
            if (zf - a).abs() < NEAR_ROOT {
                acc.push_hit(1);
            } else {
                acc.push_value(T::one() - z / T::lit(a), 1);
            }
            if (zf + a).abs() < NEAR_ROOT {
                acc.push_hit(-1);
            } else {
                acc.push_value(T::one() + z / T::lit(a), -1);
            }
        };
        for k in (1..=self.j).rev() {
            push(self.zeros.get(k).expect("within extent"));
            push(self.zeros.get(-k).expect("within extent"));
        }
        push(self.zeros.get(0).expect("within extent"));
        // log A_J - log A = -∫_0^z (tail(w) + tail(-w)) dw
        let err = self
            .tail
            .sum_tail(self.j, zf.abs())
            .map(|b| 2.0 * zf.abs() * b);
        LimitValue {
            value: acc.finish(),
            rel_tail: T::lit(err.map_or(f64::INFINITY, f64::exp_m1)),
        }
    }

    pub fn eval_grid<T: Real>(&self, zs: &[T]) -> Vec<LimitValue<T>> {
        zs.par_iter().map(|&z| self.eval(z)).collect()
    }
}

/// `ψ*`, `φ*` and the limit factors, sharing zero sequences.
#[derive(Clone, Debug)]
pub struct Limits {
    /// zeros of `A*°`; `psi` is `ψ*`
    pub a: LimitFn,
    /// zeros of `B*°`; `psi` is `φ*`
    pub b: LimitFn,
}

/// Builds the limit functions with truncation chosen so that the tail bound
/// at `|z| <= z_max` drops below `tol`, capped by the known window.
pub fn build_limit(lz: &LimitZeros, z_max: f64, tol: f64) -> Result<Limits> {
    let pick = |s: &ZeroSeq, t: &TailModel| -> Result<LimitFn> {
        let cap = s.symmetric_extent();
        LimitFn::new(s.clone(), *t, t.choose_j(z_max, tol, cap))
    };
    Ok(Limits {
        a: pick(&lz.a, &lz.tail_a)?,
        b: pick(&lz.b, &lz.tail_b)?,
    })
}

/// Sup chordal distance on `grid` between `A*°` and the level factors `A_t°`
/// at `m = μ + tn`, for each requested `t`.
pub fn level_distances<T: Real>(
    lim: &LimitFn,
    alpha: &QuadIrr,
    kind: FactorKind,
    mu: usize,
    n: usize,
    ts: &[usize],
    grid: &[T],
) -> Result<Vec<(usize, T)>> {
    let t_top = ts.iter().copied().max().unwrap_or(0);
    let seq = TrigSequence::new(kind, alpha, mu + t_top * n)?;
    let star = lim.eval_grid(grid);
    ts.iter()
        .map(|&t| {
            let vals = seq.a_sym(mu + t * n)?.eval_grid(grid);
            let d = vals
                .iter()
                .zip(&star)
                .map(|(u, v)| u.chordal(&v.value))
                .fold(T::zero(), |a, b| a.max(b));
            Ok((t, d))
        })
        .collect()
}
