//! Zero and pole lattices of renormalized factors.

mod gaps;
mod stable;

use std::collections::BTreeMap;

use crate::error::Result;
use crate::qfield::QuadIrr;
use crate::skewfactor::{ElemFactor, FactorProduct, OrbitProduct};

pub use gaps::{Discrepancy, GapLength, GapStats, discrepancy, three_gap};
pub use stable::{
    PeriodicParams, SearchCaps, StabilizationReport, StabilizationRow, Windows,
    find_periodic_params, find_periodic_params_with, invariant_zero, stabilization_report,
};

/// Anything whose elementary factors can be listed near a window.
pub trait RootSource {
    /// Exact elementary factors that may have a root in `[lo, hi)`.
    fn root_candidates(&self, lo: &QuadIrr, hi: &QuadIrr) -> Vec<ElemFactor>;
}

impl RootSource for FactorProduct {
    fn root_candidates(&self, lo: &QuadIrr, hi: &QuadIrr) -> Vec<ElemFactor> {
        let (l, h) = (lo.to_f64(), hi.to_f64());
        self.iter()
            .filter(|f| f.kind.is_trig())
            .filter(|f| {
                let (s, c) = (f.scale.to_f64(), f.shift.to_f64());
                let o = if f.kind == crate::skewfactor::FactorKind::Cos {
                    0.5
                } else {
                    0.0
                };
                let (a, b) = (s * l + c - o, s * h + c - o);
                (a.max(b) + 1e-9).floor() >= (a.min(b) - 1e-9).ceil()
            })
            .collect()
    }
}

impl RootSource for OrbitProduct {
    fn root_candidates(&self, lo: &QuadIrr, hi: &QuadIrr) -> Vec<ElemFactor> {
        self.candidates(lo, hi)
    }
}

/// Sorted points of a window `[lo, hi)` with multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSet {
    pub lo: QuadIrr,
    pub hi: QuadIrr,
    pub points: Vec<QuadIrr>,
    pub orders: Vec<u64>,
    /// period `r_m = ᾱ_m⁻¹` when the set is periodic
    pub period: Option<QuadIrr>,
    /// points per period
    pub count_per_period: Option<u64>,
    /// `ρ = q / r_m`
    pub density: Option<f64>,
}

impl ZeroSet {
    fn from_map(lo: QuadIrr, hi: QuadIrr, m: &BTreeMap<QuadIrr, i64>, sign: i64) -> Self {
        let (points, orders) = m
            .iter()
            .filter(|&(_, &o)| o * sign > 0)
            .map(|(p, &o)| (p.clone(), o.unsigned_abs()))
            .unzip();
        ZeroSet {
            lo,
            hi,
            points,
            orders,
            period: None,
            count_per_period: None,
            density: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_simple(&self) -> bool {
        self.orders.iter().all(|&o| o == 1)
    }

    pub fn contains(&self, x: &QuadIrr) -> bool {
        self.points.binary_search(x).is_ok()
    }

    /// Points in `[lo, hi)`, keeping period data.
    pub fn restrict(&self, lo: &QuadIrr, hi: &QuadIrr) -> ZeroSet {
        let a = self.points.partition_point(|p| p < lo);
        let b = self.points.partition_point(|p| p < hi);
        ZeroSet {
            lo: lo.clone(),
            hi: hi.clone(),
            points: self.points[a..b].to_vec(),
            orders: self.orders[a..b].to_vec(),
            ..self.clone()
        }
    }

    /// Attaches period data: `ρ = ᾱ q`.
    pub fn with_period(mut self, alpha_bar: &QuadIrr, q: u64) -> ZeroSet {
        self.period = Some(alpha_bar.recip());
        self.count_per_period = Some(q);
        self.density = Some(alpha_bar.to_f64() * q as f64);
        self
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.points.iter().map(QuadIrr::to_f64).collect()
    }

    /// Consecutive differences, exact.
    pub fn gaps(&self) -> Vec<QuadIrr> {
        self.points.windows(2).map(|w| &w[1] - &w[0]).collect()
    }

    pub fn seq(&self) -> ZeroSeq {
        ZeroSeq::new(self.points.clone())
    }
}

/// Zeros and poles of a product in a window.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroPoleSets {
    pub zeros: ZeroSet,
    pub poles: ZeroSet,
    /// points of order two or more (zeros positive, poles negative)
    pub multiple: Vec<(QuadIrr, i64)>,
}

impl ZeroPoleSets {
    pub fn all_simple(&self) -> bool {
        self.multiple.is_empty()
    }

    pub fn restrict(&self, lo: &QuadIrr, hi: &QuadIrr) -> ZeroPoleSets {
        ZeroPoleSets {
            zeros: self.zeros.restrict(lo, hi),
            poles: self.poles.restrict(lo, hi),
            multiple: self
                .multiple
                .iter()
                .filter(|(p, _)| p >= lo && p < hi)
                .cloned()
                .collect(),
        }
    }

    /// True when the zero sets and pole sets coincide exactly.
    pub fn same_points(&self, o: &ZeroPoleSets) -> bool {
        self.zeros.points == o.zeros.points
            && self.zeros.orders == o.zeros.orders
            && self.poles.points == o.poles.points
            && self.poles.orders == o.poles.orders
    }
}

/// Zeros and poles in `[lo, hi)`; exactly coinciding roots are merged by net
/// order.
pub fn zeros_in<S: RootSource + ?Sized>(
    src: &S,
    lo: &QuadIrr,
    hi: &QuadIrr,
) -> Result<ZeroPoleSets> {
    let mut net: BTreeMap<QuadIrr, i64> = BTreeMap::new();
    for f in src.root_candidates(lo, hi) {
        for r in f.roots_in(lo, hi) {
            *net.entry(r).or_insert(0) += f.exponent;
        }
    }
    net.retain(|_, o| *o != 0);
    let multiple = net
        .iter()
        .filter(|(_, o)| o.abs() >= 2)
        .map(|(p, &o)| (p.clone(), o))
        .collect();
    Ok(ZeroPoleSets {
        zeros: ZeroSet::from_map(lo.clone(), hi.clone(), &net, 1),
        poles: ZeroSet::from_map(lo.clone(), hi.clone(), &net, -1),
        multiple,
    })
}

/// Zeros and poles in `[-r, r)`.
pub fn zeros_of<S: RootSource + ?Sized>(src: &S, r: &QuadIrr) -> Result<ZeroPoleSets> {
    zeros_in(src, &-r, r)
}

/// A window of the increasing sequence `j ↦ s_j`, where `s_0` is the smallest
/// nonnegative point.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSeq {
    points: Vec<QuadIrr>,
    values: Vec<f64>,
    zero_index: usize,
}

impl ZeroSeq {
    /// `points` must be sorted ascending.
    pub fn new(points: Vec<QuadIrr>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        let zero_index = points.partition_point(|p| p.signum() < 0);
        let values = points.iter().map(QuadIrr::to_f64).collect();
        ZeroSeq {
            points,
            values,
            zero_index,
        }
    }

    /// Float-only sequence (for synthetic tests).
    pub fn from_f64(values: Vec<f64>) -> Self {
        debug_assert!(values.windows(2).all(|w| w[0] < w[1]));
        let zero_index = values.partition_point(|&v| v < 0.0);
        ZeroSeq {
            points: Vec::new(),
            values,
            zero_index,
        }
    }

    pub fn j_min(&self) -> i64 {
        -(self.zero_index as i64)
    }

    /// Last index; `j_min - 1` when empty.
    pub fn j_max(&self) -> i64 {
        self.values.len() as i64 - self.zero_index as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn slot(&self, j: i64) -> Option<usize> {
        let i = j + self.zero_index as i64;
        (i >= 0 && (i as usize) < self.values.len()).then_some(i as usize)
    }

    pub fn get(&self, j: i64) -> Option<f64> {
        self.slot(j).map(|i| self.values[i])
    }

    pub fn get_exact(&self, j: i64) -> Option<&QuadIrr> {
        self.slot(j).and_then(|i| self.points.get(i))
    }

    /// `(j, s_j)` pairs in order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let j0 = self.j_min();
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (j0 + i as i64, v))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest `J` with `s_j` present for every `|j| <= J`.
    pub fn symmetric_extent(&self) -> i64 {
        (-self.j_min()).min(self.j_max())
    }
}

/// `max_j |j - ρ s_j| / log q`.
pub fn regularity_check(s: &ZeroSeq, rho: f64, q: u64) -> f64 {
    let lq = (q.max(2) as f64).ln();
    s.iter()
        .map(|(j, v)| (j as f64 - rho * v).abs())
        .fold(0.0, f64::max)
        / lq
}

/// `max_{|j| >= 2} |j - ρ s_j| / log|j|`, the limit-set form.
pub fn regularity_log_j(s: &ZeroSeq, rho: f64) -> f64 {
    s.iter()
        .filter(|(j, _)| j.abs() >= 2)
        .map(|(j, v)| (j as f64 - rho * v).abs() / (j.abs() as f64).ln())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::named::golden;
    use crate::renorm::TrigSequence;
    use crate::skewfactor::{FactorKind, trig_factor};
    use num_bigint::BigInt;

    #[test]
    fn single_factor_lattice() {
        let a = golden();
        let q4 = a.div_int(&BigInt::from(4));
        let p = FactorProduct::single(FactorKind::Sin, QuadIrr::one(), -&q4, 1);
        let z = zeros_of(&p, &QuadIrr::from_int(2)).unwrap();
        let want: Vec<QuadIrr> = (-2..=1).map(|k| &q4 + &QuadIrr::from_int(k)).collect();
        assert_eq!(z.zeros.points, want);
        assert!(z.poles.is_empty());
    }

    #[test]
    fn five_fold_product_simple() {
        let a = golden();
        let g = trig_factor(FactorKind::Sin, &a);
        let s = g.power(5).unwrap().symmetric_factor();
        let z = zeros_in(&s, &QuadIrr::zero(), &QuadIrr::one()).unwrap();
        assert_eq!(z.zeros.len(), 5);
        assert_eq!(z.poles.len(), 5);
        assert!(z.all_simple());
        assert!(z.zeros.points.iter().all(|p| !z.poles.contains(p)));
    }

    #[test]
    fn orbit_and_explicit_zero_sets_agree() {
        let seq = TrigSequence::new(FactorKind::Cos, &golden(), 12).unwrap();
        let r = QuadIrr::from_int(5);
        for m in [6, 9, 12] {
            let o = seq.a_sym(m).unwrap();
            let e = o.to_explicit(1 << 20).unwrap();
            assert_eq!(
                zeros_of(&o, &r).unwrap(),
                zeros_of(&e, &r).unwrap(),
                "m={m}"
            );
        }
    }

    #[test]
    fn zero_seq_indexing() {
        let pts: Vec<QuadIrr> = [-3, -1, 0, 2, 5]
            .iter()
            .map(|&k| QuadIrr::from_int(k))
            .collect();
        let s = ZeroSeq::new(pts);
        assert_eq!((s.j_min(), s.j_max()), (-2, 2));
        assert_eq!(s.get(0), Some(0.0));
        assert_eq!(s.get(-2), Some(-3.0));
        assert_eq!(s.symmetric_extent(), 2);
    }

    #[test]
    fn regularity_of_progression() {
        let rho = 1.7;
        let s = ZeroSeq::from_f64((-50..=50).map(|j| j as f64 / rho).collect());
        assert!(regularity_check(&s, rho, 100) < 1e-12);
    }
}
