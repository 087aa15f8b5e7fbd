use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::{LimitFn, TailModel, sum_prime};
use crate::error::{Error, Result};
use crate::qfield::{QuadIrr, cf_expand, convergents};
use crate::renorm::{CF_DEPTH, MapPair, closed_form_exponents, renorm_power};
use crate::skewfactor::{FactorKind, FactorProduct, SkewMap};
use crate::zerolat::{StabilizationReport, ZeroPoleSets, ZeroSeq};

/// Which set an affine map reads from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SetSource {
    A,
    B,
}

/// A factor `S°(λ(z - h) + c + h_S)^e` of a renormalized symmetric factor,
/// seen as the map `x ↦ offset + slope·x` carrying a root of `S°` of order
/// `o` to a root of order `e·o`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub source: SetSource,
    pub offset: QuadIrr,
    /// `1/λ`
    pub slope: QuadIrr,
    pub exponent: i64,
}

impl AffineMap {
    pub fn apply(&self, x: &QuadIrr) -> QuadIrr {
        &self.offset + &(&self.slope * x)
    }

    /// Largest `r` with every image in `[-r, r)` coming from a source point
    /// inside `[-s, s)`.
    fn reach(&self, s: f64) -> f64 {
        // x = (z - offset)/slope
        let (o, k) = (self.offset.to_f64(), self.slope.to_f64().abs());
        (s * k - o.abs()).max(0.0)
    }
}

/// The affine maps of `R^n` acting on zero sets, traced with marker factors.
#[derive(Clone, Debug)]
pub struct MarkerMaps {
    pub sigma: QuadIrr,
    pub n: usize,
    pub sigma_bar_n: QuadIrr,
    /// maps producing the zeros of `A°` after `R^n`
    pub a_maps: Vec<AffineMap>,
    /// maps producing the zeros of `B°`
    pub b_maps: Vec<AffineMap>,
    /// `(q_n + p_n, q_{n-1} + p_{n-1})` for σ
    pub expected: (u64, u64),
}

impl MarkerMaps {
    pub fn counts(&self) -> (u64, u64) {
        let c = |v: &[AffineMap]| v.iter().map(|m| m.exponent.unsigned_abs()).sum();
        (c(&self.a_maps), c(&self.b_maps))
    }
}

fn maps_of(p: &FactorProduct, h_t: &QuadIrr, sigma_half: &QuadIrr) -> Result<Vec<AffineMap>> {
    p.iter()
        .map(|f| {
            let (source, h_s) = match f.kind {
                FactorKind::Marker(1) => (SetSource::A, sigma_half.clone()),
                FactorKind::Marker(0) => (SetSource::B, QuadIrr::from_ratio(1, 2)),
                k => {
                    return Err(Error::Internal(format!(
                        "unexpected factor {k} in marker run"
                    )));
                }
            };
            let slope = f.scale.recip();
            Ok(AffineMap {
                source,
                offset: h_t - &(&(&f.shift + &h_s) * &slope),
                slope,
                exponent: f.exponent,
            })
        })
        .collect()
}

/// Runs `R^n` on the pair `((1, B), (σ, A))` with opaque factors and reads off
/// the affine maps. They depend on σ and `n` only.
pub fn marker_maps(sigma: &QuadIrr, n: usize) -> Result<MarkerMaps> {
    let one = QuadIrr::one();
    let f = SkewMap::new(
        one.clone(),
        FactorProduct::single(FactorKind::Marker(0), one.clone(), QuadIrr::zero(), 1),
    );
    let g = SkewMap::new(
        sigma.clone(),
        FactorProduct::single(FactorKind::Marker(1), one, QuadIrr::zero(), 1),
    );
    let r = renorm_power(&MapPair::new(f, g)?, n)?;
    if r.g.rotation != *sigma {
        return Err(Error::Precondition(format!(
            "σ is not fixed by {n} Gauss steps"
        )));
    }
    let exp = cf_expand(sigma, CF_DEPTH)?;
    let tab = convergents(&exp, n)?;
    let u = |k: isize| (tab.p(k) + tab.q(k)).to_u64().unwrap_or(u64::MAX);
    let half = sigma.div_int(&BigInt::from(2));
    Ok(MarkerMaps {
        sigma: sigma.clone(),
        n,
        sigma_bar_n: tab.alpha_bar(n).clone(),
        a_maps: maps_of(&r.g.factor, &half, &half)?,
        b_maps: maps_of(&r.f.factor, &QuadIrr::from_ratio(1, 2), &half)?,
        expected: (u(n as isize), u(n as isize - 1)),
    })
}

/// Outcome of the fixed-point check on a stabilized window.
#[derive(Clone, Debug)]
pub struct FixedPointReport {
    pub counts: (u64, u64),
    pub expected: (u64, u64),
    /// checks run on `[-radius, radius)`
    pub radius: QuadIrr,
    pub a_points: usize,
    pub b_points: usize,
    pub a_equal: bool,
    pub b_equal: bool,
    pub a_mismatch: Option<QuadIrr>,
    pub b_mismatch: Option<QuadIrr>,
    /// sup over the grid of `|ψ̃ - ψ*|` and `|φ̃ - φ*|`
    pub psi_residual: f64,
    pub phi_residual: f64,
    /// sum of the tail bounds of the two sides, worst grid point
    pub psi_tail: f64,
    pub phi_tail: f64,
}

impl FixedPointReport {
    pub fn sets_equal(&self) -> bool {
        self.a_equal && self.b_equal
    }

    pub fn counts_match(&self) -> bool {
        self.counts == self.expected
    }

    pub fn functions_within_tails(&self) -> bool {
        self.psi_residual <= 2.0 * self.psi_tail && self.phi_residual <= 2.0 * self.phi_tail
    }

    pub fn passed(&self) -> bool {
        self.sets_equal() && self.counts_match() && self.functions_within_tails()
    }
}

fn signed_points(s: &ZeroPoleSets) -> Vec<(QuadIrr, i64)> {
    let z = s
        .zeros
        .points
        .iter()
        .zip(&s.zeros.orders)
        .map(|(p, &o)| (p.clone(), o as i64));
    let p = s
        .poles
        .points
        .iter()
        .zip(&s.poles.orders)
        .map(|(p, &o)| (p.clone(), -(o as i64)));
    z.chain(p).collect()
}

fn images(
    maps: &[AffineMap],
    a: &[(QuadIrr, i64)],
    b: &[(QuadIrr, i64)],
    lo: &QuadIrr,
    hi: &QuadIrr,
) -> BTreeMap<QuadIrr, i64> {
    let mut net = BTreeMap::new();
    for m in maps {
        let src = match m.source {
            SetSource::A => a,
            SetSource::B => b,
        };
        for (x, o) in src {
            let z = m.apply(x);
            if &z >= lo && &z < hi {
                *net.entry(z).or_insert(0) += m.exponent * o;
            }
        }
    }
    net.retain(|_, o| *o != 0);
    net
}

fn first_mismatch(u: &BTreeMap<QuadIrr, i64>, v: &[(QuadIrr, i64)]) -> Option<QuadIrr> {
    let w: BTreeMap<QuadIrr, i64> = v.iter().cloned().collect();
    u.iter()
        .filter(|(p, o)| w.get(p) != Some(o))
        .map(|(p, _)| p)
        .chain(
            w.iter()
                .filter(|(p, o)| u.get(p) != Some(o))
                .map(|(p, _)| p),
        )
        .min()
        .cloned()
}

fn sum_residual(
    images: &BTreeMap<QuadIrr, i64>,
    lim: &LimitFn,
    grid: &[f64],
) -> Result<(f64, f64)> {
    let zs: Vec<QuadIrr> = images
        .iter()
        .filter(|(_, o)| **o > 0)
        .map(|(p, _)| p.clone())
        .collect();
    let seq = ZeroSeq::new(zs);
    let tail = TailModel::fit(&seq, lim.tail.rho, lim.tail.j0);
    let j = lim.j.min(seq.symmetric_extent());
    let (mut res, mut tails): (f64, f64) = (0.0, 0.0);
    for &z in grid {
        let (u, v) = (
            sum_prime(&seq, &tail, z, j)?,
            sum_prime(&lim.zeros, &lim.tail, z, j)?,
        );
        if u.pole.is_some() || v.pole.is_some() {
            continue;
        }
        res = res.max((u.value - v.value).abs());
        tails = tails.max(u.tail_bound + v.tail_bound);
    }
    Ok((res, tails))
}

/// Checks that the affine images of the stabilized sets `(A*, B*)` reproduce
/// them exactly, and compares `ψ̃`, `φ̃` built from the images with `ψ*`,
/// `φ*` on `grid`.
pub fn fixed_point_check(
    rep: &StabilizationReport,
    maps: &MarkerMaps,
    psi: &LimitFn,
    phi: &LimitFn,
    grid: &[f64],
) -> Result<FixedPointReport> {
    let t = rep.t_max();
    let half = rep.windows.radii[t - 1].to_f64() / 2.0;
    let (a_full, b_full) = &rep.sets[t];
    let (lo_w, hi_w) = (&a_full.zeros.lo, &a_full.zeros.hi);
    let (a_set, b_set) = (a_full.restrict(lo_w, hi_w), b_full.restrict(lo_w, hi_w));
    let reach = maps
        .a_maps
        .iter()
        .chain(&maps.b_maps)
        .map(|m| m.reach(half * (1.0 - 1e-12)))
        .fold(half, f64::min);
    let r = QuadIrr::from_ratio((reach * 1024.0).floor() as i64, 1024);
    if r.signum() <= 0 {
        return Err(Error::Precondition(
            "stabilized window too small for the affine maps".into(),
        ));
    }
    let (lo, hi) = (-&r, r.clone());
    let (a, b) = (signed_points(&a_set), signed_points(&b_set));
    let (ia, ib) = (
        images(&maps.a_maps, &a, &b, &lo, &hi),
        images(&maps.b_maps, &a, &b, &lo, &hi),
    );
    let (wa, wb) = (
        signed_points(&a_set.restrict(&lo, &hi)),
        signed_points(&b_set.restrict(&lo, &hi)),
    );
    let (am, bm) = (first_mismatch(&ia, &wa), first_mismatch(&ib, &wb));
    let (psi_residual, psi_tail) = sum_residual(&ia, psi, grid)?;
    let (phi_residual, phi_tail) = sum_residual(&ib, phi, grid)?;
    Ok(FixedPointReport {
        counts: maps.counts(),
        expected: maps.expected,
        radius: r,
        a_points: wa.len(),
        b_points: wb.len(),
        a_equal: am.is_none(),
        b_equal: bm.is_none(),
        a_mismatch: am,
        b_mismatch: bm,
        psi_residual,
        phi_residual,
        psi_tail,
        phi_tail,
    })
}

/// A zero of `A*°` fixed by one of its own affine maps, and the expansion
/// factor `σ̄_n⁻¹` it suggests.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionEstimate {
    pub factor: f64,
    pub fixed_zero: Option<QuadIrr>,
    /// the palindromic word `K_1⋯K_J H K_J⋯K_1` whose maps fix it, outer
    /// letters first (`f` for `F^{±1}`, `g` for `G^{±1}`)
    pub word: Option<String>,
    /// words examined
    pub tried: usize,
}

impl ExpansionEstimate {
    pub fn conclusive(&self) -> bool {
        self.fixed_zero.is_some()
    }
}

/// Upper limit on the palindromic words examined by [`expansion_estimate`].
pub const MAX_WORDS: usize = 50_000;

/// Calls `f` on each `k`-subset of `0..n` in lexicographic order until it
/// returns `true` or `limit` subsets were visited. Returns the count visited.
fn for_each_subset(n: usize, k: usize, limit: usize, mut f: impl FnMut(&[usize]) -> bool) -> usize {
    if k > n {
        return 0;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut seen = 0;
    loop {
        seen += 1;
        if f(&idx) || seen >= limit {
            return seen;
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return seen;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Writes `G̃ = F^c G^d` (before scaling) as palindromic words built by
/// `H ↦ KHK` from `H = G^{±1}`, and looks for a zero `a ∈ A*` fixed by one of
/// the resulting maps `a ↦ offset + slope·a` (source A, positive exponent).
/// The factor `σ̄_n⁻¹` is reported either way.
pub fn expansion_estimate(
    rep: &StabilizationReport,
    maps: &MarkerMaps,
) -> Result<ExpansionEstimate> {
    let factor = maps.sigma_bar_n.recip().to_f64();
    let zeros = &rep.sets[rep.t_max()].0.zeros;
    let exp = cf_expand(&maps.sigma, CF_DEPTH)?;
    let tab = convergents(&exp, maps.n)?;
    let (_, (c, d)) = closed_form_exponents(&tab, maps.n)?;
    let inconclusive = |tried| ExpansionEstimate {
        factor,
        fixed_zero: None,
        word: None,
        tried,
    };
    if c % 2 != 0 || d % 2 == 0 {
        return Ok(inconclusive(0));
    }
    let one = QuadIrr::one();
    let f = SkewMap::new(
        one.clone(),
        FactorProduct::single(FactorKind::Marker(0), one.clone(), QuadIrr::zero(), 1),
    );
    let g = SkewMap::new(
        maps.sigma.clone(),
        FactorProduct::single(FactorKind::Marker(1), one, QuadIrr::zero(), 1),
    );
    let kf = f.power(c.signum())?;
    let kg = g.power(d.signum())?;
    let pairs = ((c.abs() + d.abs() - 1) / 2) as usize;
    let half = maps.sigma.div_int(&BigInt::from(2));
    let mut found = None;
    let tried = for_each_subset(pairs, (c.abs() / 2) as usize, MAX_WORDS, |fpos| {
        // pair 0 is outermost
        let is_f = |k: usize| fpos.binary_search(&k).is_ok();
        let mut h = kg.clone();
        for k in (0..pairs).rev() {
            let kk = if is_f(k) { &kf } else { &kg };
            h = kk.compose(&h.compose(kk));
        }
        let w = h.conjugate_scale(&maps.sigma_bar_n);
        let Ok(ms) = maps_of(&w.factor, &half, &half) else {
            return false;
        };
        let hit = ms.iter().find_map(|m| {
            if m.source != SetSource::A || m.exponent <= 0 {
                return None;
            }
            let a = &m.offset / &(&QuadIrr::one() - &m.slope);
            zeros.contains(&a).then_some(a)
        });
        if let Some(a) = hit {
            let word: String = (0..pairs)
                .map(|k| if is_f(k) { 'f' } else { 'g' })
                .collect();
            found = Some((a, word));
            return true;
        }
        false
    });
    Ok(match found {
        Some((a, w)) => ExpansionEstimate {
            factor,
            fixed_zero: Some(a),
            word: Some(w),
            tried,
        },
        None => inconclusive(tried),
    })
}
