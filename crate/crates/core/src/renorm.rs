//! The renormalization operator on commuting pairs `(F, G) = ((1, B), (α, A))`
//! and its iterates.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qfield::{CfExpansion, ConvergentTable, QuadIrr, cf_expand, convergents, gauss_step};
use crate::real::Real;
use crate::skewfactor::{
    DEFAULT_FACTOR_BUDGET, ExtValue, FactorKind, FactorProduct, OrbitProduct, SkewMap, trig_factor,
};

/// Depth cap for continued-fraction period detection.
pub const CF_DEPTH: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct MapPair {
    pub f: SkewMap,
    pub g: SkewMap,
}

impl MapPair {
    /// # Errors
    /// If `F` does not rotate by exactly 1.
    pub fn new(f: SkewMap, g: SkewMap) -> Result<Self> {
        if f.rotation != QuadIrr::one() {
            return Err(Error::Precondition(format!(
                "F rotates by {}, not 1",
                f.rotation
            )));
        }
        Ok(MapPair { f, g })
    }

    /// `F = (1, 1)` and `G` the sine or cosine map for `α mod 1`.
    pub fn seed(kind: FactorKind, alpha: &QuadIrr) -> Self {
        MapPair {
            f: SkewMap::unit_translation(),
            g: trig_factor(kind, &alpha.fract()),
        }
    }

    pub fn alpha(&self) -> &QuadIrr {
        &self.g.rotation
    }
}

/// `F̌ = Λ⁻¹GΛ`, `Ǧ = Λ⁻¹FG^{-c}Λ` with `c = ⌊1/α⌋` and `Λ(x, y) = (αx, y)`.
pub fn renorm_step(p: &MapPair) -> Result<MapPair> {
    let alpha = p.alpha();
    let (c, next) = gauss_step(alpha)?;
    let c = i64::try_from(c).map_err(|_| Error::Capacity(format!("c = {c}")))?;
    let f = p.g.conjugate_scale(alpha);
    let g = p.f.compose(&p.g.power(-c)?).conjugate_scale(alpha);
    if f.rotation != QuadIrr::one() || g.rotation != next {
        return Err(Error::Internal(
            "rotation bookkeeping after renormalization step".into(),
        ));
    }
    Ok(MapPair { f, g })
}

/// Exponents `(a, b)` with `F̃ ~ F^a G^b` and `(c, d)` with `G̃ ~ F^c G^d`.
pub fn closed_form_exponents(tab: &ConvergentTable, m: usize) -> Result<((i64, i64), (i64, i64))> {
    let mi = m as isize;
    let get = |x: &BigInt| {
        x.to_i64()
            .ok_or_else(|| Error::Capacity(format!("exponent {x} at m = {m}")))
    };
    let (pm1, qm1, pm, qm) = (
        get(tab.p(mi - 1))?,
        get(tab.q(mi - 1))?,
        get(tab.p(mi))?,
        get(tab.q(mi))?,
    );
    let s = if m % 2 == 0 { 1 } else { -1 };
    Ok(((s * pm1, -s * qm1), (-s * pm, s * qm)))
}

/// `R^m(F, G)` in closed form: for even `m`,
/// `F̃ = Λ_m⁻¹ F^{p_{m-1}} G^{-q_{m-1}} Λ_m` and `G̃ = Λ_m⁻¹ F^{-p_m} G^{q_m} Λ_m`,
/// with all exponents negated for odd `m`; `Λ_m(x, y) = (ᾱ_m x, y)`.
pub fn renorm_power(p: &MapPair, m: usize) -> Result<MapPair> {
    renorm_power_with_budget(p, m, DEFAULT_FACTOR_BUDGET)
}

pub fn renorm_power_with_budget(p: &MapPair, m: usize, budget: u64) -> Result<MapPair> {
    if m == 0 {
        return Ok(p.clone());
    }
    let exp = cf_expand(p.alpha(), CF_DEPTH)?;
    let tab = convergents(&exp, m)?;
    let ((a, b), (c, d)) = closed_form_exponents(&tab, m)?;
    let word = |i: i64, j: i64| -> Result<SkewMap> {
        let fi =
            p.f.power_with_budget(i, budget)
                .map_err(|e| at_depth(e, m))?;
        let gj =
            p.g.power_with_budget(j, budget)
                .map_err(|e| at_depth(e, m))?;
        Ok(fi.compose(&gj))
    };
    let lam = tab.alpha_bar(m);
    let f = word(a, b)?.conjugate_scale(lam);
    let g = word(c, d)?.conjugate_scale(lam);
    if f.rotation != QuadIrr::one() || g.rotation != *tab.alpha_k(m) {
        return Err(Error::Internal(format!(
            "rotations after R^{m}: {} and {}",
            f.rotation, g.rotation
        )));
    }
    Ok(MapPair { f, g })
}

fn at_depth(e: Error, m: usize) -> Error {
    match e {
        Error::Capacity(s) => Error::Capacity(format!("{s} (at m = {m})")),
        other => other,
    }
}

/// Renormalized factors of a trigonometric seed `((1, 1), (α, A))`, kept in
/// compact orbit form so that `q_m` in the millions stays cheap.
#[derive(Clone, Debug)]
pub struct TrigSequence {
    kind: FactorKind,
    base: SkewMap,
    exp: CfExpansion,
    tab: ConvergentTable,
}

impl TrigSequence {
    pub fn new(kind: FactorKind, alpha: &QuadIrr, max_m: usize) -> Result<Self> {
        let exp = cf_expand(alpha, CF_DEPTH)?;
        let tab = convergents(&exp, max_m)?;
        Ok(TrigSequence {
            kind,
            base: trig_factor(kind, exp.alpha()),
            exp,
            tab,
        })
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn alpha(&self) -> &QuadIrr {
        self.exp.alpha()
    }

    pub fn expansion(&self) -> &CfExpansion {
        &self.exp
    }

    pub fn table(&self) -> &ConvergentTable {
        &self.tab
    }

    pub fn base(&self) -> &SkewMap {
        &self.base
    }

    pub fn max_m(&self) -> usize {
        self.tab.depth()
    }

    fn check(&self, m: usize) -> Result<()> {
        if m > self.tab.depth() {
            return Err(Error::Precondition(format!(
                "m = {m} beyond table depth {}",
                self.tab.depth()
            )));
        }
        Ok(())
    }

    /// `q_k` as `i64`, `k >= -1`.
    pub fn q(&self, k: isize) -> Result<i64> {
        let q = self.tab.q(k);
        q.to_i64()
            .ok_or_else(|| Error::Capacity(format!("q_{k} = {q}")))
    }

    /// `A^{*q_m}(ᾱ_m x)`.
    pub fn a_product(&self, m: usize) -> Result<OrbitProduct> {
        self.check(m)?;
        Ok(self
            .base
            .orbit_power(self.q(m as isize)?)
            .rescale(self.tab.alpha_bar(m)))
    }

    /// `A^{*q_{m-1}}(ᾱ_m x)`.
    pub fn b_product(&self, m: usize) -> Result<OrbitProduct> {
        self.check(m)?;
        Ok(self
            .base
            .orbit_power(self.q(m as isize - 1)?)
            .rescale(self.tab.alpha_bar(m)))
    }

    /// Factor of `G̃` after `m` steps: `A^{*(±q_m)}(ᾱ_m x)`, sign `(-1)^m`.
    pub fn g_factor(&self, m: usize) -> Result<OrbitProduct> {
        self.check(m)?;
        let s = if m % 2 == 0 { 1 } else { -1 };
        Ok(self
            .base
            .orbit_power(s * self.q(m as isize)?)
            .rescale(self.tab.alpha_bar(m)))
    }

    /// Factor of `F̃` after `m` steps: `A^{*(∓q_{m-1})}(ᾱ_m x)`.
    pub fn f_factor(&self, m: usize) -> Result<OrbitProduct> {
        self.check(m)?;
        let s = if m % 2 == 0 { -1 } else { 1 };
        Ok(self
            .base
            .orbit_power(s * self.q(m as isize - 1)?)
            .rescale(self.tab.alpha_bar(m)))
    }

    /// Symmetric factor `A_m°(z) = Ã(z - α_m/2)`.
    pub fn a_sym(&self, m: usize) -> Result<OrbitProduct> {
        let h = self.tab.alpha_k(m).div_int(&BigInt::from(2));
        Ok(self.g_factor(m)?.translate(&-h))
    }

    /// Symmetric factor `B_m°(z) = B̃(z - 1/2)`.
    pub fn b_sym(&self, m: usize) -> Result<OrbitProduct> {
        Ok(self.f_factor(m)?.translate(&QuadIrr::from_ratio(-1, 2)))
    }

    /// The pair `R^m` of the seed in explicit form (budgeted).
    pub fn explicit_pair(&self, m: usize, budget: u64) -> Result<MapPair> {
        let f = SkewMap::new(QuadIrr::one(), self.f_factor(m)?.to_explicit(budget)?);
        let g = SkewMap::new(
            self.tab.alpha_k(m).clone(),
            self.g_factor(m)?.to_explicit(budget)?,
        );
        Ok(MapPair { f, g })
    }
}

/// Evaluates `A^{*q_m}(ᾱ_m x)` over the grid.
pub fn rescaled_product<T: Real>(
    alpha: &QuadIrr,
    a: &FactorProduct,
    m: usize,
    grid: &[T],
) -> Result<Vec<ExtValue<T>>> {
    let exp = cf_expand(alpha, CF_DEPTH)?;
    let tab = convergents(&exp, m)?;
    let q = tab
        .q(m as isize)
        .to_i64()
        .ok_or_else(|| Error::Capacity("q_m".into()))?;
    let g = SkewMap::new(exp.alpha().clone(), a.clone());
    Ok(g.orbit_power(q).rescale(tab.alpha_bar(m)).eval_grid(grid))
}

/// One row of a convergence probe.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow<T> {
    pub t: usize,
    pub m: usize,
    pub q_m: i64,
    /// sup chordal distance between the A-sequence at `t` and `t - 1`
    pub delta_a: T,
    /// same for the B-sequence
    pub delta_b: T,
}

fn sup_chordal<T: Real>(u: &[ExtValue<T>], v: &[ExtValue<T>]) -> T {
    u.par_iter()
        .zip(v.par_iter())
        .map(|(a, b)| a.chordal(b))
        .reduce(T::zero, |a, b| a.max(b))
}

/// `Δ_t` for `t = 1..=t_max`: sup over the grid of the chordal distance
/// between successive rescaled products at `m = μ + tn`, for the A-sequence
/// `A^{*q_m}(ᾱ_m ·)` and the B-sequence `A^{*q_{m-1}}(ᾱ_m ·)`.
pub fn convergence_probe<T: Real>(
    alpha: &QuadIrr,
    kind: FactorKind,
    mu: usize,
    n: usize,
    t_max: usize,
    grid: &[T],
) -> Result<Vec<ProbeRow<T>>> {
    if n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    let seq = TrigSequence::new(kind, alpha, mu + t_max * n)?;
    let eval = |m: usize| -> Result<(Vec<ExtValue<T>>, Vec<ExtValue<T>>)> {
        Ok((
            seq.a_product(m)?.eval_grid(grid),
            seq.b_product(m)?.eval_grid(grid),
        ))
    };
    let mut prev = eval(mu)?;
    let mut rows = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        let m = mu + t * n;
        let cur = eval(m)?;
        rows.push(ProbeRow {
            t,
            m,
            q_m: seq.q(m as isize)?,
            delta_a: sup_chordal(&cur.0, &prev.0),
            delta_b: sup_chordal(&cur.1, &prev.1),
        });
        prev = cur;
    }
    Ok(rows)
}
