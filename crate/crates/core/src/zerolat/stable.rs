use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::{ZeroPoleSets, zeros_in};
use crate::error::{Error, Result};
use crate::qfield::{ConvergentTable, QuadIrr, cf_expand, convergents, ell_alpha};
use crate::renorm::{CF_DEPTH, TrigSequence};
use crate::skewfactor::FactorKind;

/// Radii `R_0 = 2R`, `R_t = R + σ̄_n⁻¹(R_{t-1} - R)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Windows {
    pub base: QuadIrr,
    /// `σ̄_n⁻¹`
    pub expansion: QuadIrr,
    pub radii: Vec<QuadIrr>,
}

impl Windows {
    pub fn new(base: &QuadIrr, sigma_bar_n: &QuadIrr, count: usize) -> Self {
        let expansion = sigma_bar_n.recip();
        let mut radii = Vec::with_capacity(count);
        let mut r = base.mul_int(&BigInt::from(2));
        for _ in 0..count {
            radii.push(r.clone());
            r = base + &(&expansion * &(&r - base));
        }
        Windows {
            base: base.clone(),
            expansion,
            radii,
        }
    }

    /// The window `I_r = [-r/2, r/2)`.
    pub fn bounds(r: &QuadIrr) -> (QuadIrr, QuadIrr) {
        let h = r.div_int(&BigInt::from(2));
        (-&h, h)
    }
}

/// `σ̄_n = ᾱ_{μ+n} / ᾱ_μ`.
fn sigma_bar(tab: &ConvergentTable, mu: usize, n: usize) -> QuadIrr {
    tab.alpha_bar(mu + n) * &tab.alpha_bar(mu).recip()
}

/// The zero of `A_m°` that persists along `m ≡ μ (mod n)`: `σ/4` for the sine
/// seed and `σ/4 + 1/2` for the cosine seed, where `σ = α_μ`.
pub fn invariant_zero(kind: FactorKind, sigma: &QuadIrr) -> QuadIrr {
    let q = sigma.div_int(&BigInt::from(4));
    match kind {
        FactorKind::Cos => &q + &QuadIrr::from_ratio(1, 2),
        _ => q,
    }
}

/// Comparison of level `t` with level `t + 1` on the window `I_{R_t}`.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizationRow {
    pub t: usize,
    pub m: usize,
    pub q_m: i64,
    pub radius: QuadIrr,
    /// zeros plus poles of `A_t°` and `B_t°` in the window
    pub a_count: usize,
    pub b_count: usize,
    pub a_match: bool,
    pub b_match: bool,
    /// smallest point in the symmetric difference, if any
    pub a_diff: Option<QuadIrr>,
    pub b_diff: Option<QuadIrr>,
    /// a root of order two or more showed up at this level
    pub multiple: bool,
}

impl StabilizationRow {
    pub fn matches(&self) -> bool {
        self.a_match && self.b_match
    }
}

/// Per-level windowed zero/pole sets and their comparisons.
#[derive(Clone, Debug)]
pub struct StabilizationReport {
    pub kind: FactorKind,
    pub mu: usize,
    pub n: usize,
    /// `σ = α_μ`
    pub sigma: QuadIrr,
    pub sigma_bar_n: QuadIrr,
    pub windows: Windows,
    pub rows: Vec<StabilizationRow>,
    /// `(A_t°, B_t°)` sets for `t = 0..=t_max`, each on the widest window it
    /// was compared on
    pub sets: Vec<(ZeroPoleSets, ZeroPoleSets)>,
    /// `(ᾱ_m q_m, ᾱ_m q_{m-1})` per level
    pub densities: Vec<(f64, f64)>,
}

impl StabilizationReport {
    /// Smallest `t0` from which every comparison matches with a nonempty
    /// A-window.
    pub fn stable_from(&self) -> Option<usize> {
        let mut t0 = None;
        for r in self.rows.iter().rev() {
            if r.matches() && r.a_count > 0 {
                t0 = Some(r.t);
            } else {
                break;
            }
        }
        t0
    }

    pub fn t_max(&self) -> usize {
        self.sets.len() - 1
    }

    /// Lower bound for `θ` with `a_{*,j} = a_{t,j}` for `|j| <= θ q_m`, taken
    /// over levels `t0..t_max` against the last level.
    pub fn theta_estimate(&self, t0: usize) -> f64 {
        let last = &self.sets[self.t_max()].0.zeros;
        (t0..self.t_max())
            .map(|t| {
                let z = &self.sets[t].0.zeros;
                let (s, l) = (z.seq(), last.restrict(&z.lo, &z.hi).seq());
                let mut j = 0;
                while j <= s.symmetric_extent()
                    && s.get_exact(j) == l.get_exact(j)
                    && s.get_exact(-j) == l.get_exact(-j)
                {
                    j += 1;
                }
                (j - 1).max(0) as f64 / self.rows[t].q_m.max(1) as f64
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn first_diff(u: &ZeroPoleSets, v: &ZeroPoleSets) -> Option<QuadIrr> {
    let mut a: Vec<&QuadIrr> = u.zeros.points.iter().chain(&u.poles.points).collect();
    let mut b: Vec<&QuadIrr> = v.zeros.points.iter().chain(&v.poles.points).collect();
    a.sort();
    b.sort();
    a.iter()
        .filter(|p| b.binary_search(p).is_err())
        .chain(b.iter().filter(|p| a.binary_search(p).is_err()))
        .min()
        .map(|p| (*p).clone())
}

/// Compares the windowed zero/pole sets of `A_t°` and `B_t°` (levels
/// `m = μ + tn`) for consecutive `t`, with exact point equality.
pub fn stabilization_report(
    alpha: &QuadIrr,
    kind: FactorKind,
    mu: usize,
    n: usize,
    r: &QuadIrr,
    t_max: usize,
) -> Result<StabilizationReport> {
    if n == 0 || t_max == 0 {
        return Err(Error::Precondition("need n >= 1 and t_max >= 1".into()));
    }
    if r.signum() <= 0 {
        return Err(Error::Domain("window radius must be positive".into()));
    }
    let seq = TrigSequence::new(kind, alpha, mu + t_max * n)?;
    let sb = sigma_bar(seq.table(), mu, n);
    let windows = Windows::new(r, &sb, t_max);
    let sets = (0..=t_max)
        .into_par_iter()
        .map(|t| {
            let m = mu + t * n;
            let (lo, hi) = Windows::bounds(&windows.radii[t.min(t_max - 1)]);
            Ok((
                zeros_in(&seq.a_sym(m)?, &lo, &hi)?,
                zeros_in(&seq.b_sym(m)?, &lo, &hi)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..t_max)
        .map(|t| {
            let m = mu + t * n;
            let rad = &windows.radii[t];
            let (lo, hi) = Windows::bounds(rad);
            let cut = |s: &ZeroPoleSets| s.restrict(&lo, &hi);
            let (a0, b0) = (cut(&sets[t].0), cut(&sets[t].1));
            let (a1, b1) = (cut(&sets[t + 1].0), cut(&sets[t + 1].1));
            Ok(StabilizationRow {
                t,
                m,
                q_m: seq.q(m as isize)?,
                radius: rad.clone(),
                a_count: a0.zeros.len() + a0.poles.len(),
                b_count: b0.zeros.len() + b0.poles.len(),
                a_match: a0.same_points(&a1),
                b_match: b0.same_points(&b1),
                a_diff: first_diff(&a0, &a1),
                b_diff: first_diff(&b0, &b1),
                multiple: !(sets[t].0.all_simple() && sets[t].1.all_simple()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tab = seq.table();
    let densities = (0..=t_max)
        .map(|t| {
            let m = mu + t * n;
            let ab = tab.alpha_bar(m).to_f64();
            let q = |k: isize| tab.q(k).to_f64().unwrap_or(f64::INFINITY);
            (ab * q(m as isize), ab * q(m as isize - 1))
        })
        .collect();
    Ok(StabilizationReport {
        kind,
        mu,
        n,
        sigma: tab.alpha_k(mu).clone(),
        sigma_bar_n: sb,
        windows,
        rows,
        sets,
        densities,
    })
}

/// Limits for [`find_periodic_params_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchCaps {
    pub s_max: usize,
    pub tau_max: usize,
    /// highest level `t` examined
    pub t_cap: usize,
    /// matching consecutive comparisons required
    pub min_run: usize,
    /// levels with `q_m` above this are skipped
    pub max_q: i64,
}

impl Default for SearchCaps {
    fn default() -> Self {
        SearchCaps {
            s_max: 4,
            tau_max: 6,
            t_cap: 4,
            min_run: 3,
            max_q: 4_000_000,
        }
    }
}

/// Outcome of the `(μ, n)` search.
#[derive(Clone, Debug)]
pub struct PeriodicParams {
    pub kappa: usize,
    pub ell: usize,
    pub s: usize,
    pub tau: usize,
    pub mu: usize,
    pub n: usize,
    pub t0: usize,
    pub report: StabilizationReport,
    /// `α_μ/4` (sine) or `α_μ/4 + 1/2` (cosine)
    pub invariant_zero: QuadIrr,
    /// whether it lies in every A-window for `t >= t0`
    pub invariant_present: bool,
    /// `(s, τ)` pairs rejected before this one
    pub rejected: Vec<(usize, usize)>,
}

/// [`find_periodic_params_with`] under default caps and the given `t_cap`.
pub fn find_periodic_params(
    alpha: &QuadIrr,
    kind: FactorKind,
    r: &QuadIrr,
    t_cap: usize,
) -> Result<PeriodicParams> {
    find_periodic_params_with(
        alpha,
        kind,
        r,
        SearchCaps {
            t_cap,
            ..SearchCaps::default()
        },
    )
}

/// Searches `μ = κ + sℓ`, `n = τℓ` in lexicographic `(s, τ)` order for the
/// first pair whose windowed sets agree for at least `min_run` consecutive
/// comparisons up to the last level that fits under `max_q`.
///
/// For purely periodic α the pair is only accepted when the invariant zero is
/// present at every stable level.
pub fn find_periodic_params_with(
    alpha: &QuadIrr,
    kind: FactorKind,
    r: &QuadIrr,
    caps: SearchCaps,
) -> Result<PeriodicParams> {
    let exp = cf_expand(alpha, CF_DEPTH)?;
    let kappa = exp.preperiod();
    let ell = ell_alpha(&exp.periodic_part())?;
    let deepest = kappa + caps.s_max * ell + caps.t_cap * caps.tau_max * ell;
    let tab = convergents(&exp, deepest)?;
    let mut rejected = Vec::new();
    for s in 0..=caps.s_max {
        for tau in 1..=caps.tau_max {
            let (mu, n) = (kappa + s * ell, tau * ell);
            let t_max = (0..=caps.t_cap)
                .take_while(|&t| tab.q((mu + t * n) as isize) <= &BigInt::from(caps.max_q))
                .last()
                .unwrap_or(0);
            if t_max < caps.min_run {
                rejected.push((s, tau));
                continue;
            }
            let report = stabilization_report(alpha, kind, mu, n, r, t_max)?;
            let a_star = invariant_zero(kind, tab.alpha_k(mu));
            let Some(mut t0) = report.stable_from() else {
                rejected.push((s, tau));
                continue;
            };
            // the early windows can be too narrow to hold the invariant zero
            let holds = |t: usize| report.sets[t].0.zeros.contains(&a_star);
            if exp.is_purely_periodic()
                && let Some(first) = (t0..=t_max).find(|&t| (t..=t_max).all(holds))
            {
                t0 = first;
            }
            let present = (t0..=t_max).all(holds);
            if t_max - t0 < caps.min_run || (exp.is_purely_periodic() && !present) {
                rejected.push((s, tau));
                continue;
            }
            return Ok(PeriodicParams {
                kappa,
                ell,
                s,
                tau,
                mu,
                n,
                t0,
                report,
                invariant_zero: a_star,
                invariant_present: present,
                rejected,
            });
        }
    }
    Err(Error::SearchExhausted(rejected))
}
