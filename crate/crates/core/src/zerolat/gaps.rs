use std::collections::BTreeMap;

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::qfield::QuadIrr;
use crate::real::Real;

/// A gap length `dj·α - dk`, exact since α is irrational.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GapLength {
    pub dj: i64,
    pub dk: i64,
}

impl GapLength {
    pub fn exact(&self, alpha: &QuadIrr) -> QuadIrr {
        &alpha.mul_int(&BigInt::from(self.dj)) - &QuadIrr::from_int(self.dk)
    }

    pub fn value(&self, alpha: f64) -> f64 {
        self.dj as f64 * alpha - self.dk as f64
    }
}

/// Circular gap statistics of a finite rotation orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct GapStats {
    /// distinct lengths, ascending, with multiplicities
    pub lengths: Vec<(GapLength, u64)>,
    pub values: Vec<f64>,
}

impl GapStats {
    pub fn distinct(&self) -> usize {
        self.lengths.len()
    }

    pub fn total(&self) -> u64 {
        self.lengths.iter().map(|(_, c)| c).sum()
    }

    /// At most three lengths, and with three the largest is the sum of the
    /// other two (integer identity on the `(dj, dk)` pairs).
    pub fn three_gap_holds(&self) -> bool {
        match self.lengths.as_slice() {
            [_] | [_, _] => true,
            [(a, _), (b, _), (c, _)] => c.dj == a.dj + b.dj && c.dk == a.dk + b.dk,
            _ => false,
        }
    }
}

fn frac_phase(x: &QuadIrr) -> (u64, BigInt) {
    (x.phase64(), x.floor())
}

/// Sorted circle points `θ0 + jα mod 1`, `j = 1..=q`, as `(phase, j, k_j)`
/// with `θ0 + jα = k_j + frac`.
fn orbit_points(alpha: &QuadIrr, q: u64, theta0: &QuadIrr) -> Vec<(u64, i64, i64)> {
    let (pa, ka) = frac_phase(alpha);
    let (pt, kt) = frac_phase(theta0);
    let ka: i64 = ka.try_into().expect("α fits in i64");
    let kt: i64 = kt.try_into().expect("θ0 fits in i64");
    // points within this distance of an integer get an exact floor
    const NEAR: u64 = 1 << 24;
    let mut out = Vec::with_capacity(q as usize);
    let mut acc = pt as u128;
    let mut k = kt;
    for j in 1..=q as i64 {
        acc += pa as u128;
        k += ka;
        if acc >> 64 != 0 {
            k += 1;
            acc -= 1 << 64;
        }
        let ph = acc as u64;
        if !(NEAR..=u64::MAX - NEAR).contains(&ph) {
            let x = theta0 + &alpha.mul_int(&BigInt::from(j));
            let (p, f) = frac_phase(&x);
            let f: i64 = f.try_into().expect("orbit point fits in i64");
            out.push((p, j, f));
            // resync so later carries stay consistent
            acc = p as u128;
            k = f;
        } else {
            out.push((ph, j, k));
        }
    }
    out.par_sort_unstable();
    out
}

/// Gap statistics of `{θ0 + jα mod 1 : j = 1..=q}` on the circle.
///
/// Lengths are exact `(dj, dk)` pairs; θ0 cancels out of them.
pub fn three_gap(alpha: &QuadIrr, q: u64, theta0: &QuadIrr) -> GapStats {
    assert!(q >= 1, "q must be positive");
    let pts = orbit_points(alpha, q, theta0);
    let mut counts: BTreeMap<GapLength, u64> = BTreeMap::new();
    for w in pts.windows(2) {
        let g = GapLength {
            dj: w[1].1 - w[0].1,
            dk: w[1].2 - w[0].2,
        };
        *counts.entry(g).or_insert(0) += 1;
    }
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    let wrap = GapLength {
        dj: first.1 - last.1,
        dk: first.2 - last.2 - 1,
    };
    *counts.entry(wrap).or_insert(0) += 1;

    let mut lengths: Vec<(GapLength, u64, QuadIrr)> = counts
        .into_iter()
        .map(|(g, c)| {
            let e = g.exact(alpha);
            (g, c, e)
        })
        .collect();
    lengths.sort_by(|a, b| a.2.cmp(&b.2));
    let af = alpha.to_f64();
    GapStats {
        values: lengths.iter().map(|(g, _, _)| g.value(af)).collect(),
        lengths: lengths.into_iter().map(|(g, c, _)| (g, c)).collect(),
    }
}

/// Discrepancy of `{jα mod 1 : j = 1..=q}` over intervals `[0, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Discrepancy {
    pub q: u64,
    pub d: f64,
    /// `d / log q`
    pub normalized: f64,
}

/// `D_q = sup_x |#{j : x_j < x} - q x|`, evaluated at the jumps: with sorted
/// points `δ_1 < … < δ_q`, `D_q = max_k max(|k - qδ_k|, |k - 1 - qδ_k|)`.
pub fn discrepancy(alpha: &QuadIrr, q: u64) -> Discrepancy {
    assert!(q >= 2, "q must be at least 2");
    let pa = alpha.phase64();
    let mut ph: Vec<u64> = (1..=q).map(|j| pa.wrapping_mul(j)).collect();
    ph.par_sort_unstable();
    let qf = q as f64;
    let d = ph
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let x = qf * f64::from_phase(p);
            let k = (i + 1) as f64;
            (k - x).abs().max((k - 1.0 - x).abs())
        })
        .reduce(|| 0.0, f64::max);
    Discrepancy {
        q,
        d,
        normalized: d / qf.ln(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::named::{golden, silver};
    use proptest::prelude::*;

    fn brute_gaps(alpha: f64, q: u64, theta0: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = (1..=q)
            .map(|j| (theta0 + j as f64 * alpha).rem_euclid(1.0))
            .collect();
        pts.sort_by(f64::total_cmp);
        let mut g: Vec<f64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
        g.push(1.0 + pts[0] - pts[pts.len() - 1]);
        g
    }

    #[test]
    fn golden_five() {
        let s = three_gap(&golden(), 5, &QuadIrr::zero());
        let brute = brute_gaps(golden().to_f64(), 5, 0.0);
        assert_eq!(s.distinct(), 2);
        assert_eq!(
            s.lengths.iter().map(|l| l.1).collect::<Vec<_>>(),
            vec![2, 3]
        );
        assert!((s.values[0] - 0.145_898_033_750_315_4).abs() < 1e-12);
        assert!((s.values[1] - 0.236_067_977_499_789_7).abs() < 1e-12);
        for v in brute {
            assert!(s.values.iter().any(|w| (v - w).abs() < 1e-12));
        }
    }

    #[test]
    fn single_point() {
        let s = three_gap(&silver(), 1, &QuadIrr::from_ratio(1, 3));
        assert_eq!(s.distinct(), 1);
        assert_eq!(s.lengths[0].0.exact(&silver()), QuadIrr::one());
    }

    #[test]
    fn discrepancy_small() {
        let d = discrepancy(&golden(), 2);
        assert!(d.d <= 1.0);
        // brute force on a fine grid
        let a = golden().to_f64();
        let pts: Vec<f64> = (1..=8).map(|j| (j as f64 * a).fract()).collect();
        let mut best: f64 = 0.0;
        for i in 0..=200_000 {
            let x = i as f64 / 200_000.0;
            let c = pts.iter().filter(|&&p| p < x).count() as f64;
            best = best.max((c - 8.0 * x).abs());
        }
        let d8 = discrepancy(&golden(), 8).d;
        assert!(d8 >= best - 1e-9 && d8 <= best + 1e-4, "{d8} vs {best}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn gaps_match_brute_force(
            alpha in crate::qfield::tests_support::quad_irr(),
            q in 1u64..400,
            num in 0i64..97,
        ) {
            let theta0 = QuadIrr::from_ratio(num, 97);
            let s = three_gap(&alpha, q, &theta0);
            prop_assert!(s.three_gap_holds());
            prop_assert_eq!(s.total(), q);
            let a = alpha.fract().to_f64();
            let b = brute_gaps(a, q, num as f64 / 97.0);
            let sum: f64 = s.lengths.iter().zip(&s.values).map(|((_, c), v)| *c as f64 * v).sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            for v in b {
                prop_assert!(s.values.iter().any(|w| (v - w).abs() < 1e-9));
            }
        }
    }
}
