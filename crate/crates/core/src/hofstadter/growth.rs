use rayon::prelude::*;

use super::OrbitSeq;
use crate::error::{Error, Result};
use crate::real::Real;

/// Shortest orbit accepted by [`growth_fit`].
pub const MIN_GROWTH_LEN: usize = 10_000;

// grid step in u = log j
const DU: f64 = 0.002;
// shortest lag and shortest overlap considered, in u
const MIN_LAG: f64 = 0.5;
const MIN_OVERLAP: f64 = 0.5;
// a lag is only trusted if the compared window contains this share of the rise
const MIN_RISE_SHARE: f64 = 0.05;

/// Side of the orbit carrying the large excursions of `log|y_j|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Envelope {
    /// records of `log|y_j|`
    Upper,
    /// records of `-log|y_j|`
    Lower,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SideFit {
    pub tau: f64,
    pub period: f64,
    /// rise of the record staircase over one period
    pub increment: f64,
    /// variance of the increments over their squared mean; 0 for an exactly
    /// self-similar staircase
    pub mismatch: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthFit {
    pub tau: f64,
    pub period: f64,
    pub dominant: Envelope,
    /// `None` when that staircase has no repeating structure in range
    pub upper: Option<SideFit>,
    pub lower: Option<SideFit>,
    /// least-squares slope and intercept of `log|y_j|` against `log j`
    pub ls_slope: f64,
    pub ls_intercept: f64,
    pub range: (usize, usize),
}

/// Growth exponent and log-period of an orbit over `j ∈ [J_max/100, J_max]`.
///
/// The large excursions of `log|y_j|` follow `Y(log j) j^τ` with `Y`
/// periodic. Both record staircases `M_±(u) = max_{j ≤ e^u} ±log|y_j|` are
/// compared with their own shifts: at the true period `P` the increment
/// `M(u + P) - M(u)` is constant, and `τ` is that increment over `P`. The side
/// with the larger `τ` is reported. The plain least-squares slope is kept as a
/// diagnostic; over less than a few periods it mostly reflects the phase of `Y`.
pub fn growth_fit<T: Real>(o: &OrbitSeq<T>) -> Result<GrowthFit> {
    let j = o.j_max();
    if j < MIN_GROWTH_LEN {
        return Err(Error::Precondition(format!(
            "growth fit needs J_max >= {MIN_GROWTH_LEN}, got {j}"
        )));
    }
    growth_fit_range(o, (j / 100).max(1), j)
}

/// [`growth_fit`] over an explicit range `lo..=hi` (`1 <= lo < hi <= J_max`).
pub fn growth_fit_range<T: Real>(o: &OrbitSeq<T>, lo: usize, hi: usize) -> Result<GrowthFit> {
    if lo == 0 || hi <= lo || hi > o.j_max() {
        return Err(Error::Precondition(format!("bad fit range {lo}..={hi}")));
    }
    let logs: Vec<f64> = o.logs[..=hi].iter().map(|v| v.to_f64().unwrap()).collect();
    let upper = side_fit(&logs, lo, hi, 1.0);
    let lower = side_fit(&logs, lo, hi, -1.0);
    let (ls_slope, ls_intercept) = least_squares(&logs, lo, hi);
    let (dominant, best) = match (&upper, &lower) {
        (Some(u), Some(l)) if l.tau > u.tau => (Envelope::Lower, l),
        (Some(u), _) => (Envelope::Upper, u),
        (None, Some(l)) => (Envelope::Lower, l),
        (None, None) => {
            return Err(Error::Precondition(format!(
                "range {lo}..={hi} too short to resolve a period"
            )));
        }
    };
    let best = best.clone();
    Ok(GrowthFit {
        tau: best.tau,
        period: best.period,
        dominant,
        upper,
        lower,
        ls_slope,
        ls_intercept,
        range: (lo, hi),
    })
}

fn least_squares(logs: &[f64], lo: usize, hi: usize) -> (f64, f64) {
    let n = (hi - lo + 1) as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (j, &y) in logs.iter().enumerate().take(hi + 1).skip(lo) {
        let x = (j as f64).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

fn side_fit(logs: &[f64], lo: usize, hi: usize, sign: f64) -> Option<SideFit> {
    // record staircase on a uniform grid in u
    let mut rec = Vec::with_capacity(logs.len());
    let mut m = f64::NEG_INFINITY;
    for &v in logs {
        m = m.max(sign * v);
        rec.push(m);
    }
    let (u0, u1) = ((lo as f64).ln(), (hi as f64).ln());
    let steps = ((u1 - u0) / DU).floor() as usize;
    let stair: Vec<f64> = (0..=steps)
        .map(|i| {
            let j = ((u0 + i as f64 * DU).exp() + 1e-9).floor() as usize;
            rec[j.clamp(lo, hi)]
        })
        .collect();
    let rise = stair[steps] - stair[0];
    let (k_min, k_max) = (
        (MIN_LAG / DU) as usize,
        steps.saturating_sub((MIN_OVERLAP / DU) as usize),
    );
    let best = (k_min..=k_max)
        .into_par_iter()
        .filter_map(|k| {
            let n = stair.len() - k;
            // the window must contain some of the structure it is matched on
            if stair[n - 1] - stair[0] < MIN_RISE_SHARE * rise || rise <= 0.0 {
                return None;
            }
            let inc: Vec<f64> = (0..n).map(|i| stair[i + k] - stair[i]).collect();
            let mean = inc.iter().sum::<f64>() / n as f64;
            if mean <= 0.0 {
                return None;
            }
            let var = inc.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
            Some((var / (mean * mean), k, mean))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (mismatch, k, increment) = best?;
    let period = k as f64 * DU;
    Some(SideFit {
        tau: increment / period,
        period,
        increment,
        mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hofstadter::{OrbitKind, orbit};
    use crate::qfield::QuadIrr;
    use crate::qfield::named::golden;

    fn synthetic(tau: f64, period: f64, j_max: usize) -> OrbitSeq<f64> {
        // a log-periodic bump train with a record every period
        let logs: Vec<f64> = (0..=j_max)
            .map(|j| {
                let u = (j.max(1) as f64).ln();
                let ph = (u / period).fract();
                tau * u + 3.0 * (2.0 * std::f64::consts::PI * ph).sin().powi(9)
            })
            .collect();
        OrbitSeq {
            kind: OrbitKind::Sine,
            alpha: golden(),
            x0: QuadIrr::zero(),
            signs: vec![1; j_max + 1],
            logs,
        }
    }

    #[test]
    fn recovers_synthetic_parameters() {
        let o = synthetic(0.5, 2.0, 200_000);
        let g = growth_fit(&o).unwrap();
        assert_eq!(g.dominant, Envelope::Upper);
        assert!((g.period - 2.0).abs() < 0.01, "{g:?}");
        assert!((g.tau - 0.5).abs() < 0.01, "{g:?}");
    }

    #[test]
    fn short_orbit_rejected() {
        let o = synthetic(0.5, 2.0, 5000);
        assert!(matches!(growth_fit(&o), Err(Error::Precondition(_))));
    }

    #[test]
    fn golden_orbits() {
        let p = 6.0 * (1.0 / golden().to_f64()).ln();
        for (kind, side) in [
            (OrbitKind::Sine, Envelope::Lower),
            (OrbitKind::Cosine, Envelope::Upper),
        ] {
            let o = orbit::<f64>(&golden(), kind, &QuadIrr::zero(), 100_000).unwrap();
            let g = growth_fit(&o).unwrap();
            assert_eq!(g.dominant, side);
            assert!((g.tau - 0.86).abs() < 0.05, "{kind:?} {g:?}");
            assert!((g.period / p - 1.0).abs() < 0.1, "{kind:?} {g:?}");
        }
    }

    #[test]
    fn fit_stable_across_disjoint_ranges() {
        let o = orbit::<f64>(&golden(), OrbitKind::Cosine, &QuadIrr::zero(), 1_000_000).unwrap();
        let a = growth_fit_range(&o, 100, 10_000).unwrap();
        let b = growth_fit_range(&o, 10_000, 1_000_000).unwrap();
        assert!((a.tau - b.tau).abs() <= 0.05, "{} vs {}", a.tau, b.tau);
    }
}
