use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::{OrbitKind, orbit};
use crate::error::{Error, Result};
use crate::qfield::{QuadIrr, cf_expand, convergents};
use crate::real::Real;
use crate::skewfactor::ExtValue;

/// `ξ = α/2 + 1/2`: with it the orbit started at `x0 = 0` solves the
/// zero-energy recursion `w_{k+1} = -(a_k/a_{k+1}) w_{k-1}`,
/// `a_k = cos(π(kα - ξ))`.
pub fn default_xi(alpha: &QuadIrr) -> QuadIrr {
    let two = BigInt::from(2);
    &alpha.div_int(&two) + &QuadIrr::from_ratio(1, 2)
}

/// Turns `r mod 1` as 64-bit phases; products with integers wrap exactly.
#[derive(Clone, Copy, Debug)]
struct Phases {
    alpha: u64,
    half_alpha: u64,
    half_xi: u64,
}

impl Phases {
    fn new(alpha: &QuadIrr, xi: &QuadIrr) -> Self {
        let two = BigInt::from(2);
        Phases {
            alpha: alpha.phase64(),
            half_alpha: alpha.div_int(&two).phase64(),
            half_xi: xi.div_int(&two).phase64(),
        }
    }

    /// `Θ_{ξ,n,m} = e^{-πi m(m+1)α} e^{πi(m-n)ξ} e^{(π/2)i k(k+1)α}`, `k = n + m`.
    fn theta(&self, n: i64, m: i64) -> u64 {
        let k = n + m;
        let tm = (m * (m + 1) / 2) as u64;
        let tk = (k * (k + 1) / 2) as u64;
        self.half_alpha
            .wrapping_mul(tk)
            .wrapping_sub(self.alpha.wrapping_mul(tm))
            .wrapping_add(self.half_xi.wrapping_mul((m - n) as u64))
    }

    /// `cos(π(kα - ξ))`
    fn a<T: Real>(&self, k: i64) -> T {
        let p = self
            .half_alpha
            .wrapping_mul(k as u64)
            .wrapping_sub(self.half_xi);
        turn::<T>(p).re
    }
}

fn turn<T: Real>(p: u64) -> Complex<T> {
    let f = T::from_phase(p);
    let two = T::lit(2.0);
    Complex::new(T::cos_pi(two * f), T::sin_pi(two * f))
}

/// Finitely supported `φ: ℤ² → ℂ`, stored as `e^{log_scale} · amps`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeVector<T> {
    pub log_scale: T,
    pub amps: BTreeMap<(i64, i64), Complex<T>>,
}

impl<T: Real> Default for LatticeVector<T> {
    fn default() -> Self {
        LatticeVector {
            log_scale: T::zero(),
            amps: BTreeMap::new(),
        }
    }
}

impl<T: Real> LatticeVector<T> {
    pub fn delta(n: i64, m: i64) -> Self {
        let mut v = Self::default();
        v.amps.insert((n, m), Complex::new(T::one(), T::zero()));
        v
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Amplitude at `(n, m)`, zero off the support.
    pub fn get(&self, n: i64, m: i64) -> Complex<T> {
        self.amps
            .get(&(n, m))
            .map_or(Complex::new(T::zero(), T::zero()), |a| {
                a * self.log_scale.exp()
            })
    }

    /// `log ‖φ‖_2`.
    pub fn log_norm(&self) -> T {
        let s: T = self.amps.values().map(|a| a.norm_sqr()).sum();
        self.log_scale + s.ln() / T::lit(2.0)
    }

    /// `⟨φ, χ⟩ = Σ conj(φ) χ`.
    pub fn inner(&self, o: &Self) -> Complex<T> {
        let s: Complex<T> = self
            .amps
            .iter()
            .filter_map(|(k, a)| o.amps.get(k).map(|b| a.conj() * b))
            .fold(Complex::new(T::zero(), T::zero()), |x, y| x + y);
        s * (self.log_scale + o.log_scale).exp()
    }

    /// `(𝒰φ)(n, m) = φ(n, m-1)`.
    pub fn dual_u(&self) -> Self {
        LatticeVector {
            log_scale: self.log_scale,
            amps: self
                .amps
                .iter()
                .map(|(&(n, m), &a)| ((n, m + 1), a))
                .collect(),
        }
    }

    /// `(𝒰^{-1}φ)(n, m) = φ(n, m+1)`.
    pub fn dual_u_inv(&self) -> Self {
        LatticeVector {
            log_scale: self.log_scale,
            amps: self
                .amps
                .iter()
                .map(|(&(n, m), &a)| ((n, m - 1), a))
                .collect(),
        }
    }

    /// `(𝒱φ)(n, m) = e^{2πimα} φ(n-1, m)`.
    pub fn dual_v(&self, alpha: &QuadIrr) -> Self {
        let pa = alpha.phase64();
        LatticeVector {
            log_scale: self.log_scale,
            amps: self
                .amps
                .iter()
                .map(|(&(n, m), &a)| ((n + 1, m), a * turn::<T>(pa.wrapping_mul(m as u64))))
                .collect(),
        }
    }
}

/// `φ(n, m) = Θ_{ξ,n,m} w_{n+m}` on `n ± m ∈ {0, 2, …, 2q}`, zero elsewhere.
///
/// `w` is indexed by `k = 0..=2q`; only even `k` are read.
pub fn theta_lift<T: Real>(
    w: &[ExtValue<T>],
    alpha: &QuadIrr,
    xi: &QuadIrr,
    q: usize,
) -> Result<LatticeVector<T>> {
    if w.len() < 2 * q + 1 {
        return Err(Error::Precondition(format!(
            "lift needs w_0..w_{}, got {} entries",
            2 * q,
            w.len()
        )));
    }
    if w.iter().step_by(2).take(q + 1).any(|v| !v.is_finite()) {
        return Err(Error::Precondition(
            "w must be finite on the support".into(),
        ));
    }
    let ph = Phases::new(alpha, xi);
    let scale = w
        .iter()
        .step_by(2)
        .take(q + 1)
        .map(|v| v.log_mag)
        .fold(T::neg_infinity(), T::max);
    let mut amps = BTreeMap::new();
    let q = q as i64;
    for j in 0..=q {
        let wk = &w[2 * j as usize];
        let r = T::from_i8(wk.sign).unwrap() * (wk.log_mag - scale).exp();
        for i in 0..=q {
            // k = n + m = 2j, l = n - m = 2i
            let (n, m) = (j + i, j - i);
            amps.insert((n, m), turn::<T>(ph.theta(n, m)) * r);
        }
    }
    Ok(LatticeVector {
        log_scale: scale,
        amps,
    })
}

/// `(Hφ)(n,m) = φ(n-1,m) + φ(n+1,m) + λ e^{2πinα} φ(n,m-1) + λ e^{-2πinα} φ(n,m+1)`.
pub fn hofstadter_apply<T: Real>(
    alpha: &QuadIrr,
    lambda: T,
    phi: &LatticeVector<T>,
) -> LatticeVector<T> {
    let pa = alpha.phase64();
    let mut out: BTreeMap<(i64, i64), Complex<T>> = BTreeMap::new();
    let zero = Complex::new(T::zero(), T::zero());
    for (&(n, m), &a) in &phi.amps {
        let c = out.entry((n + 1, m)).or_insert(zero);
        *c = *c + a;
        let c = out.entry((n - 1, m)).or_insert(zero);
        *c = *c + a;
        // φ(n, m) enters (n, m+1) through V and (n, m-1) through V*
        let e = turn::<T>(pa.wrapping_mul(n as u64)) * lambda;
        let c = out.entry((n, m + 1)).or_insert(zero);
        *c = *c + a * e;
        let c = out.entry((n, m - 1)).or_insert(zero);
        *c = *c + a * e.conj();
    }
    LatticeVector {
        log_scale: phi.log_scale,
        amps: out,
    }
}

/// `(𝓗w)_k = 2cos(π((k+1)α - ξ)) w_{k+1} + 2cos(π(kα - ξ)) w_{k-1}` for `w`
/// supported on `k0..k0 + len`. The result starts at `k0 - 1`.
pub fn calh_apply<T: Real>(alpha: &QuadIrr, xi: &QuadIrr, k0: i64, w: &[T]) -> (i64, Vec<T>) {
    let ph = Phases::new(alpha, xi);
    let len = w.len() as i64;
    let at = |k: i64| {
        if (k0..k0 + len).contains(&k) {
            w[(k - k0) as usize]
        } else {
            T::zero()
        }
    };
    let two = T::lit(2.0);
    let out = (k0 - 1..k0 + len + 1)
        .map(|k| two * ph.a::<T>(k + 1) * at(k + 1) + two * ph.a::<T>(k) * at(k - 1))
        .collect();
    (k0 - 1, out)
}

/// `ε = ‖Hφ‖/‖φ‖` for the lifted zero-energy orbit of length `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub t: usize,
    pub m: usize,
    pub q_m: u64,
    pub epsilon: f64,
    pub log_norm_phi: f64,
    pub log_norm_h_phi: f64,
}

/// Residual of `φ_t`, the Θ-lift (with [`default_xi`]) of `w_{2j} = y^s_j y^c_j`,
/// `j = 0..=q`, `q = q_{μ+tn}`.
pub fn residual(alpha: &QuadIrr, mu: usize, n: usize, t: usize) -> Result<Residual> {
    residual_with_xi(alpha, mu, n, t, &default_xi(alpha))
}

pub fn residual_with_xi(
    alpha: &QuadIrr,
    mu: usize,
    n: usize,
    t: usize,
    xi: &QuadIrr,
) -> Result<Residual> {
    if t == 0 || n == 0 {
        return Err(Error::Precondition(
            "residual needs t >= 1 and n >= 1".into(),
        ));
    }
    let m = mu + t * n;
    let tab = convergents(&cf_expand(alpha, 256)?, m)?;
    let q = tab
        .q(m as isize)
        .to_u64()
        .filter(|&q| q <= 1 << 32)
        .ok_or_else(|| Error::Capacity(format!("q_{m} too large")))?;
    let (log_phi, log_h) = lifted_norms(alpha, xi, q as usize)?;
    Ok(Residual {
        t,
        m,
        q_m: q,
        epsilon: (log_h - log_phi).exp(),
        log_norm_phi: log_phi,
        log_norm_h_phi: log_h,
    })
}

/// `(log ‖φ‖, log ‖Hφ‖)` for the lift of length `q`, in `O(q)`.
///
/// In coordinates `k = n + m`, `l = n - m`, `φ` lives on even `k, l ∈ [0, 2q]`
/// and `Hφ` on odd `k, l ∈ [-1, 2q+1]`. For `1 <= l <= 2q-1` all four
/// neighbours are in the strip, so `Hφ = Θ(𝓗w)_k` there; each such `k`
/// occurs for `q` values of `l`. On the two edges `l = -1, 2q+1` only two
/// neighbours remain and `|Hφ| = |w_{k+1} + e^{-iπα} w_{k-1}|`.
pub(crate) fn lifted_norms(alpha: &QuadIrr, xi: &QuadIrr, q: usize) -> Result<(f64, f64)> {
    let y = orbit::<f64>(alpha, OrbitKind::Combined, &QuadIrr::zero(), q)?;
    let top = y.logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let v: Vec<f64> = (0..=q)
        .map(|j| y.signs[j] as f64 * (y.logs[j] - top).exp())
        .collect();
    let ph = Phases::new(alpha, xi);
    let cos_a = f64::cos_pi(alpha.to_f64());
    let qf = q as f64;
    let norm_phi = (qf + 1.0) * ordered_sum(q + 1, |j| v[j] * v[j]);
    let norm_h = ordered_sum(q + 2, |i| {
        let k = 2 * i as i64 - 1;
        let lo = if i >= 1 { v[i - 1] } else { 0.0 };
        let hi = if i <= q { v[i] } else { 0.0 };
        let h = 2.0 * ph.a::<f64>(k + 1) * hi + 2.0 * ph.a::<f64>(k) * lo;
        let edge = hi * hi + lo * lo + 2.0 * cos_a * hi * lo;
        qf * h * h + 2.0 * edge
    });
    Ok((top + norm_phi.ln() / 2.0, top + norm_h.ln() / 2.0))
}

/// `Σ_{i<n} f(i)` over fixed chunks, so the result does not depend on
/// scheduling.
fn ordered_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    const CHUNK: usize = 1 << 14;
    let parts: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum())
        .collect();
    parts.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::named::{golden, silver};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vector(rng: &mut ChaCha8Rng, sites: usize) -> LatticeVector<f64> {
        let mut v = LatticeVector::default();
        for _ in 0..sites {
            let key = (rng.gen_range(-6..=6), rng.gen_range(-6..=6));
            v.amps.insert(
                key,
                Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
        }
        v
    }

    fn sub(a: &LatticeVector<f64>, b: &LatticeVector<f64>) -> f64 {
        let keys: std::collections::BTreeSet<_> =
            a.amps.keys().chain(b.amps.keys()).copied().collect();
        keys.iter()
            .map(|&(n, m)| (a.get(n, m) - b.get(n, m)).norm())
            .fold(0.0, f64::max)
    }

    fn lifted_orbit(alpha: &QuadIrr, q: usize) -> Vec<ExtValue<f64>> {
        let y = orbit::<f64>(alpha, OrbitKind::Combined, &QuadIrr::zero(), q).unwrap();
        (0..=2 * q)
            .map(|k| {
                if k % 2 == 0 {
                    y.get(k / 2)
                } else {
                    ExtValue::from_value(0.0)
                }
            })
            .collect()
    }

    #[test]
    fn delta_image() {
        let h = hofstadter_apply(&golden(), 1.0, &LatticeVector::<f64>::delta(2, -1));
        assert_eq!(h.len(), 4);
        for a in h.amps.values() {
            assert!((a.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn commutes_with_dual_translations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = silver();
        for _ in 0..5 {
            let phi = random_vector(&mut rng, 30);
            let hu = hofstadter_apply(&a, 1.3, &phi.dual_u());
            let uh = hofstadter_apply(&a, 1.3, &phi).dual_u();
            assert!(sub(&hu, &uh) < 1e-12);
            let hv = hofstadter_apply(&a, 1.3, &phi.dual_v(&a));
            let vh = hofstadter_apply(&a, 1.3, &phi).dual_v(&a);
            assert!(sub(&hv, &vh) < 1e-12);
        }
    }

    #[test]
    fn lift_has_unimodular_phases_and_diamond_support() {
        let a = golden();
        let q = 8;
        let w = lifted_orbit(&a, q);
        let phi = theta_lift(&w, &a, &default_xi(&a), q).unwrap();
        assert_eq!(phi.len(), (q + 1) * (q + 1));
        for (&(n, m), c) in &phi.amps {
            assert!((n + m) % 2 == 0 && (0..=2 * q as i64).contains(&(n - m)));
            let k = (n + m) as usize;
            let expect = w[k].log_mag;
            assert!(((c.norm().ln() + phi.log_scale) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_is_eigenvector_of_diagonal_translation() {
        let a = golden();
        let xi = default_xi(&a);
        let q = 6;
        let phi = theta_lift(&lifted_orbit(&a, q), &a, &xi, q).unwrap();
        let img = phi.dual_v(&a).dual_u_inv();
        let ev = turn::<f64>(xi.phase64());
        let mut checked = 0;
        for &(n, m) in phi.amps.keys() {
            // interior: the preimage (n-1, m+1) is on the support too
            if phi.amps.contains_key(&(n - 1, m + 1)) {
                assert!((img.get(n, m) - ev * phi.get(n, m)).norm() < 1e-12 * phi.get(n, m).norm());
                checked += 1;
            }
        }
        assert_eq!(checked, q * (q + 1));
    }

    #[test]
    fn recursion_consistency() {
        // w_{2j+2}/w_{2j} = -a_{2j+1}/a_{2j+2}
        let a = golden();
        let ph = Phases::new(&a, &default_xi(&a));
        let y = orbit::<f64>(&a, OrbitKind::Combined, &QuadIrr::zero(), 300).unwrap();
        for j in 0..300 {
            let r = y.get(j + 1).value() / y.get(j).value();
            let k = 2 * j as i64;
            let e = -ph.a::<f64>(k + 1) / ph.a::<f64>(k + 2);
            assert!((r - e).abs() < 1e-11 * e.abs(), "j={j}: {r} vs {e}");
        }
    }

    #[test]
    fn calh_annihilates_interior() {
        let a = golden();
        let xi = default_xi(&a);
        let q = 40;
        let y = orbit::<f64>(&a, OrbitKind::Combined, &QuadIrr::zero(), q).unwrap();
        let w: Vec<f64> = (0..=2 * q)
            .map(|k| {
                if k % 2 == 0 {
                    y.get(k / 2).value()
                } else {
                    0.0
                }
            })
            .collect();
        let (k0, h) = calh_apply(&a, &xi, 0, &w);
        let scale = w.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        for (i, v) in h.iter().enumerate() {
            let k = k0 + i as i64;
            if (1..2 * q as i64).contains(&k) {
                assert!(v.abs() <= 1e-12 * scale, "k={k}: {v}");
            } else if k == -1 || k == 2 * q as i64 + 1 {
                assert!(v.abs() > 1e-3 * scale.min(1.0));
            }
        }
    }

    #[test]
    fn lattice_annihilates_interior() {
        let a = golden();
        let q = 10;
        let phi = theta_lift(&lifted_orbit(&a, q), &a, &default_xi(&a), q).unwrap();
        let h = hofstadter_apply(&a, 1.0, &phi);
        let big = phi.amps.values().map(|c| c.norm()).fold(0.0, f64::max);
        for (&(n, m), c) in &h.amps {
            let (k, l) = (n + m, n - m);
            if (1..2 * q as i64).contains(&k) && (1..2 * q as i64).contains(&l) {
                assert!(c.norm() <= 1e-12 * big, "({n},{m}): {c}");
            }
        }
    }

    #[test]
    fn structured_norms_match_lattice() {
        for (a, q) in [(golden(), 13usize), (silver(), 12), (golden(), 21)] {
            for xi in [default_xi(&a), QuadIrr::from_ratio(1, 3)] {
                let phi = theta_lift(&lifted_orbit(&a, q), &a, &xi, q).unwrap();
                let h = hofstadter_apply(&a, 1.0, &phi);
                let (lp, lh) = lifted_norms(&a, &xi, q).unwrap();
                assert!((lp - phi.log_norm()).abs() < 1e-12);
                assert!((lh - h.log_norm()).abs() < 1e-9, "{lh} vs {}", h.log_norm());
            }
        }
    }

    #[test]
    fn golden_residuals_shrink() {
        let mut prev = f64::INFINITY;
        for t in 1..=3 {
            let r = residual(&golden(), 0, 6, t).unwrap();
            assert!(r.epsilon > 0.0 && r.epsilon < prev, "{r:?}");
            prev = r.epsilon;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn hofstadter_is_symmetric(seed in any::<u64>(), lambda in 0.1f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (phi, chi) = (random_vector(&mut rng, 20), random_vector(&mut rng, 20));
            let a = golden();
            let l = hofstadter_apply(&a, lambda, &phi).inner(&chi);
            let r = phi.inner(&hofstadter_apply(&a, lambda, &chi));
            prop_assert!((l - r).norm() < 1e-12);
        }

        #[test]
        fn calh_is_symmetric(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = silver();
            let xi = QuadIrr::from_ratio(rng.gen_range(0..7), 7);
            let u: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // pad so the images stay inside the compared range
            let pad = |x: &[f64]| [vec![0.0; 2], x.to_vec(), vec![0.0; 2]].concat();
            let (pu, pv) = (pad(&u), pad(&v));
            let (_, hu) = calh_apply(&a, &xi, -2, &pu);
            let (_, hv) = calh_apply(&a, &xi, -2, &pv);
            let l: f64 = hu[1..hu.len() - 1].iter().zip(&pv).map(|(x, y)| x * y).sum();
            let r: f64 = pu.iter().zip(&hv[1..hv.len() - 1]).map(|(x, y)| x * y).sum();
            prop_assert!((l - r).abs() < 1e-12);
        }

        #[test]
        fn residual_is_scale_invariant(shift in -50.0f64..50.0) {
            let a = golden();
            let q = 8;
            let w: Vec<ExtValue<f64>> = lifted_orbit(&a, q)
                .into_iter()
                .map(|v| if v.is_finite() { ExtValue::finite(v.sign, v.log_mag + shift) } else { v })
                .collect();
            let phi = theta_lift(&w, &a, &default_xi(&a), q).unwrap();
            let h = hofstadter_apply(&a, 1.0, &phi);
            let (lp, lh) = lifted_norms(&a, &default_xi(&a), q).unwrap();
            prop_assert!(((h.log_norm() - phi.log_norm()) - (lh - lp)).abs() < 1e-10);
        }
    }
}
