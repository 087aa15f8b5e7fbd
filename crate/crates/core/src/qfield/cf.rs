use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::QuadIrr;
use crate::error::{Error, Result};

/// `α - ⌊α⌋`.
pub fn reduce_mod1(alpha: &QuadIrr) -> QuadIrr {
    alpha.fract()
}

/// One step of the Gauss map: `c = ⌊1/α⌋`, `α' = 1/α - c`.
pub fn gauss_step(alpha: &QuadIrr) -> Result<(u64, QuadIrr)> {
    if alpha.is_rational() {
        return Err(Error::Domain(format!("{alpha} is rational")));
    }
    if alpha.signum() <= 0 || *alpha >= QuadIrr::one() {
        return Err(Error::Domain(format!("{alpha} not in (0, 1)")));
    }
    let inv = alpha.recip();
    let c = inv.floor();
    let next = &inv - &QuadIrr::from_bigint(c.clone());
    let c = c
        .to_u64()
        .ok_or_else(|| Error::Capacity(format!("partial quotient {c} exceeds u64")))?;
    Ok((c, next))
}

/// Eventually periodic continued fraction `α = [0; c_0, c_1, ...]` of a
/// quadratic irrational reduced mod 1.
#[derive(Clone, Debug)]
pub struct CfExpansion {
    alpha: QuadIrr,
    /// α_0 .. α_{k+l-1}
    states: Vec<QuadIrr>,
    coeffs: Vec<u64>,
    preperiod: usize,
    period: usize,
}

impl CfExpansion {
    /// The expanded number α_0 (already reduced mod 1).
    pub fn alpha(&self) -> &QuadIrr {
        &self.alpha
    }

    /// `c_k` for any `k`, by periodic extension.
    pub fn coeff(&self, k: usize) -> u64 {
        self.coeffs[self.fold(k)]
    }

    /// `α_k` for any `k`.
    pub fn state(&self, k: usize) -> &QuadIrr {
        &self.states[self.fold(k)]
    }

    fn fold(&self, k: usize) -> usize {
        if k < self.preperiod {
            k
        } else {
            self.preperiod + (k - self.preperiod) % self.period
        }
    }

    /// The first `n` coefficients.
    pub fn coeffs(&self, n: usize) -> Vec<u64> {
        (0..n).map(|k| self.coeff(k)).collect()
    }

    /// `k(α)`.
    pub fn preperiod(&self) -> usize {
        self.preperiod
    }

    /// `l`.
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn is_purely_periodic(&self) -> bool {
        self.preperiod == 0
    }

    /// `σ = α_{k(α)}`, the first purely periodic tail.
    pub fn sigma(&self) -> &QuadIrr {
        &self.states[self.preperiod]
    }

    /// Expansion of σ.
    pub fn periodic_part(&self) -> CfExpansion {
        CfExpansion {
            alpha: self.sigma().clone(),
            states: self.states[self.preperiod..].to_vec(),
            coeffs: self.coeffs[self.preperiod..].to_vec(),
            preperiod: 0,
            period: self.period,
        }
    }
}

/// Iterates the Gauss map until a canonical state repeats.
pub fn cf_expand(alpha: &QuadIrr, max_depth: usize) -> Result<CfExpansion> {
    let a0 = reduce_mod1(alpha);
    if a0.is_rational() {
        return Err(Error::Domain(format!("{alpha} is rational")));
    }
    let mut seen: HashMap<QuadIrr, usize> = HashMap::new();
    let mut states = Vec::new();
    let mut coeffs = Vec::new();
    let mut cur = a0.clone();
    loop {
        if let Some(&k) = seen.get(&cur) {
            let len = states.len();
            return Ok(CfExpansion {
                alpha: a0,
                states,
                coeffs,
                preperiod: k,
                period: len - k,
            });
        }
        if states.len() >= max_depth {
            return Err(Error::DepthExceeded(max_depth));
        }
        seen.insert(cur.clone(), states.len());
        let (c, next) = gauss_step(&cur)?;
        states.push(cur);
        coeffs.push(c);
        cur = next;
    }
}

/// 2x2 integer matrix `[[m00, m01], [m10, m11]]`.
pub type Mat2 = [[BigInt; 2]; 2];

/// Convergents `p_k/q_k`, `k = 0..=m`, with `ᾱ_k` up to `k = m + 1`.
#[derive(Clone, Debug)]
pub struct ConvergentTable {
    alpha: QuadIrr,
    coeffs: Vec<u64>,
    alphas: Vec<QuadIrr>,
    /// index `k + 1` holds `p_k`, starting at `p_{-1} = 1`
    p: Vec<BigInt>,
    q: Vec<BigInt>,
    alpha_bar: Vec<QuadIrr>,
}

impl ConvergentTable {
    pub fn alpha(&self) -> &QuadIrr {
        &self.alpha
    }

    /// Largest row index `m`.
    pub fn depth(&self) -> usize {
        self.p.len() - 2
    }

    /// `p_k` for `-1 <= k <= m`.
    pub fn p(&self, k: isize) -> &BigInt {
        &self.p[(k + 1) as usize]
    }

    pub fn q(&self, k: isize) -> &BigInt {
        &self.q[(k + 1) as usize]
    }

    pub fn c(&self, k: usize) -> u64 {
        self.coeffs[k]
    }

    /// `α_k`, `0 <= k <= m + 1`.
    pub fn alpha_k(&self, k: usize) -> &QuadIrr {
        &self.alphas[k]
    }

    /// `ᾱ_k = α_0 ⋯ α_{k-1}`, `0 <= k <= m + 1`.
    pub fn alpha_bar(&self, k: usize) -> &QuadIrr {
        &self.alpha_bar[k]
    }

    /// `C_k = [[p_{k-1}, q_{k-1}], [p_k, q_k]]`, `0 <= k <= m`.
    pub fn matrix(&self, k: usize) -> Mat2 {
        let k = k as isize;
        [
            [self.p(k - 1).clone(), self.q(k - 1).clone()],
            [self.p(k).clone(), self.q(k).clone()],
        ]
    }

    pub fn q_row(&self) -> Vec<BigInt> {
        self.q[1..].to_vec()
    }
}

/// Builds rows `0..=m`, checking `(-1)^k (q_k α - p_k) = ᾱ_{k+1}` exactly.
pub fn convergents(exp: &CfExpansion, m: usize) -> Result<ConvergentTable> {
    let alpha = exp.alpha().clone();
    let coeffs = exp.coeffs(m + 1);
    let alphas: Vec<QuadIrr> = (0..=m + 1).map(|k| exp.state(k).clone()).collect();
    let mut p = vec![BigInt::one(), BigInt::zero()];
    let mut q = vec![BigInt::zero(), BigInt::one()];
    for k in 0..m {
        let c = BigInt::from(coeffs[k]);
        p.push(&c * &p[k + 1] + &p[k]);
        q.push(&c * &q[k + 1] + &q[k]);
    }
    let mut alpha_bar = vec![QuadIrr::one()];
    for k in 0..=m {
        alpha_bar.push(&alpha_bar[k] * &alphas[k]);
    }
    let tab = ConvergentTable {
        alpha,
        coeffs,
        alphas,
        p,
        q,
        alpha_bar,
    };
    for k in 0..=m {
        let ki = k as isize;
        let lhs = &tab.alpha.mul_int(tab.q(ki)) - &QuadIrr::from_bigint(tab.p(ki).clone());
        let lhs = if k % 2 == 1 { -lhs } else { lhs };
        if lhs != tab.alpha_bar[k + 1] {
            return Err(Error::Internal(format!(
                "convergent identity fails at k = {k}: {lhs} != {}",
                tab.alpha_bar[k + 1]
            )));
        }
    }
    Ok(tab)
}

type Mat4 = [[u8; 2]; 2];

fn step_mod4(m: Mat4, c: u64) -> Mat4 {
    // [[0,1],[1,c]] · m
    let c = (c % 4) as u8;
    [
        m[1],
        [(m[0][0] + c * m[1][0]) % 4, (m[0][1] + c * m[1][1]) % 4],
    ]
}

/// Smallest even multiple `ℓ` of the period with `C_ℓ ≡ 1 (mod 4)`.
pub fn ell_alpha(exp: &CfExpansion) -> Result<usize> {
    if !exp.is_purely_periodic() {
        return Err(Error::Precondition(format!(
            "expansion has preperiod {}; apply to its periodic part",
            exp.preperiod()
        )));
    }
    let l = exp.period();
    let mut m: Mat4 = [[1, 0], [0, 1]];
    // the group of invertible 2x2 matrices mod 4 has 96 elements
    for k in 0..l * 2 * 96 + 2 {
        m = step_mod4(m, exp.coeff(k));
        let n = k + 1;
        if n % l == 0 && n % 2 == 0 && m == [[1, 0], [0, 1]] {
            return Ok(n);
        }
    }
    Err(Error::Internal("no mod-4 period found".into()))
}

/// Output of [`j_n_construct`].
#[derive(Clone, Debug)]
pub struct JnConstruction {
    pub n: usize,
    pub u: i64,
    pub v: i64,
    /// `det C_n`
    pub d: i64,
    pub d_prime: i64,
    pub j_n: BigInt,
    /// `(d/4)(u α_n - v)`
    pub a: QuadIrr,
    /// `j_n α + (d/4) α` reduced mod 1
    pub lhs_mod1: QuadIrr,
    /// `(1/4) ᾱ_n (u α_n - v)` with the sign `(-1)^n`, reduced mod 1
    pub rhs_mod1: QuadIrr,
}

/// Builds `j_n` and the invariant-zero offset `a` from the mod-4 remainders of
/// `p_{n-1}, p_n, q_{n-1}, q_n`, and verifies the quarter-period congruence
/// exactly.
pub fn j_n_construct(tab: &ConvergentTable, n: usize) -> Result<JnConstruction> {
    if n == 0 || n > tab.depth() {
        return Err(Error::Precondition(format!(
            "need 1 <= n <= depth = {}, got {n}",
            tab.depth()
        )));
    }
    let ni = n as isize;
    let four = BigInt::from(4);
    let r4 = |x: &BigInt| x.mod_floor(&four).to_i64().expect("small");
    let (pn1, pn, qn1, qn) = (
        r4(tab.p(ni - 1)),
        r4(tab.p(ni)),
        r4(tab.q(ni - 1)),
        r4(tab.q(ni)),
    );
    let u = pn1;
    let v = -pn;
    let d = if n % 2 == 0 { 1 } else { -1 };
    let d_prime = pn1 * qn - pn * qn1;
    let num = BigInt::from(u) * (tab.q(ni) - qn)
        + BigInt::from(v) * (tab.q(ni - 1) - qn1)
        + BigInt::from(d_prime - d);
    let (j_n, rem) = num.div_rem(&four);
    if !rem.is_zero() {
        return Err(Error::Internal(format!(
            "j_{n} numerator {num} not divisible by 4"
        )));
    }
    let alpha = tab.alpha();
    let an = tab.alpha_k(n);
    let uan_v = &an.mul_int(&u.into()) - &QuadIrr::from_int(v);
    let a = uan_v.mul_int(&d.into()).div_int(&four);
    let lhs = &alpha.mul_int(&j_n) + &alpha.mul_int(&d.into()).div_int(&four);
    let eps = if n % 2 == 0 { 1 } else { -1 };
    let rhs = (tab.alpha_bar(n) * &uan_v)
        .mul_int(&eps.into())
        .div_int(&four);
    let lhs_mod1 = lhs.fract();
    let rhs_mod1 = rhs.fract();
    if lhs_mod1 != rhs_mod1 {
        return Err(Error::Internal(format!(
            "quarter congruence fails at n = {n}: {lhs_mod1} vs {rhs_mod1}"
        )));
    }
    Ok(JnConstruction {
        n,
        u,
        v,
        d,
        d_prime,
        j_n,
        a,
        lhs_mod1,
        rhs_mod1,
    })
}
