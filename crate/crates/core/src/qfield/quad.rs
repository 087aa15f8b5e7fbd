use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest radicand accepted before squarefree extraction (trial division).
const MAX_RADICAND: u64 = 1_000_000_000_000;

/// An element `(a + b√d)/c` of a real quadratic field, in canonical form:
/// `d` squarefree, `gcd(a, b, c) = 1`, `c > 0`. Rationals have `b = 0` and
/// carry `d = 1`, so they mix with any field.
#[derive(Clone)]
pub struct QuadIrr {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: u64,
    approx: f64,
}

impl QuadIrr {
    /// Canonicalizes the raw quadruple `(a, b, d, c)`.
    pub fn canonicalize(a: BigInt, b: BigInt, d: BigInt, c: BigInt) -> Result<Self> {
        if c.is_zero() {
            return Err(Error::Domain("denominator c = 0".into()));
        }
        if d.sign() != Sign::Plus {
            return Err(Error::Domain(format!("radicand d = {d} is not positive")));
        }
        let d = d
            .to_u64()
            .filter(|&d| d <= MAX_RADICAND)
            .ok_or_else(|| Error::Capacity(format!("radicand {d} too large")))?;
        let (f, core) = squarefree_split(d);
        Ok(Self::from_parts(a, b * BigInt::from(f), c, core))
    }

    pub fn new(a: i64, b: i64, d: u64, c: i64) -> Result<Self> {
        Self::canonicalize(a.into(), b.into(), d.into(), c.into())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_parts(n.into(), BigInt::zero(), BigInt::one(), 1)
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Self::from_parts(n, BigInt::zero(), BigInt::one(), 1)
    }

    /// The rational `n / m`.
    ///
    /// # Panics
    /// If `m == 0`.
    pub fn from_ratio(n: i64, m: i64) -> Self {
        assert!(m != 0, "zero denominator");
        Self::from_parts(n.into(), BigInt::zero(), m.into(), 1)
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// `d` must already be squarefree (or 1).
    pub(crate) fn from_parts(mut a: BigInt, mut b: BigInt, mut c: BigInt, mut d: u64) -> Self {
        debug_assert!(!c.is_zero());
        if b.is_zero() || d == 1 {
            if d == 1 {
                a += &b;
            }
            b = BigInt::zero();
            d = 1;
        }
        let g = a.gcd(&b).gcd(&c);
        if !g.is_one() {
            a /= &g;
            b /= &g;
            c /= &g;
        }
        if c.is_negative() {
            a = -a;
            b = -b;
            c = -c;
        }
        let approx = approx_of(&a, &b, &c, d);
        QuadIrr { a, b, c, d, approx }
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn c(&self) -> &BigInt {
        &self.c
    }

    /// Squarefree radicand; 1 for rationals.
    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.b.is_zero() && self.c.is_one()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Nearest `f64`, accurate to a few ulps.
    pub fn to_f64(&self) -> f64 {
        self.approx
    }

    /// Exact sign: -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        sign_of_surd(&self.a, &self.b, self.d)
    }

    /// Exact `⌊self⌋`.
    pub fn floor(&self) -> BigInt {
        let x = self.approx;
        if x.is_finite() && x.abs() < 4.0e15 {
            let f = x.floor();
            let tol = 1e-9 + x.abs() * 1e-13;
            if x - f > tol && f + 1.0 - x > tol {
                return BigInt::from(f as i64);
            }
        }
        floor_exact(&self.a, &self.b, &self.c, self.d)
    }

    pub fn ceil(&self) -> BigInt {
        -(-self).floor()
    }

    /// `self - ⌊self⌋`, in `[0, 1)`.
    pub fn fract(&self) -> QuadIrr {
        let f = self.floor();
        self - &QuadIrr::from_bigint(f)
    }

    /// `⌊self · 2^bits⌋`, exact.
    pub fn to_fixed(&self, bits: u32) -> BigInt {
        floor_exact(&(&self.a << bits), &(&self.b << bits), &self.c, self.d)
    }

    /// The fractional part as a 64-bit fixed-point phase in `[0, 2^64)`.
    pub fn phase64(&self) -> u64 {
        let f = self.fract().to_fixed(64);
        f.to_u64().unwrap_or(u64::MAX)
    }

    /// # Panics
    /// If `self` is zero.
    pub fn recip(&self) -> QuadIrr {
        assert!(!self.is_zero(), "reciprocal of zero");
        // c / (a + b√d) = c (a - b√d) / (a² - b² d)
        let norm = &self.a * &self.a - &self.b * &self.b * BigInt::from(self.d);
        Self::from_parts(&self.c * &self.a, -(&self.c * &self.b), norm, self.d)
    }

    pub fn mul_int(&self, k: &BigInt) -> QuadIrr {
        Self::from_parts(&self.a * k, &self.b * k, self.c.clone(), self.d)
    }

    /// # Panics
    /// If `k` is zero.
    pub fn div_int(&self, k: &BigInt) -> QuadIrr {
        assert!(!k.is_zero(), "division by zero");
        Self::from_parts(self.a.clone(), self.b.clone(), &self.c * k, self.d)
    }

    pub fn abs(&self) -> QuadIrr {
        if self.signum() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    /// Algebraic conjugate `(a - b√d)/c`.
    pub fn conj(&self) -> QuadIrr {
        Self::from_parts(self.a.clone(), -&self.b, self.c.clone(), self.d)
    }

    fn field(&self, other: &QuadIrr) -> u64 {
        match (self.d, other.d) {
            (1, e) => e,
            (d, 1) => d,
            (d, e) if d == e => d,
            (d, e) => panic!("mixed quadratic fields Q(√{d}) and Q(√{e})"),
        }
    }

    /// True when both values live in a common field.
    pub fn same_field(&self, other: &QuadIrr) -> bool {
        self.d == 1 || other.d == 1 || self.d == other.d
    }

    fn exact_cmp(&self, other: &QuadIrr) -> Ordering {
        (self - other).signum().cmp(&0)
    }
}

/// Returns `(f, core)` with `d = f² · core`, `core` squarefree.
fn squarefree_split(d: u64) -> (u64, u64) {
    let mut rest = d;
    let mut f = 1u64;
    let mut core = 1u64;
    let mut p = 2u64;
    while p * p <= rest {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        f *= p.pow(e / 2);
        if e % 2 == 1 {
            core *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (f, core * rest)
}

fn sign_of_surd(a: &BigInt, b: &BigInt, d: u64) -> i32 {
    let sa = sgn(a);
    let sb = sgn(b);
    if sb == 0 || d == 1 {
        return if d == 1 { sgn(&(a + b)) } else { sa };
    }
    if sa == 0 || sa == sb {
        return sb;
    }
    // opposite signs: compare a² with b² d
    let lhs = a * a;
    let rhs = b * b * BigInt::from(d);
    match lhs.cmp(&rhs) {
        Ordering::Greater => sa,
        Ordering::Less => sb,
        Ordering::Equal => 0,
    }
}

fn sgn(x: &BigInt) -> i32 {
    match x.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

/// `⌊(a + b√d)/c⌋` for `c > 0` and squarefree `d`.
fn floor_exact(a: &BigInt, b: &BigInt, c: &BigInt, d: u64) -> BigInt {
    let s = if b.is_zero() || d == 1 {
        if d == 1 { b.clone() } else { BigInt::zero() }
    } else {
        let r = (b * b * BigInt::from(d)).sqrt();
        if b.is_positive() { r } else { -r - 1 }
    };
    (a + s).div_floor(c)
}

fn approx_of(a: &BigInt, b: &BigInt, c: &BigInt, d: u64) -> f64 {
    let cf = c.to_f64().unwrap_or(f64::INFINITY);
    let v = if b.is_zero() {
        a.to_f64().unwrap_or(f64::NAN) / cf
    } else {
        let af = a.to_f64().unwrap_or(f64::NAN);
        let bf = b.to_f64().unwrap_or(f64::NAN);
        let sd = (d as f64).sqrt();
        if a.is_zero() || a.sign() == b.sign() {
            (af + bf * sd) / cf
        } else {
            // rationalize to avoid cancellation
            let norm = (a * a - b * b * BigInt::from(d))
                .to_f64()
                .unwrap_or(f64::NAN);
            norm / (cf * (af - bf * sd))
        }
    };
    if v.is_finite() && (v != 0.0 || (a.is_zero() && b.is_zero())) {
        v
    } else {
        approx_fixed(a, b, c, d)
    }
}

fn approx_fixed(a: &BigInt, b: &BigInt, c: &BigInt, d: u64) -> f64 {
    let k = 80 + c.bits() + a.bits() + b.bits() + 64;
    let n = floor_exact(&(a << k), &(b << k), c, d);
    let shift = n.bits().saturating_sub(64);
    let top = (n >> shift).to_f64().unwrap_or(f64::NAN);
    top * 2f64.powi(shift as i32 - k as i32)
}

impl PartialEq for QuadIrr {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.c == other.c && self.a == other.a && self.b == other.b
    }
}

impl Eq for QuadIrr {}

impl Hash for QuadIrr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.a.hash(state);
        self.b.hash(state);
        self.c.hash(state);
        self.d.hash(state);
    }
}

impl Ord for QuadIrr {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        let (x, y) = (self.approx, other.approx);
        if (x - y).abs() > 1e-12 * x.abs().max(y.abs()) {
            return x.partial_cmp(&y).unwrap_or_else(|| self.exact_cmp(other));
        }
        self.exact_cmp(other)
    }
}

impl PartialOrd for QuadIrr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for QuadIrr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.b.is_negative() { '-' } else { '+' };
        write!(
            f,
            "({}{}{}*sqrt({}))/{}",
            self.a,
            op,
            self.b.abs(),
            self.d,
            self.c
        )
    }
}

impl fmt::Debug for QuadIrr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} ~ {}", self.approx)
    }
}

impl FromStr for QuadIrr {
    type Err = Error;

    /// Grammar: `(a+b*sqrt(d))/c`, `a` and `c` optionally signed, `+` or `-`
    /// between the terms, no whitespace.
    fn from_str(s: &str) -> Result<Self> {
        let mut p = Cursor {
            s: s.as_bytes(),
            i: 0,
        };
        p.expect(b'(')?;
        let a = p.signed()?;
        let neg = match p.next() {
            Some(b'+') => false,
            Some(b'-') => true,
            _ => return Err(p.fail("expected '+' or '-'")),
        };
        let b = p.digits()?;
        p.literal(b"*sqrt(")?;
        let d = p.digits()?;
        p.literal(b"))/")?;
        let c = p.signed()?;
        if p.i != p.s.len() {
            return Err(p.fail("trailing input"));
        }
        let b = if neg { -b } else { b };
        QuadIrr::canonicalize(a, b, d, c)
    }
}

struct Cursor<'a> {
    s: &'a [u8],
    i: usize,
}

impl Cursor<'_> {
    fn fail(&self, msg: &str) -> Error {
        Error::Parse(format!(
            "{msg} at offset {} in {:?}",
            self.i,
            String::from_utf8_lossy(self.s)
        ))
    }

    fn next(&mut self) -> Option<u8> {
        let c = self.s.get(self.i).copied();
        self.i += 1;
        c
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.s.get(self.i) == Some(&c) {
            self.i += 1;
            Ok(())
        } else {
            Err(self.fail(&format!("expected '{}'", c as char)))
        }
    }

    fn literal(&mut self, lit: &[u8]) -> Result<()> {
        if self.s[self.i.min(self.s.len())..].starts_with(lit) {
            self.i += lit.len();
            Ok(())
        } else {
            Err(self.fail(&format!("expected {:?}", String::from_utf8_lossy(lit))))
        }
    }

    fn digits(&mut self) -> Result<BigInt> {
        let start = self.i;
        while self.s.get(self.i).is_some_and(u8::is_ascii_digit) {
            self.i += 1;
        }
        if start == self.i {
            return Err(self.fail("expected digits"));
        }
        let txt = std::str::from_utf8(&self.s[start..self.i]).expect("ascii digits");
        Ok(txt.parse().expect("digit string"))
    }

    fn signed(&mut self) -> Result<BigInt> {
        match self.s.get(self.i) {
            Some(b'-') => {
                self.i += 1;
                Ok(-self.digits()?)
            }
            Some(b'+') => {
                self.i += 1;
                self.digits()
            }
            _ => self.digits(),
        }
    }
}

impl Neg for &QuadIrr {
    type Output = QuadIrr;
    fn neg(self) -> QuadIrr {
        QuadIrr {
            a: -&self.a,
            b: -&self.b,
            c: self.c.clone(),
            d: self.d,
            approx: -self.approx,
        }
    }
}

impl Neg for QuadIrr {
    type Output = QuadIrr;
    fn neg(self) -> QuadIrr {
        -&self
    }
}

impl Add for &QuadIrr {
    type Output = QuadIrr;
    fn add(self, o: &QuadIrr) -> QuadIrr {
        let d = self.field(o);
        if self.c == o.c {
            return QuadIrr::from_parts(&self.a + &o.a, &self.b + &o.b, self.c.clone(), d);
        }
        QuadIrr::from_parts(
            &self.a * &o.c + &o.a * &self.c,
            &self.b * &o.c + &o.b * &self.c,
            &self.c * &o.c,
            d,
        )
    }
}

impl Sub for &QuadIrr {
    type Output = QuadIrr;
    fn sub(self, o: &QuadIrr) -> QuadIrr {
        let d = self.field(o);
        if self.c == o.c {
            return QuadIrr::from_parts(&self.a - &o.a, &self.b - &o.b, self.c.clone(), d);
        }
        QuadIrr::from_parts(
            &self.a * &o.c - &o.a * &self.c,
            &self.b * &o.c - &o.b * &self.c,
            &self.c * &o.c,
            d,
        )
    }
}

impl Mul for &QuadIrr {
    type Output = QuadIrr;
    fn mul(self, o: &QuadIrr) -> QuadIrr {
        let d = self.field(o);
        let dd = BigInt::from(d);
        QuadIrr::from_parts(
            &self.a * &o.a + &self.b * &o.b * dd,
            &self.a * &o.b + &self.b * &o.a,
            &self.c * &o.c,
            d,
        )
    }
}

impl Div for &QuadIrr {
    type Output = QuadIrr;
    fn div(self, o: &QuadIrr) -> QuadIrr {
        self * &o.recip()
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<QuadIrr> for QuadIrr {
            type Output = QuadIrr;
            fn $m(self, o: QuadIrr) -> QuadIrr {
                (&self).$m(&o)
            }
        }
        impl $tr<&QuadIrr> for QuadIrr {
            type Output = QuadIrr;
            fn $m(self, o: &QuadIrr) -> QuadIrr {
                (&self).$m(o)
            }
        }
        impl $tr<QuadIrr> for &QuadIrr {
            type Output = QuadIrr;
            fn $m(self, o: QuadIrr) -> QuadIrr {
                self.$m(&o)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> QuadIrr {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_examples() {
        let x = QuadIrr::new(-2, 2, 20, 4).unwrap();
        assert_eq!(
            (x.a().clone(), x.b().clone(), x.d(), x.c().clone()),
            ((-1).into(), 2.into(), 5, 2.into())
        );
        let z = QuadIrr::new(0, 0, 2, 5).unwrap();
        assert!(z.is_zero() && z.is_rational());
        assert_eq!(z, QuadIrr::zero());
        let g = QuadIrr::new(-1, 1, 5, 2).unwrap();
        assert_eq!(g.to_string(), "(-1+1*sqrt(5))/2");
    }

    #[test]
    fn perfect_square_radicand_is_rational() {
        let x = QuadIrr::new(1, 3, 4, 2).unwrap();
        assert_eq!(x, QuadIrr::from_ratio(7, 2));
    }

    #[test]
    fn negative_denominator_normalized() {
        let x = QuadIrr::new(1, -1, 5, -2).unwrap();
        assert_eq!(x, q("(-1+1*sqrt(5))/2"));
    }

    #[test]
    fn parse_grammar() {
        assert!((q("(-1+1*sqrt(5))/2").to_f64() - (5f64.sqrt() - 1.0) / 2.0).abs() < 3e-16);
        assert_eq!(q("(3-1*sqrt(5))/2"), QuadIrr::new(3, -1, 5, 2).unwrap());
        for bad in [
            "(0+1*sqrt(2))/1 - 1",
            "0+1*sqrt(2)",
            "(1+1*sqrt(2))/0",
            "(1+1*sqrt(0))/1",
            "(1 + 1*sqrt(2))/1",
            "(1+-1*sqrt(2))/1",
            "",
        ] {
            assert!(bad.parse::<QuadIrr>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_roundtrip() {
        for s in [
            "(-1+1*sqrt(5))/2",
            "(3-1*sqrt(5))/2",
            "(-1+1*sqrt(2))/1",
            "(5+0*sqrt(1))/3",
        ] {
            assert_eq!(q(s).to_string(), s);
            assert_eq!(q(&q(s).to_string()), q(s));
        }
    }

    #[test]
    fn golden_relations() {
        let a = q("(-1+1*sqrt(5))/2");
        assert_eq!(&a * &a, QuadIrr::one() - &a);
        assert_eq!(a.recip(), &a + &QuadIrr::one());
        assert_eq!(a.floor(), BigInt::zero());
        assert_eq!(a.recip().floor(), BigInt::one());
    }

    #[test]
    fn floor_near_integers_exact() {
        // (1 + 10^9 √2)/1 minus a tight rational approximation
        let x = q("(0+1000000000*sqrt(2))/1") - QuadIrr::from_int(1414213562);
        let y = x.fract();
        assert_eq!(x.floor(), BigInt::zero());
        assert!(y.signum() > 0 && y < QuadIrr::one());
        let tiny = &x - &QuadIrr::from_ratio(373095048, 1_000_000_000);
        assert_eq!(tiny.signum(), 1);
        assert!(tiny.to_f64() > 0.0 && tiny.to_f64() < 1e-9);
    }

    #[test]
    fn approx_of_small_conjugate_is_accurate() {
        // (√2 - 1)^30 is tiny; the rationalized path must keep full relative accuracy
        let s = q("(-1+1*sqrt(2))/1");
        let mut p = QuadIrr::one();
        for _ in 0..30 {
            p = &p * &s;
        }
        let want = (2f64.sqrt() - 1.0).powi(30);
        assert!(
            (p.to_f64() / want - 1.0).abs() < 1e-12,
            "{} vs {}",
            p.to_f64(),
            want
        );
    }

    #[test]
    fn to_fixed_matches_float() {
        let a = q("(-1+1*sqrt(5))/2");
        let f = a.to_fixed(64).to_f64().unwrap() / 2f64.powi(64);
        assert!((f - a.to_f64()).abs() < 3e-16);
        assert_eq!(a.phase64() as f64 / 2f64.powi(64), f);
    }

    #[test]
    fn ordering_exact_fallback() {
        let a = q("(-1+1*sqrt(5))/2");
        let b = &a + &QuadIrr::from_ratio(1, 1_000_000_000_000_000_000);
        assert!(a < b);
        assert!(b > a);
        assert_eq!(a.cmp(&a.clone()), Ordering::Equal);
    }

    #[test]
    #[should_panic(expected = "mixed quadratic fields")]
    fn mixed_fields_panic() {
        let _ = q("(0+1*sqrt(2))/1") + q("(0+1*sqrt(3))/1");
    }
}
