//! Exact arithmetic in real quadratic fields and continued fractions.

mod cf;
mod quad;

pub use cf::{
    CfExpansion, ConvergentTable, JnConstruction, Mat2, cf_expand, convergents, ell_alpha,
    gauss_step, j_n_construct, reduce_mod1,
};
pub use quad::QuadIrr;

/// Well-known test irrationals in `(0, 1)`.
pub mod named {
    use super::QuadIrr;

    /// `(√5 - 1)/2`
    pub fn golden() -> QuadIrr {
        QuadIrr::new(-1, 1, 5, 2).expect("valid")
    }

    /// `(3 - √5)/2`
    pub fn golden_sq() -> QuadIrr {
        QuadIrr::new(3, -1, 5, 2).expect("valid")
    }

    /// `√2 - 1`
    pub fn silver() -> QuadIrr {
        QuadIrr::new(-1, 1, 2, 1).expect("valid")
    }

    /// `√3 - 1`
    pub fn sqrt3m1() -> QuadIrr {
        QuadIrr::new(-1, 1, 3, 1).expect("valid")
    }

    /// `√7 - 2`
    pub fn sqrt7m2() -> QuadIrr {
        QuadIrr::new(-2, 1, 7, 1).expect("valid")
    }
}


#[cfg(test)]
mod props {
    use super::tests_support::*;
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn convergent_identity_exact(x in quad_irr()) {
            let e = cf_expand(&x, 500).unwrap();
            let t = convergents(&e, 25).unwrap();
            for k in 0..=25isize {
                let lhs = &t.alpha().mul_int(t.q(k)) - &QuadIrr::from_bigint(t.p(k).clone());
                let lhs = if k % 2 == 1 { -lhs } else { lhs };
                prop_assert_eq!(&lhs, t.alpha_bar(k as usize + 1));
                let [[a, b], [c, d]] = t.matrix(k as usize);
                prop_assert_eq!(a * d - b * c, BigInt::from(if k % 2 == 0 { 1 } else { -1 }));
            }
        }

        #[test]
        fn gauss_orbit_returns(x in quad_irr()) {
            let e = cf_expand(&x, 500).unwrap();
            let mut s = e.sigma().clone();
            for _ in 0..e.period() {
                s = gauss_step(&s).unwrap().1;
            }
            prop_assert_eq!(&s, e.sigma());
            // minimality of the preperiod
            if e.preperiod() > 0 {
                let prev = e.state(e.preperiod() - 1);
                let wrap = e.state(e.preperiod() + e.period() - 1);
                prop_assert_ne!(prev, wrap);
            }
        }

        #[test]
        fn ell_minimal_even(x in quad_irr()) {
            let e = cf_expand(&x, 500).unwrap().periodic_part();
            let ell = ell_alpha(&e).unwrap();
            prop_assert!(ell % 2 == 0 && ell % e.period() == 0);
            let t = convergents(&e, ell).unwrap();
            let four = BigInt::from(4);
            let is_id = |k: usize| {
                let m = t.matrix(k);
                let r = |x: &BigInt| num_integer::Integer::mod_floor(x, &four);
                r(&m[0][0]) == BigInt::from(1) && r(&m[0][1]) == BigInt::from(0)
                    && r(&m[1][0]) == BigInt::from(0) && r(&m[1][1]) == BigInt::from(1)
            };
            prop_assert!(is_id(ell));
            for k in (e.period()..ell).step_by(e.period()) {
                prop_assert!(k % 2 == 1 || !is_id(k));
            }
        }

        #[test]
        fn j_n_congruence(x in quad_irr(), n in 1usize..20) {
            let e = cf_expand(&x, 500).unwrap();
            let t = convergents(&e, 20).unwrap();
            let j = j_n_construct(&t, n).unwrap();
            let diff = (j.lhs_mod1.to_f64() - j.rhs_mod1.to_f64()).abs();
            prop_assert!(diff.min(1.0 - diff) <= 2f64.powi(-40));
        }

        #[test]
        fn parse_display_roundtrip(x in quad_irr()) {
            let y: QuadIrr = x.to_string().parse().unwrap();
            prop_assert_eq!(x, y);
        }

        #[test]
        fn field_ops_consistent((x, y) in same_field_pair()) {
            let s = &x + &y;
            prop_assert_eq!(&(&s - &y), &x);
            prop_assert!((s.to_f64() - x.to_f64() - y.to_f64()).abs() < 1e-9 * (1.0 + s.to_f64().abs()));
            if !y.is_zero() {
                prop_assert_eq!(&(&(&x * &y) / &y), &x);
            }
            if (x.to_f64() - y.to_f64()).abs() > 1e-9 {
                prop_assert_eq!(x.cmp(&y), x.to_f64().partial_cmp(&y.to_f64()).unwrap());
            }
        }
    }
}
