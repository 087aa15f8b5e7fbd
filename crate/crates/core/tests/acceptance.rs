//! One PASS/FAIL line per acceptance criterion. Exits nonzero on any FAIL.

use std::panic::{AssertUnwindSafe, catch_unwind};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skewrenorm::hofstadter::{self, OrbitKind};
use skewrenorm::limitfn::{
    DEFAULT_TAIL_TOL, LimitZeros, Limits, build_limit, fixed_point_check, marker_maps,
};
use skewrenorm::qfield::named::{golden, silver, sqrt3m1, sqrt7m2};
use skewrenorm::qfield::{cf_expand, convergents, ell_alpha, j_n_construct};
use skewrenorm::renorm::convergence_probe;
use skewrenorm::skewfactor::linspace;
use skewrenorm::zerolat::{PeriodicParams, discrepancy, find_periodic_params, three_gap};
use skewrenorm::{FactorKind, QuadIrr};

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn q(s: &str) -> QuadIrr {
    s.parse().unwrap()
}

fn half() -> QuadIrr {
    QuadIrr::from_ratio(1, 2)
}

fn twenty_irrationals() -> Vec<QuadIrr> {
    [
        "(-1+1*sqrt(5))/2",
        "(3-1*sqrt(5))/2",
        "(-1+1*sqrt(2))/1",
        "(-1+1*sqrt(3))/1",
        "(-2+1*sqrt(7))/1",
        "(-3+1*sqrt(13))/2",
        "(-3+1*sqrt(11))/1",
        "(-4+1*sqrt(17))/1",
        "(-1+1*sqrt(6))/2",
        "(1+1*sqrt(10))/7",
        "(-5+1*sqrt(29))/2",
        "(2+1*sqrt(3))/5",
        "(-7+1*sqrt(53))/2",
        "(-1+1*sqrt(19))/9",
        "(3+1*sqrt(23))/11",
        "(-8+1*sqrt(67))/1",
        "(5-1*sqrt(21))/3",
        "(-2+1*sqrt(5))/1",
        "(1+1*sqrt(97))/13",
        "(-9+1*sqrt(101))/3",
    ]
    .iter()
    .map(|s| q(s).fract())
    .collect()
}

/// `(-1)^k (q_k α - p_k) = ᾱ_{k+1}` in exact arithmetic.
fn cf_identity() -> Result<String, String> {
    let list = twenty_irrationals();
    for a in &list {
        let e = cf_expand(a, 200).map_err(|e| e.to_string())?;
        let t = convergents(&e, 31).map_err(|e| e.to_string())?;
        for k in 0..=30usize {
            let ki = k as isize;
            let lhs = &a.mul_int(t.q(ki)) - &QuadIrr::from_bigint(t.p(ki).clone());
            let lhs = if k % 2 == 0 { lhs } else { -lhs };
            let diff = &lhs - t.alpha_bar(k + 1);
            ensure(diff.is_zero(), || format!("{a}: k={k} residue {diff}"))?;
        }
    }
    Ok(format!(
        "{} irrationals, k <= 30, all residues exactly 0",
        list.len()
    ))
}

/// Smallest even multiple of the period with `C_n ≡ I (mod 4)`, by direct
/// multiplication of `[[0, 1], [1, c]]`.
fn ell_oracle(quotients: &[u64], period: usize) -> usize {
    let (mut p0, mut p1, mut q0, mut q1) = (1u64, 0u64, 0u64, 1u64);
    for n in 1.. {
        let c = quotients[(n - 1) % quotients.len()] % 4;
        (p0, p1) = (p1, (p0 + c * p1) % 4);
        (q0, q1) = (q1, (q0 + c * q1) % 4);
        if n % period == 0 && n % 2 == 0 && (p0, p1, q0, q1) == (1, 0, 0, 1) {
            return n;
        }
    }
    unreachable!()
}

fn mod4_period() -> Result<String, String> {
    let mut out = Vec::new();
    for (name, a, quotients, want) in [
        ("golden", golden(), [1u64], 6usize),
        ("sqrt2-1", silver(), [2], 4),
    ] {
        let got = ell_alpha(&cf_expand(&a, 100).unwrap()).map_err(|e| e.to_string())?;
        let oracle = ell_oracle(&quotients, 1);
        ensure(got == want && oracle == want, || {
            format!("{name}: ell = {got}, oracle {oracle}, expected {want}")
        })?;
        out.push(format!("{name} {got}"));
    }
    Ok(out.join(", "))
}

fn jn_construction() -> Result<String, String> {
    let a = golden();
    let t = convergents(&cf_expand(&a, 20).unwrap(), 8).unwrap();
    let j = j_n_construct(&t, 6).map_err(|e| e.to_string())?;
    ensure(j.j_n == BigInt::from(3), || format!("j_6 = {}", j.j_n))?;
    ensure(j.a == a.div_int(&BigInt::from(4)), || {
        format!("a = {}", j.a)
    })?;
    // (j_6 + 1/4) α is within α^7/4 of an integer
    let x = &a.mul_int(&BigInt::from(3)) + &a.div_int(&BigInt::from(4));
    let resid = (&x - &QuadIrr::from_bigint((&x + &half()).floor())).abs();
    let mut a7 = QuadIrr::one();
    for _ in 0..7 {
        a7 = &a7 * &a;
    }
    let target = a7.div_int(&BigInt::from(4));
    let err = (resid.to_f64() - target.to_f64()).abs();
    let af = a.to_f64();
    let float_err = ((3.25 * af - (3.25 * af).round()).abs() - af.powi(7) / 4.0).abs();
    ensure(err <= 1e-10 && float_err <= 1e-10, || {
        format!("residue {} vs α^7/4 = {}", resid.to_f64(), target.to_f64())
    })?;
    Ok(format!(
        "j_6 = 3, a = α/4, residue {:.6e} (α^7/4 = {:.6e}, exact match {})",
        resid.to_f64(),
        target.to_f64(),
        resid == target
    ))
}

fn random_quadratic(rng: &mut ChaCha8Rng) -> QuadIrr {
    loop {
        let d = rng.gen_range(2u64..200);
        let (a, b, c) = (
            rng.gen_range(-30i64..=30),
            rng.gen_range(1i64..=9) * if rng.gen_bool(0.5) { 1 } else { -1 },
            rng.gen_range(1i64..=40),
        );
        let x = QuadIrr::new(a, b, d, c).unwrap();
        if !x.is_rational() {
            return x.fract();
        }
    }
}

fn three_gap_suite() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3a9);
    let mut seen = [0usize; 4];
    for case in 0..1000 {
        let alpha = random_quadratic(&mut rng);
        let n = rng.gen_range(1u64..=10_000);
        let theta0 = QuadIrr::from_ratio(rng.gen_range(0..1009), 1009);
        let s = three_gap(&alpha, n, &theta0);
        ensure((1..=3).contains(&s.distinct()) && s.total() == n, || {
            format!(
                "case {case}: α = {alpha}, q = {n}: {} lengths",
                s.distinct()
            )
        })?;
        let exact: Vec<QuadIrr> = s.lengths.iter().map(|(g, _)| g.exact(&alpha)).collect();
        let total = exact
            .iter()
            .zip(&s.lengths)
            .fold(QuadIrr::zero(), |acc, (x, (_, c))| {
                &acc + &x.mul_int(&BigInt::from(*c))
            });
        ensure(total == QuadIrr::one(), || {
            format!("case {case}: gaps sum to {total}")
        })?;
        if let [a, b, c] = exact.as_slice() {
            ensure(c == &(a + b), || {
                format!("case {case}: α = {alpha}, q = {n}: {c} != {a} + {b}")
            })?;
        }
        seen[s.distinct()] += 1;
    }
    Ok(format!(
        "1000 cases: {} with one gap, {} with two, {} with three",
        seen[1], seen[2], seen[3]
    ))
}

fn discrepancy_envelope() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (name, a) in [
        ("golden", golden()),
        ("sqrt2-1", silver()),
        ("sqrt3-1", sqrt3m1()),
        ("sqrt7-2", sqrt7m2()),
        ("(sqrt6-1)/2", q("(-1+1*sqrt(6))/2")),
    ] {
        let t = convergents(&cf_expand(&a, 100).unwrap(), 20).unwrap();
        let norm: Vec<f64> = (2..=20)
            .map(|k| {
                let qk = t.q(k).to_u64().unwrap();
                discrepancy(&a, qk).normalized
            })
            .collect();
        // no growth: the later third stays below the earlier third
        let third = norm.len() / 3;
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let (early, late) = (mean(&norm[..third]), mean(&norm[norm.len() - third..]));
        ensure(late <= early, || {
            format!("{name}: D/log q rises {early:.3} -> {late:.3}")
        })?;
        worst = worst.max(norm.iter().cloned().fold(0.0, f64::max));
        lines.push(format!("{name} {early:.3}->{late:.3}"));
    }
    ensure(worst < 5.0, || format!("max D/log q = {worst}"))?;
    Ok(format!("max D/log q {worst:.3}; {}", lines.join(", ")))
}

fn search(a: &QuadIrr, kind: FactorKind) -> Result<PeriodicParams, String> {
    find_periodic_params(a, kind, &half(), 4).map_err(|e| format!("{kind:?}: {e}"))
}

/// Sets at levels `t0..=t0+3` agree exactly on strictly expanding windows.
fn check_stabilization(p: &PeriodicParams) -> Result<(), String> {
    let rep = &p.report;
    ensure(rep.t_max() >= p.t0 + 3, || {
        format!("only {} stable levels", rep.t_max() - p.t0)
    })?;
    for t in p.t0..p.t0 + 3 {
        let row = &rep.rows[t];
        ensure(row.matches() && row.a_count > 0, || {
            format!("level {t} differs")
        })?;
    }
    let r = &rep.windows.radii[p.t0..p.t0 + 3];
    ensure(r.windows(2).all(|w| w[1] > w[0]), || {
        "radii not expanding".into()
    })?;
    ensure(p.invariant_present, || "invariant zero missing".into())
}

fn stabilization() -> Result<String, String> {
    let mut out = Vec::new();
    for kind in [FactorKind::Sin, FactorKind::Cos] {
        let p = search(&golden(), kind)?;
        ensure((p.mu, p.n) == (0, 6), || {
            format!("{kind:?}: found (μ, n) = ({}, {})", p.mu, p.n)
        })?;
        check_stabilization(&p)?;
        let last = p.report.rows.last().unwrap();
        out.push(format!(
            "{kind:?}: (0, 6), t0 = {}, last comparison at q = {}",
            p.t0, last.q_m
        ));
    }
    Ok(out.join("; "))
}

fn probe_decreasing(
    a: &QuadIrr,
    kind: FactorKind,
    mu: usize,
    n: usize,
    t_max: usize,
) -> Result<Vec<f64>, String> {
    let grid = linspace(-1.0, 1.0, 400);
    let rows = convergence_probe(a, kind, mu, n, t_max, &grid).map_err(|e| e.to_string())?;
    let da: Vec<f64> = rows.iter().map(|r| r.delta_a).collect();
    let db: Vec<f64> = rows.iter().map(|r| r.delta_b).collect();
    for (name, d) in [("A", &da), ("B", &db)] {
        ensure(d.windows(2).all(|w| w[1] < w[0]), || {
            format!("{kind:?} {name}: not decreasing {d:?}")
        })?;
    }
    Ok(vec![*da.last().unwrap(), *db.last().unwrap()])
}

fn convergence() -> Result<String, String> {
    let mut out = Vec::new();
    for kind in [FactorKind::Sin, FactorKind::Cos] {
        let last = probe_decreasing(&golden(), kind, 0, 6, 4)?;
        ensure(last.iter().all(|&d| d <= 1e-2), || {
            format!("{kind:?}: final Δ = {last:?}")
        })?;
        out.push(format!("{kind:?} Δ_4 = ({:.2e}, {:.2e})", last[0], last[1]));
    }
    Ok(out.join("; "))
}

fn limits_of(p: &PeriodicParams) -> Result<Limits, String> {
    let lz = LimitZeros::from_report(&p.report).map_err(|e| e.to_string())?;
    build_limit(&lz, 1.0, DEFAULT_TAIL_TOL).map_err(|e| e.to_string())
}

/// `A(0) = 1`, `A(z) A(-z) = 1` and the log-derivative against a central
/// difference. Returns the worst deviations.
fn check_limit(lim: &Limits) -> Result<(f64, f64), String> {
    let (mut sym, mut der): (f64, f64) = (0.0, 0.0);
    for f in [&lim.a, &lim.b] {
        let v0 = f.eval(0.0f64).value;
        ensure(v0.is_finite() && v0.sign == 1 && v0.log_mag == 0.0, || {
            format!("A(0) = {v0:?}")
        })?;
        let zeros: Vec<f64> = f.zeros.values().to_vec();
        for z in linspace(-0.95, 0.95, 39) {
            if zeros
                .iter()
                .any(|a| (z - a).abs() < 1e-2 || (z + a).abs() < 1e-2)
            {
                continue;
            }
            let (p, m) = (f.eval(z).value, f.eval(-z).value);
            ensure(p.sign * m.sign == 1, || format!("sign of A(z)A(-z) at {z}"))?;
            sym = sym.max((p.log_mag + m.log_mag).abs());
            let h = 1e-5;
            let num = (f.eval(z + h).value.log_mag - f.eval(z - h).value.log_mag) / (2.0 * h);
            let ld = f.log_deriv(z).map_err(|e| e.to_string())?.value;
            der = der.max((num - ld).abs() / ld.abs().max(1.0));
        }
    }
    ensure(sym <= 1e-10, || {
        format!("|log A(z) + log A(-z)| up to {sym:e}")
    })?;
    ensure(der <= 1e-4, || format!("log-derivative mismatch {der:e}"))?;
    Ok((sym, der))
}

fn limit_consistency() -> Result<String, String> {
    let mut out = Vec::new();
    for kind in [FactorKind::Sin, FactorKind::Cos] {
        let lim = limits_of(&search(&golden(), kind)?)?;
        let (sym, der) = check_limit(&lim)?;
        out.push(format!("{kind:?}: symmetry {sym:.1e}, log-deriv {der:.1e}"));
    }
    Ok(out.join("; "))
}

/// `(q_n + p_n, q_{n-1} + p_{n-1})` from the recurrence with fixed quotient.
fn count_oracle(c: u64, n: usize) -> (u64, u64) {
    let (mut p0, mut p1, mut q0, mut q1) = (1u64, 0u64, 0u64, 1u64);
    for _ in 0..n {
        (p0, p1) = (p1, p0 + c * p1);
        (q0, q1) = (q1, q0 + c * q1);
    }
    (q1 + p1, q0 + p0)
}

fn check_fixed_point(p: &PeriodicParams, quotient: u64) -> Result<String, String> {
    let lim = limits_of(p)?;
    let maps = marker_maps(&p.report.sigma, p.n).map_err(|e| e.to_string())?;
    let grid = linspace(-0.93, 0.97, 25);
    let fp =
        fixed_point_check(&p.report, &maps, &lim.a, &lim.b, &grid).map_err(|e| e.to_string())?;
    let want = count_oracle(quotient, p.n);
    ensure(fp.counts == want, || {
        format!("counts {:?}, expected {want:?}", fp.counts)
    })?;
    ensure(fp.sets_equal(), || {
        format!(
            "image sets differ at {:?} / {:?}",
            fp.a_mismatch, fp.b_mismatch
        )
    })?;
    ensure(fp.functions_within_tails(), || {
        format!(
            "function residual ({:e}, {:e}) vs tails ({:e}, {:e})",
            fp.psi_residual, fp.phi_residual, fp.psi_tail, fp.phi_tail
        )
    })?;
    Ok(format!(
        "counts {:?}, {}+{} points equal, residual {:.1e}",
        fp.counts,
        fp.a_points,
        fp.b_points,
        fp.psi_residual.max(fp.phi_residual)
    ))
}

fn fixed_point() -> Result<String, String> {
    let mut out = Vec::new();
    for kind in [FactorKind::Sin, FactorKind::Cos] {
        let p = search(&golden(), kind)?;
        out.push(format!("{kind:?}: {}", check_fixed_point(&p, 1)?));
    }
    Ok(out.join("; "))
}

fn growth() -> Result<String, String> {
    let period = 6.0 * (1.0 / golden().to_f64()).ln();
    let mut out = Vec::new();
    for kind in [OrbitKind::Sine, OrbitKind::Cosine] {
        let o = hofstadter::orbit::<f64>(&golden(), kind, &QuadIrr::zero(), 100_000)
            .map_err(|e| e.to_string())?;
        let g = hofstadter::growth_fit(&o).map_err(|e| e.to_string())?;
        ensure((0.81..=0.91).contains(&g.tau), || {
            format!("{kind:?}: τ = {}", g.tau)
        })?;
        ensure((g.period / period - 1.0).abs() <= 0.1, || {
            format!("{kind:?}: period {} vs {period}", g.period)
        })?;
        out.push(format!("{kind:?} τ = {:.4}, period {:.3}", g.tau, g.period));
    }
    Ok(format!("{} (6 log(1/α) = {period:.3})", out.join(", ")))
}

fn residual_envelope() -> Result<String, String> {
    let eps: Vec<f64> = (1..=5)
        .map(|t| hofstadter::residual(&golden(), 0, 6, t).map(|r| r.epsilon))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(eps.iter().all(|&e| e > 0.0), || format!("{eps:?}"))?;
    ensure(eps.windows(2).all(|w| w[1] < w[0]), || {
        format!("not decreasing {eps:?}")
    })?;
    let et: Vec<f64> = eps
        .iter()
        .enumerate()
        .map(|(i, e)| e * (i + 1) as f64)
        .collect();
    // bounded: no later ε_t·t exceeds the first
    ensure(et.iter().all(|&x| x <= et[0]), || format!("ε·t = {et:?}"))?;
    Ok(format!(
        "ε = [{}]",
        eps.iter()
            .map(|e| format!("{e:.3e}"))
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

fn second_irrational() -> Result<String, String> {
    let a = silver();
    let mut out = Vec::new();
    for kind in [FactorKind::Sin, FactorKind::Cos] {
        let p = search(&a, kind)?;
        check_stabilization(&p)?;
        probe_decreasing(&a, kind, p.mu, p.n, 3)?;
        check_limit(&limits_of(&p)?)?;
        let fp = check_fixed_point(&p, 2)?;
        out.push(format!(
            "{kind:?}: (μ, n) = ({}, {}), t0 = {}, {fp}",
            p.mu, p.n, p.t0
        ));
    }
    Ok(out.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, Check); 12] = [
        ("exact continued-fraction identity", 1, cf_identity),
        ("mod-4 matrix period", 1, mod4_period),
        ("j_n construction", 1, jn_construction),
        ("three-gap property suite", 30, three_gap_suite),
        ("discrepancy envelope", 30, discrepancy_envelope),
        ("zero-set stabilization", 120, stabilization),
        ("convergence probe", 120, convergence),
        ("limit-function consistency", 60, limit_consistency),
        ("fixed-point check", 120, fixed_point),
        ("growth exponent and log-period", 60, growth),
        ("residual envelope", 120, residual_envelope),
        ("second irrational end to end", 300, second_irrational),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(format!("panic: {:?}", e.downcast_ref::<String>())));
        let took = start.elapsed();
        let res = res.and_then(|detail| {
            if took <= Duration::from_secs(*budget) {
                Ok(detail)
            } else {
                Err(format!("{detail}; over the {budget} s budget"))
            }
        });
        let (tag, detail) = match res {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} {:>2} {name} [{:.2} s / {budget} s]: {detail}",
            i + 1,
            took.as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
