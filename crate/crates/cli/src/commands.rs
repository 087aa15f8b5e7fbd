use serde_json::{Value, json};
use skewrenorm::hofstadter::{self, OrbitKind};
use skewrenorm::limitfn::{
    DEFAULT_TAIL_TOL, LimitZeros, build_limit, expansion_estimate, fixed_point_check, marker_maps,
};
use skewrenorm::qfield::{cf_expand, convergents, ell_alpha};
use skewrenorm::renorm::{CF_DEPTH, TrigSequence, convergence_probe};
use skewrenorm::skewfactor::linspace;
use skewrenorm::zerolat::{StabilizationReport, find_periodic_params, stabilization_report};
use skewrenorm::{Error, ExtValue, QuadIrr, Real, ValueClass};

use crate::config::{Factor, Opts, show_number};
use crate::output::{Panel, Table, num, thin};

/// What a subcommand produced. A violation still writes its outputs.
pub struct Outcome {
    pub summary: Value,
    pub table: Table,
    pub panels: Vec<Panel>,
    pub violation: Option<String>,
}

pub enum Failure {
    /// bad input or a computation that cannot run; exit 1
    Input(String),
    /// a checked property does not hold; exit 2
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_violation() {
            Failure::Violation(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Res = Result<Outcome, Failure>;

macro_rules! with_scalar {
    ($o:expr, $f:ident($($arg:expr),*)) => {
        if $o.precision == 24 { $f::<f32>($($arg),*) } else { $f::<f64>($($arg),*) }
    };
}

fn class_name(c: ValueClass) -> &'static str {
    match c {
        ValueClass::Finite => "finite",
        ValueClass::Zero => "zero",
        ValueClass::Pole => "pole",
    }
}

fn ext_cells<T: Real>(v: &ExtValue<T>) -> [Value; 4] {
    [
        json!(class_name(v.class)),
        json!(v.order),
        json!(v.sign),
        num(v.log_mag.to_f64().unwrap()),
    ]
}

fn grid<T: Real>(o: &Opts) -> Vec<T> {
    linspace(T::lit(o.grid.lo), T::lit(o.grid.hi), o.grid.count)
}

/// `(κ, ℓ)`: preperiod and the level step of the periodic part.
fn kappa_ell(alpha: &QuadIrr) -> Result<(usize, usize), Failure> {
    let exp = cf_expand(alpha, CF_DEPTH)?;
    Ok((exp.preperiod(), ell_alpha(&exp.periodic_part())?))
}

fn levels(o: &Opts) -> Result<(usize, usize), Failure> {
    let (kappa, ell) = kappa_ell(&o.alpha)?;
    let (mu, n) = (o.mu.unwrap_or(kappa), o.n.unwrap_or(ell));
    if n == 0 {
        return Err(Failure::Input("--n must be positive".into()));
    }
    Ok((mu, n))
}

pub fn cf(o: &Opts) -> Res {
    let exp = cf_expand(&o.alpha, CF_DEPTH)?;
    let ell = ell_alpha(&exp.periodic_part())?;
    let tab = convergents(&exp, o.depth)?;
    let mut table = Table::new(&["k", "c_k", "p_k", "q_k", "alpha_k", "alpha_bar", "identity"]);
    let mut bad = None;
    for k in 0..=o.depth {
        let ki = k as isize;
        let (p, q) = (tab.p(ki), tab.q(ki));
        // p_k q_{k-1} - p_{k-1} q_k = (-1)^{k+1}
        let det = p * tab.q(ki - 1) - tab.p(ki - 1) * q;
        let ok = det == if k % 2 == 0 { (-1).into() } else { 1.into() };
        if !ok && bad.is_none() {
            bad = Some(format!("determinant identity fails at k = {k}"));
        }
        table.push(vec![
            json!(k),
            json!(tab.c(k)),
            json!(p.to_string()),
            json!(q.to_string()),
            json!(tab.alpha_k(k).to_string()),
            num(tab.alpha_bar(k).to_f64()),
            json!(ok),
        ]);
    }
    Ok(Outcome {
        summary: json!({
            "preperiod": exp.preperiod(),
            "period": exp.period(),
            "ell": ell,
            "coeffs": exp.coeffs(exp.preperiod() + exp.period()),
            "sigma": exp.sigma().to_string(),
        }),
        table,
        panels: Vec::new(),
        violation: bad,
    })
}

pub fn product(o: &Opts) -> Res {
    with_scalar!(o, product_t(o))
}

fn product_t<T: Real>(o: &Opts) -> Res {
    let (mu, n) = levels(o)?;
    let seq = TrigSequence::new(o.factor.kind(), &o.alpha, mu + o.t_max * n)?;
    let xs = grid::<T>(o);
    let mut table = Table::new(&[
        "t",
        "m",
        "q_m",
        "x",
        "a_class",
        "a_order",
        "a_sign",
        "a_log_abs",
        "b_class",
        "b_order",
        "b_sign",
        "b_log_abs",
    ]);
    let mut panels = Vec::new();
    for t in 0..=o.t_max {
        let m = mu + t * n;
        let q = seq.q(m as isize)?;
        let av = seq.a_product(m)?.eval_grid(&xs);
        let bv = seq.b_product(m)?.eval_grid(&xs);
        let mut series = Vec::new();
        for ((x, a), b) in xs.iter().zip(&av).zip(&bv) {
            let mut row = vec![json!(t), json!(m), json!(q), num(x.to_f64().unwrap())];
            row.extend(ext_cells(a));
            row.extend(ext_cells(b));
            table.push(row);
            series.push((x.to_f64().unwrap(), a.log_mag.to_f64().unwrap()));
        }
        panels.push((format!("m = {m}"), series));
    }
    Ok(Outcome {
        summary: json!({ "mu": mu, "n": n }),
        table,
        panels: vec![Panel {
            title: "log|A^(q_m)(a_m x)|".into(),
            x_label: "x",
            series: panels,
        }],
        violation: None,
    })
}

pub fn renorm(o: &Opts) -> Res {
    with_scalar!(o, renorm_t(o))
}

fn renorm_t<T: Real>(o: &Opts) -> Res {
    let (mu, n) = levels(o)?;
    let rows = convergence_probe(&o.alpha, o.factor.kind(), mu, n, o.t_max, &grid::<T>(o))?;
    let mut table = Table::new(&["t", "m", "q_m", "delta_a", "delta_b"]);
    let (mut da, mut db) = (Vec::new(), Vec::new());
    for r in &rows {
        let (a, b) = (r.delta_a.to_f64().unwrap(), r.delta_b.to_f64().unwrap());
        table.push(vec![json!(r.t), json!(r.m), json!(r.q_m), num(a), num(b)]);
        da.push((r.t as f64, a.log10()));
        db.push((r.t as f64, b.log10()));
    }
    Ok(Outcome {
        summary: json!({ "mu": mu, "n": n }),
        table,
        panels: vec![Panel {
            title: "log10 sup chordal distance".into(),
            x_label: "t",
            series: vec![("A".into(), da), ("B".into(), db)],
        }],
        violation: None,
    })
}

/// A stabilization report for explicit `(μ, n)` or from the search.
fn report(o: &Opts) -> Result<(StabilizationReport, Value, Option<String>), Failure> {
    let kind = o.factor.kind();
    match (o.mu, o.n) {
        (Some(mu), Some(n)) => {
            let rep = stabilization_report(&o.alpha, kind, mu, n, &o.radius, o.t_max)?;
            let t0 = rep.stable_from();
            let violation = match t0 {
                None => Some(format!(
                    "zero sets do not stabilize for mu = {mu}, n = {n} up to t = {}",
                    o.t_max
                )),
                Some(_) => None,
            };
            let summary = json!({
                "mu": mu,
                "n": n,
                "t0": t0,
                "sigma": rep.sigma.to_string(),
                "theta_estimate": t0.map(|t| num(rep.theta_estimate(t))),
            });
            Ok((rep, summary, violation))
        }
        (None, None) => {
            let p = find_periodic_params(&o.alpha, kind, &o.radius, o.t_max)?;
            let summary = json!({
                "kappa": p.kappa,
                "ell": p.ell,
                "s": p.s,
                "tau": p.tau,
                "mu": p.mu,
                "n": p.n,
                "t0": p.t0,
                "sigma": p.report.sigma.to_string(),
                "invariant_zero": p.invariant_zero.to_string(),
                "invariant_present": p.invariant_present,
                "rejected": p.rejected,
                "theta_estimate": num(p.report.theta_estimate(p.t0)),
            });
            Ok((p.report, summary, None))
        }
        _ => Err(Failure::Input("give both --mu and --n, or neither".into())),
    }
}

pub fn zeros(o: &Opts) -> Res {
    let (rep, summary, violation) = report(o)?;
    let mut table = Table::new(&[
        "t", "m", "q_m", "radius", "a_count", "b_count", "a_match", "b_match", "a_diff", "b_diff",
        "multiple",
    ]);
    let opt = |d: &Option<QuadIrr>| d.as_ref().map_or(Value::Null, |x| json!(x.to_string()));
    let mut counts = Vec::new();
    for r in &rep.rows {
        table.push(vec![
            json!(r.t),
            json!(r.m),
            json!(r.q_m),
            json!(show_number(&r.radius)),
            json!(r.a_count),
            json!(r.b_count),
            json!(r.a_match),
            json!(r.b_match),
            opt(&r.a_diff),
            opt(&r.b_diff),
            json!(r.multiple),
        ]);
        counts.push((r.t as f64, r.a_count as f64));
    }
    let last = &rep.sets[rep.t_max()].0.zeros;
    let pts: Vec<(f64, f64)> = last.to_f64().into_iter().map(|x| (x, 0.0)).collect();
    Ok(Outcome {
        summary,
        table,
        panels: vec![
            Panel {
                title: "zeros + poles of A in window".into(),
                x_label: "t",
                series: vec![("count".into(), counts)],
            },
            Panel {
                title: "zeros of A at the last level".into(),
                x_label: "x",
                series: vec![("zeros".into(), pts)],
            },
        ],
        violation,
    })
}

pub fn limit(o: &Opts) -> Res {
    with_scalar!(o, limit_t(o))
}

fn limit_t<T: Real>(o: &Opts) -> Res {
    let (rep, mut summary, violation) = report(o)?;
    if let Some(v) = violation {
        return Err(Failure::Violation(v));
    }
    let lz = LimitZeros::from_report(&rep)?;
    let z_max = o.grid.lo.abs().max(o.grid.hi.abs());
    let lim = build_limit(&lz, z_max, DEFAULT_TAIL_TOL)?;
    let xs = grid::<T>(o);
    let mut table = Table::new(&[
        "x",
        "a_class",
        "a_order",
        "a_sign",
        "a_log_abs",
        "a_rel_tail",
        "b_class",
        "b_order",
        "b_sign",
        "b_log_abs",
        "b_rel_tail",
    ]);
    let (mut sa, mut sb) = (Vec::new(), Vec::new());
    for x in &xs {
        let (a, b) = (lim.a.eval(*x), lim.b.eval(*x));
        let xf = x.to_f64().unwrap();
        let mut row = vec![num(xf)];
        row.extend(ext_cells(&a.value));
        row.push(num(a.rel_tail.to_f64().unwrap()));
        row.extend(ext_cells(&b.value));
        row.push(num(b.rel_tail.to_f64().unwrap()));
        table.push(row);
        if a.value.is_finite() {
            sa.push((xf, a.value.value().to_f64().unwrap().clamp(-10.0, 10.0)));
        }
        if b.value.is_finite() {
            sb.push((xf, b.value.value().to_f64().unwrap().clamp(-10.0, 10.0)));
        }
    }

    let maps = marker_maps(&rep.sigma, rep.n)?;
    let check_grid: Vec<f64> = linspace(o.grid.lo, o.grid.hi, o.grid.count.min(51));
    let fp = fixed_point_check(&rep, &maps, &lim.a, &lim.b, &check_grid)?;
    let ex = expansion_estimate(&rep, &maps)?;
    let (ra, rb) = lz.regularity();
    summary["truncation"] = json!({ "a": lim.a.j, "b": lim.b.j });
    summary["regularity"] = json!([num(ra), num(rb)]);
    summary["fixed_point"] = json!({
        "passed": fp.passed(),
        "sets_equal": fp.sets_equal(),
        "counts": [fp.counts.0, fp.counts.1],
        "expected": [fp.expected.0, fp.expected.1],
        "psi_residual": num(fp.psi_residual),
        "phi_residual": num(fp.phi_residual),
    });
    summary["expansion"] = json!({
        "factor": num(ex.factor),
        "fixed_zero": ex.fixed_zero.as_ref().map(|z| z.to_string()),
        "word": ex.word,
    });
    let violation = (!fp.passed()).then(|| "fixed-point check failed".to_string());
    Ok(Outcome {
        summary,
        table,
        panels: vec![Panel {
            title: "limit factors (clamped to ±10)".into(),
            x_label: "z",
            series: vec![("A*".into(), sa), ("B*".into(), sb)],
        }],
        violation,
    })
}

pub fn residual(o: &Opts) -> Res {
    let (mu, n) = levels(o)?;
    let mut table = Table::new(&["t", "m", "q_m", "epsilon", "epsilon_times_t"]);
    let mut eps = Vec::new();
    for t in 1..=o.t_max {
        let r = hofstadter::residual(&o.alpha, mu, n, t)?;
        table.push(vec![
            json!(r.t),
            json!(r.m),
            json!(r.q_m),
            num(r.epsilon),
            num(r.epsilon * t as f64),
        ]);
        eps.push((t as f64, r.epsilon));
    }
    let decreasing = eps.windows(2).all(|w| w[1].1 < w[0].1);
    let positive = eps.iter().all(|e| e.1 > 0.0 && e.1.is_finite());
    let violation = (!(decreasing && positive))
        .then(|| "residuals are not positive and strictly decreasing".to_string());
    let logs = eps.iter().map(|&(t, e)| (t, e.log10())).collect();
    Ok(Outcome {
        summary: json!({
            "mu": mu,
            "n": n,
            "xi": hofstadter::default_xi(&o.alpha).to_string(),
            "decreasing": decreasing,
        }),
        table,
        panels: vec![Panel {
            title: "log10 residual".into(),
            x_label: "t",
            series: vec![("epsilon".into(), logs)],
        }],
        violation,
    })
}

pub fn growth(o: &Opts) -> Res {
    with_scalar!(o, growth_t(o))
}

fn growth_t<T: Real>(o: &Opts) -> Res {
    let kind = match o.factor {
        Factor::Sin => OrbitKind::Sine,
        Factor::Cos => OrbitKind::Cosine,
    };
    let orb = hofstadter::orbit::<T>(&o.alpha, kind, &QuadIrr::zero(), o.j_max)?;
    let fit = hofstadter::growth_fit(&orb)?;
    let mut table = Table::new(&["j", "sign", "log_abs_y"]);
    let (mut signed, mut logs) = (Vec::new(), Vec::new());
    for j in 0..=orb.j_max() {
        let l = orb.logs[j].to_f64().unwrap();
        let s = orb.signs[j];
        table.push(vec![json!(j), json!(s), num(l)]);
        signed.push((j as f64, s as f64 * l.min(50.0).exp()));
        if j > 0 {
            logs.push(((j as f64).ln(), l));
        }
    }
    let side = |s: &Option<hofstadter::SideFit>| {
        s.as_ref().map(|s| {
            json!({
                "tau": num(s.tau),
                "period": num(s.period),
                "increment": num(s.increment),
                "mismatch": num(s.mismatch),
            })
        })
    };
    let summary = json!({
        "tau": num(fit.tau),
        "period": num(fit.period),
        "dominant": format!("{:?}", fit.dominant).to_lowercase(),
        "upper": side(&fit.upper),
        "lower": side(&fit.lower),
        "ls_slope": num(fit.ls_slope),
        "ls_intercept": num(fit.ls_intercept),
        "range": [fit.range.0, fit.range.1],
    });
    Ok(Outcome {
        summary,
        table,
        panels: vec![
            Panel {
                title: "y_j".into(),
                x_label: "j",
                series: vec![("y".into(), thin(&signed, 1000))],
            },
            Panel {
                title: "log|y_j|".into(),
                x_label: "log j",
                series: vec![("log|y|".into(), thin(&logs, 1000))],
            },
        ],
        violation: None,
    })
}
