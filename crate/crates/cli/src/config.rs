use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::Serialize;
use skewrenorm::{FactorKind, QuadIrr};

pub const GOLDEN: &str = "(-1+1*sqrt(5))/2";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Sin,
    Cos,
}

impl Factor {
    pub fn kind(self) -> FactorKind {
        match self {
            Factor::Sin => FactorKind::Sin,
            Factor::Cos => FactorKind::Cos,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// `lo:hi:count`
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(format!("grid must be lo:hi:count, got {s:?}"));
        };
        let num = |t: &str| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        let g = Grid {
            lo: num(lo)?,
            hi: num(hi)?,
            count: count.parse().map_err(|e| format!("{count:?}: {e}"))?,
        };
        if !(g.lo.is_finite() && g.hi.is_finite() && g.lo < g.hi && g.count >= 2) {
            return Err(format!(
                "grid needs finite lo < hi and count >= 2, got {s:?}"
            ));
        }
        Ok(g)
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.count)
    }
}

/// A quadratic irrational in the `(a+b*sqrt(d))/c` grammar, or a rational
/// `p/q` or integer.
pub fn parse_number(s: &str) -> Result<QuadIrr, String> {
    if s.contains("sqrt") {
        return s.parse::<QuadIrr>().map_err(|e| e.to_string());
    }
    let (p, q) = s.split_once('/').unwrap_or((s, "1"));
    let p: i64 = p.parse().map_err(|e| format!("{s:?}: {e}"))?;
    let q: i64 = q.parse().map_err(|e| format!("{s:?}: {e}"))?;
    if q == 0 {
        return Err(format!("{s:?}: zero denominator"));
    }
    Ok(QuadIrr::from_ratio(p, q))
}

/// Inverse of [`parse_number`].
pub fn show_number(x: &QuadIrr) -> String {
    match (x.is_rational(), x.c().to_string()) {
        (true, c) if c == "1" => x.a().to_string(),
        (true, c) => format!("{}/{c}", x.a()),
        _ => x.to_string(),
    }
}

pub fn parse_alpha(s: &str) -> Result<QuadIrr, String> {
    let a = s.parse::<QuadIrr>().map_err(|e| e.to_string())?;
    if a.is_rational() {
        return Err(format!("{s:?} is rational"));
    }
    Ok(a)
}

/// Options shared by all subcommands.
#[derive(Args, Clone, Debug)]
pub struct Opts {
    /// Rotation number `(a+b*sqrt(d))/c`
    #[arg(long, default_value = GOLDEN, value_parser = parse_alpha, global = true)]
    pub alpha: QuadIrr,
    #[arg(long, value_enum, default_value = "sin", global = true)]
    pub factor: Factor,
    /// Preperiod offset μ; found by search when omitted (zeros, limit) or
    /// set to the preperiod
    #[arg(long, global = true)]
    pub mu: Option<usize>,
    /// Level step n; found by search or set to ℓ(α) when omitted
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long = "t-max", default_value_t = 4, global = true)]
    pub t_max: usize,
    /// Base window radius R
    #[arg(long, default_value = "1/2", value_parser = parse_number, global = true)]
    pub radius: QuadIrr,
    #[arg(
        long,
        default_value = "-1:1:400",
        allow_hyphen_values = true,
        global = true
    )]
    pub grid: Grid,
    /// Significand bits of the evaluation scalar: 53 (f64) or 24 (f32)
    #[arg(long, default_value_t = 53, value_parser = parse_precision, global = true)]
    pub precision: u32,
    /// Rows of the continued-fraction table
    #[arg(long, default_value_t = 30, global = true)]
    pub depth: usize,
    /// Orbit length for `growth`
    #[arg(long = "j-max", default_value_t = 100_000, global = true)]
    pub j_max: usize,
    #[arg(long, value_enum, default_value = "csv", global = true)]
    pub format: Format,
    /// Table destination; stdout when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write an SVG plot here
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Recorded for reproducibility of randomized sweeps
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
}

fn parse_precision(s: &str) -> Result<u32, String> {
    match s.parse::<u32>() {
        Ok(b @ (24 | 53)) => Ok(b),
        _ => Err(format!("precision must be 24 or 53, got {s:?}")),
    }
}

/// Everything a run depends on; embedded in every output.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub alpha: String,
    pub factor: Factor,
    pub mu: Option<usize>,
    pub n: Option<usize>,
    pub t_max: usize,
    pub radius: String,
    pub grid: String,
    pub precision: u32,
    pub depth: usize,
    pub j_max: usize,
    pub format: Format,
    pub out: Option<String>,
    pub svg: Option<String>,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(command: &str, o: &Opts) -> Self {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        RunConfig {
            command: command.into(),
            alpha: o.alpha.to_string(),
            factor: o.factor,
            mu: o.mu,
            n: o.n,
            t_max: o.t_max,
            radius: show_number(&o.radius),
            grid: o.grid.to_string(),
            precision: o.precision,
            depth: o.depth,
            j_max: o.j_max,
            format: o.format,
            out: path(&o.out),
            svg: path(&o.svg),
            seed: o.seed,
        }
    }
}
