//! Command-line front end: continued fractions, renormalized products, zero
//! stabilization, limit factors and the Hofstadter residual and growth.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Outcome};
use config::{Opts, RunConfig};

#[derive(Parser)]
#[command(name = "skewrenorm", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Continued fraction, convergents and the level step ℓ
    Cf,
    /// Rescaled orbit products A^(q_m)(ᾱ_m x), B likewise, over the grid
    Product,
    /// Sup chordal distance between successive renormalized products
    Renorm,
    /// Windowed zero/pole stabilization; searches (μ, n) unless given
    Zeros,
    /// Limit factors A*°, B*° with tail bounds and the fixed-point check
    Limit,
    /// Approximate-eigenvector residuals of the Hofstadter operator
    Residual,
    /// Zero-energy orbit and its growth exponent
    Growth,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Cf => "cf",
            Cmd::Product => "product",
            Cmd::Renorm => "renorm",
            Cmd::Zeros => "zeros",
            Cmd::Limit => "limit",
            Cmd::Residual => "residual",
            Cmd::Growth => "growth",
        }
    }
}

fn run(cmd: Cmd, o: &Opts) -> Result<Outcome, Failure> {
    match cmd {
        Cmd::Cf => commands::cf(o),
        Cmd::Product => commands::product(o),
        Cmd::Renorm => commands::renorm(o),
        Cmd::Zeros => commands::zeros(o),
        Cmd::Limit => commands::limit(o),
        Cmd::Residual => commands::residual(o),
        Cmd::Growth => commands::growth(o),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let cfg = RunConfig::new(cli.cmd.name(), &cli.opts);
    let out = match run(cli.cmd, &cli.opts) {
        Ok(out) => out,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
        Err(Failure::Violation(m)) => {
            eprintln!("violation: {m}");
            return ExitCode::from(2);
        }
    };
    match output::write_table(&cfg, &out.summary, &out.table, cli.opts.out.as_deref()) {
        Ok(()) => {}
        // e.g. piped into `head`
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: writing table: {e}");
            return ExitCode::from(1);
        }
    }
    if let Some(p) = &cli.opts.svg
        && let Err(e) = output::write_svg(p, &out.panels)
    {
        eprintln!("error: writing {}: {e}", p.display());
        return ExitCode::from(1);
    }
    match out.violation {
        Some(m) => {
            eprintln!("violation: {m}");
            ExitCode::from(2)
        }
        None => ExitCode::SUCCESS,
    }
}
