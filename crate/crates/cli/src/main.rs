//! Command-line front end: sample points, run the verification suites, evolve
//! flows and emit interpolation curves.

mod common;
mod curve;
mod evolve;
mod gen;
mod verify;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cyclic_cm::Tolerances;

use common::{exit_code, Outcome};

#[derive(Parser, Debug)]
#[command(
    name = "cyclic-cm",
    version,
    about = "Calogero-Moser spaces of the cyclic quiver: spectral coordinates, flows, curves",
    after_help = "Any tolerance can be overridden with --tol-<name> <value>, e.g. --tol-bracket 1e-4.\n\
                  Exit codes: 0 all checks pass, 1 a check failed, 2 configuration or I/O error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a spectral point and write it with its matrix representative.
    Gen(gen::GenArgs),
    /// Run the verification suites and write a JSON report.
    Verify(verify::VerifyArgs),
    /// Follow the flow of H_K and write a time series.
    Evolve(evolve::EvolveArgs),
    /// Build an interpolation curve and sample it on the quotient surface.
    Curve(curve::CurveArgs),
}

/// Pulls `--tol-<name> <value>` and `--tol-<name>=<value>` out of the argument list.
fn split_tolerances(args: Vec<OsString>) -> anyhow::Result<(Tolerances, Vec<OsString>)> {
    let mut tol = Tolerances::default();
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.to_str().and_then(|s| s.strip_prefix("--tol-")).map(str::to_owned) else {
            rest.push(arg);
            continue;
        };
        let (name, value) = match flag.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .and_then(|v| v.into_string().ok())
                    .ok_or_else(|| anyhow::anyhow!("--tol-{flag} needs a value"))?;
                (flag, v)
            }
        };
        let v: f64 = value
            .parse()
            .map_err(|_| anyhow::anyhow!("--tol-{name}: '{value}' is not a number"))?;
        if !tol.set(&name, v) {
            anyhow::bail!(
                "unknown tolerance '--tol-{name}' (known: {})",
                Tolerances::names().join(", ").replace('_', "-")
            );
        }
    }
    Ok((tol, rest))
}

fn run(cli: Cli, tol: Tolerances) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Gen(a) => gen::run(&a, &tol),
        Command::Verify(a) => verify::run(&a, tol),
        Command::Evolve(a) => evolve::run(&a, &tol),
        Command::Curve(a) => curve::run(&a, &tol),
    }
}

fn main() -> ExitCode {
    let (tol, args) = match split_tolerances(std::env::args_os().collect()) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli, tol) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
