use std::path::PathBuf;

use clap::Args;
use cyclic_cm::verify::run_verify;
use cyclic_cm::{Suite, Tolerances, VerifyConfig};

use crate::common::{explicit_coupling, to_json, write_output, Outcome};

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Random cases per suite.
    #[arg(long, default_value_t = 200)]
    pub cases: usize,
    /// Cases for the finite-difference bracket checks.
    #[arg(long, default_value_t = 100)]
    pub bracket_cases: usize,
    /// Configurations for the single-vertex projection-vs-ODE comparison.
    #[arg(long, default_value_t = 20)]
    pub crosscheck_cases: usize,
    /// Suites to run (repeatable or comma separated); all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub suite: Vec<Suite>,
    /// Fix the number of vertices instead of drawing it per case.
    #[arg(long)]
    pub m: Option<usize>,
    /// Fix the number of particles.
    #[arg(long)]
    pub n: Option<usize>,
    /// Fix the spin dimension (0 is spinless).
    #[arg(long)]
    pub d: Option<usize>,
    /// Fixed vertex couplings "re,im;…" (needs --m or sets it).
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<String>,
    #[arg(long, env = "CYCLIC_CM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Flip the sign of the framing row in the constraint suite (negative control).
    #[arg(long)]
    pub inject_sign_flip: bool,
    /// Report file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn config(args: &VerifyArgs, tol: Tolerances) -> anyhow::Result<VerifyConfig> {
    let coupling = explicit_coupling(args.g.as_deref(), args.m, &tol)?;
    let m = args.m.or(coupling.as_ref().map(|k| k.m()));
    Ok(VerifyConfig {
        seed: args.seed,
        cases: args.cases,
        bracket_cases: args.bracket_cases,
        crosscheck_cases: args.crosscheck_cases,
        m,
        n: args.n,
        d: args.d,
        coupling,
        suites: if args.suite.is_empty() {
            Suite::ALL.to_vec()
        } else {
            args.suite.clone()
        },
        inject_sign_flip: args.inject_sign_flip,
        tolerances: tol,
    })
}

pub fn run(args: &VerifyArgs, tol: Tolerances) -> anyhow::Result<Outcome> {
    let cfg = config(args, tol)?;
    let report = run_verify(&cfg)?;
    for s in &report.suites {
        eprintln!("{}", s.summary());
    }
    write_output(args.out.as_deref(), &to_json(&report)?)?;
    Ok(Outcome::from_pass(report.passed))
}
