use std::path::PathBuf;

use clap::Args;
use cyclic_cm::dynamics::{crosscheck_m1, evolve_series, hamiltonian_drift, CrosscheckRow, SeriesRow};
use cyclic_cm::model::{case_rng, sample_qpoint};
use cyclic_cm::{CmError, Tolerances, C64};
use serde::Serialize;

use crate::common::{load_or_sample, parse_complex, to_json, write_output, Format, Outcome, PointArgs};

/// RK4 steps per unit time in the cross-check.
const ODE_STEPS_PER_UNIT: f64 = 4000.0;

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Which Hamiltonian H_K = (1/K) Σ λ_j^{mK} to flow.
    #[arg(long = "K", default_value_t = 1)]
    pub k: usize,
    /// Final time, "re" or "re,im".
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub t: String,
    /// Number of time steps in the series (rows beyond t = 0).
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Compare the projected positions with RK4 on the particle equations (m = 1).
    #[arg(long)]
    pub crosscheck_m1: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Crosscheck {
    rows: Vec<CrosscheckRow>,
    max_distance: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct EvolveReport<'a> {
    k: usize,
    #[serde(with = "cyclic_cm::serde_cx::scalar")]
    t: C64,
    coupling: &'a cyclic_cm::Coupling,
    rows: &'a [SeriesRow],
    hamiltonian_drift: f64,
    conservation_tolerance: f64,
    crosscheck: Option<Crosscheck>,
    passed: bool,
}

pub fn run(args: &EvolveArgs, tol: &Tolerances) -> anyhow::Result<Outcome> {
    if args.k == 0 || args.steps == 0 {
        return Err(CmError::InvalidInput("--K and --steps must be positive".into()).into());
    }
    let t = parse_complex(&args.t)?;
    let rec = load_or_sample(&args.point, tol)?;
    let rows = evolve_series(&rec.point, &rec.coupling, rec.framing.as_ref(), args.k, t, args.steps, tol)?;
    let drift = hamiltonian_drift(&rows);
    let mut passed = drift <= tol.conservation_rel;
    eprintln!("hamiltonian drift {drift:.3e} (tolerance {:.1e})", tol.conservation_rel);

    let crosscheck = if args.crosscheck_m1 {
        if rec.m != 1 {
            return Err(CmError::InvalidInput("--crosscheck-m1 needs m = 1".into()).into());
        }
        if t.im != 0.0 {
            return Err(CmError::InvalidInput("--crosscheck-m1 needs a real --t".into()).into());
        }
        let qp = sample_qpoint(&mut case_rng(rec.seed, 1), 1, rec.n)?;
        let times: Vec<f64> = (1..=args.steps).map(|i| t.re * i as f64 / args.steps as f64).collect();
        let ode_steps = (ODE_STEPS_PER_UNIT * t.re.abs().max(1.0)).ceil() as usize;
        let rows = crosscheck_m1(&qp, &rec.coupling, &times, ode_steps, tol)?;
        let max_distance = rows.iter().map(|r| r.distance).fold(0.0, f64::max);
        eprintln!("m=1 cross-check max distance {max_distance:.3e} (tolerance {:.1e})", tol.crosscheck);
        passed &= max_distance <= tol.crosscheck;
        Some(Crosscheck {
            rows,
            max_distance,
            tolerance: tol.crosscheck,
        })
    } else {
        None
    };

    match args.format {
        Format::Json => {
            let report = EvolveReport {
                k: args.k,
                t,
                coupling: &rec.coupling,
                rows: &rows,
                hamiltonian_drift: drift,
                conservation_tolerance: tol.conservation_rel,
                crosscheck,
                passed,
            };
            write_output(args.out.as_deref(), &to_json(&report)?)?;
        }
        Format::Csv => {
            let mut buf = Vec::new();
            cyclic_cm::dynamics::write_series_csv(&rows, &mut buf)?;
            write_output(args.out.as_deref(), &buf)?;
        }
    }
    Ok(Outcome::from_pass(passed))
}
