use std::path::PathBuf;

use clap::Args;
use cyclic_cm::curves::{
    closed_curve, coefficient_distance, conjugates, incidence_check, interpolated_curve, quotient_samples,
    write_samples_csv,
};
use cyclic_cm::{CmError, CurvePolys, QuotientSample, Tolerances, C64};
use serde::Serialize;

use crate::common::{load_or_sample, parse_coupling, to_json, write_output, Format, Outcome, PointArgs};

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// 1: the curve through (λ_k, φ_k); 2: through (λ_k, θ_k).
    #[arg(long, default_value_t = 1)]
    pub delta: u8,
    /// Number of sample points on the circle |z| = 1.1 × (geometric mean of |λ|).
    #[arg(long, default_value_t = 32)]
    pub samples: usize,
    /// Explicit sample points "re,im;…" (replaces the circle).
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// JSON output selects the curve report; CSV writes the quotient samples.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the quotient samples as CSV to this file.
    #[arg(long)]
    pub samples_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Check {
    value: f64,
    tolerance: f64,
    passed: bool,
}

impl Check {
    fn new(value: f64, tolerance: f64) -> Self {
        Check {
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Serialize)]
struct CurveReport<'a> {
    curve: &'a CurvePolys,
    divisibility: Check,
    two_route: Check,
    incidence: Check,
    quotient_curve: Check,
    quotient_surface: Check,
    skipped_poles: usize,
    samples: &'a [QuotientSample],
    passed: bool,
}

fn circle(lambda: &[C64], count: usize) -> Vec<C64> {
    let mean_log = lambda.iter().map(|l| l.norm().ln()).sum::<f64>() / lambda.len() as f64;
    let r = 1.1 * mean_log.exp();
    (0..count)
        .map(|k| C64::from_polar(r, std::f64::consts::TAU * (k as f64 + 0.25) / count as f64))
        .collect()
}

pub fn run(args: &CurveArgs, tol: &Tolerances) -> anyhow::Result<Outcome> {
    if args.delta != 1 && args.delta != 2 {
        return Err(CmError::InvalidInput(format!("--delta must be 1 or 2, got {}", args.delta)).into());
    }
    let rec = load_or_sample(&args.point, tol)?;
    let (pt, fr, k) = (&rec.point, rec.framing.as_ref(), &rec.coupling);

    let curve = closed_curve(pt, k, fr, args.delta)?;
    let mut lenient = tol.clone();
    lenient.divisibility_rel = f64::INFINITY;
    let interp = interpolated_curve(pt, k, fr, args.delta, &lenient)?;
    let y = conjugates(pt, k, fr, args.delta)?;

    let zs = match &args.z {
        Some(s) => parse_coupling(s)?,
        None => circle(&pt.lambda, args.samples),
    };
    let (samples, skipped) = quotient_samples(&curve, &zs);
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} pole(s) of the curve");
    }
    let worst = |f: &dyn Fn(&QuotientSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);

    let divisibility = Check::new(interp.divisibility, tol.divisibility_rel);
    let two_route = Check::new(coefficient_distance(&curve, &interp.curve), tol.two_route);
    let incidence = Check::new(incidence_check(&curve, pt, &y), tol.incidence);
    let quotient_curve = Check::new(worst(&|s| s.curve_residual(&curve)), tol.quotient_curve);
    let quotient_surface = Check::new(worst(&|s| s.surface_residual(curve.m)), tol.quotient_surface);
    let passed = [&divisibility, &two_route, &incidence, &quotient_curve, &quotient_surface]
        .iter()
        .all(|c| c.passed);
    eprintln!(
        "incidence {:.3e}, two-route {:.3e}, divisibility {:.3e}, {} sample(s)",
        incidence.value,
        two_route.value,
        divisibility.value,
        samples.len()
    );

    let mut csv = Vec::new();
    write_samples_csv(&samples, &mut csv)?;
    if let Some(p) = &args.samples_out {
        write_output(Some(p), &csv)?;
    }
    match args.format {
        Format::Json => {
            let report = CurveReport {
                curve: &curve,
                divisibility,
                two_route,
                incidence,
                quotient_curve,
                quotient_surface,
                skipped_poles: skipped,
                samples: &samples,
                passed,
            };
            write_output(args.out.as_deref(), &to_json(&report)?)?;
        }
        Format::Csv => write_output(args.out.as_deref(), &csv)?,
    }
    Ok(Outcome::from_pass(passed))
}
