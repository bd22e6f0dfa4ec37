use std::path::PathBuf;

use clap::Args;
use cyclic_cm::Tolerances;

use crate::common::{sample_record, to_json, write_output, Outcome, PointArgs};

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &GenArgs, tol: &Tolerances) -> anyhow::Result<Outcome> {
    if args.point.input.is_some() {
        anyhow::bail!("gen samples a new point; --input is not accepted");
    }
    let rec = sample_record(&args.point, tol)?;
    let residual = rec.quadruple.moment_residual(&rec.coupling);
    let spin = rec
        .framing
        .as_ref()
        .map_or(0.0, |f| f.constraint_residual(rec.coupling.abs_g()));
    write_output(args.out.as_deref(), &to_json(&rec)?)?;
    eprintln!("moment-map residual {residual:.3e}, spin constraint residual {spin:.3e}");
    Ok(Outcome::from_pass(residual <= tol.constraint && spin <= tol.constraint))
}
