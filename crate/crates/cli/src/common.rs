use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use cyclic_cm::model::{build_dual, case_rng, sample_coupling, sample_point};
use cyclic_cm::{CmError, Coupling, Quadruple, SpectralPoint, SpinFraming, Tolerances, C64};
use serde::{Deserialize, Serialize};

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn from_pass(passed: bool) -> Self {
        if passed {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// 2 for configuration, input and I/O problems; 1 for numerical failures.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<CmError>() {
        Some(
            CmError::InvalidInput(_)
            | CmError::Dimension(_)
            | CmError::ZeroCoupling
            | CmError::SamplingFailed { .. },
        )
        | None => 2,
        Some(_) => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Where a point comes from: a file written by `gen`, or a seeded draw.
#[derive(Args, Debug, Clone, Default)]
pub struct PointArgs {
    /// Number of quiver vertices (defaults to the length of --g, else 2).
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of particles.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Spin dimension; 0 is the spinless case.
    #[arg(long, default_value_t = 0)]
    pub d: usize,
    /// Vertex couplings as "re,im;re,im;…" (a bare real part is allowed).
    /// Drawn at random when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<String>,
    #[arg(long, env = "CYCLIC_CM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Read the point from a JSON file written by `gen` instead of sampling.
    #[arg(long, conflicts_with_all = ["m", "g"])]
    pub input: Option<PathBuf>,
}

/// Everything `gen` writes; also accepted back as `--input`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub coupling: Coupling,
    pub point: SpectralPoint,
    pub framing: Option<SpinFraming>,
    pub quadruple: Quadruple,
}

pub fn parse_complex(s: &str) -> anyhow::Result<C64> {
    let s = s.trim();
    let (re, im) = match s.split_once(',') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "0"),
    };
    let re: f64 = re.parse().with_context(|| format!("'{re}' is not a number"))?;
    let im: f64 = im.parse().with_context(|| format!("'{im}' is not a number"))?;
    Ok(C64::new(re, im))
}

pub fn parse_coupling(s: &str) -> anyhow::Result<Vec<C64>> {
    let g = s
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(parse_complex)
        .collect::<anyhow::Result<Vec<_>>>()
        .with_context(|| format!("cannot parse coupling '{s}'"))?;
    if g.is_empty() {
        bail!("coupling '{s}' is empty");
    }
    Ok(g)
}

/// Explicit coupling if given (checked for regularity), else `None`.
pub fn explicit_coupling(g: Option<&str>, m: Option<usize>, tol: &Tolerances) -> anyhow::Result<Option<Coupling>> {
    let Some(g) = g else {
        return Ok(None);
    };
    let g = parse_coupling(g)?;
    if let Some(m) = m {
        if m != g.len() {
            return Err(CmError::InvalidInput(format!("--m {m} but --g has {} entries", g.len())).into());
        }
    }
    let k = Coupling::new(g)?;
    let reg = k.is_regular(tol.regular_eq);
    if !reg.regular {
        return Err(CmError::InvalidInput(format!("coupling is not regular: {}", reg.reason)).into());
    }
    Ok(Some(k))
}

pub fn sample_record(args: &PointArgs, tol: &Tolerances) -> anyhow::Result<PointRecord> {
    if args.n == 0 {
        return Err(CmError::InvalidInput("--n must be at least 1".into()).into());
    }
    let explicit = explicit_coupling(args.g.as_deref(), args.m, tol)?;
    let m = explicit.as_ref().map(Coupling::m).or(args.m).unwrap_or(2);
    if m == 0 {
        return Err(CmError::InvalidInput("--m must be at least 1".into()).into());
    }
    let mut rng = case_rng(args.seed, 0);
    let coupling = match explicit {
        Some(k) => k,
        None => sample_coupling(&mut rng, m, tol.regular_eq)?,
    };
    let (point, framing) = sample_point(&mut rng, m, args.n, &coupling, args.d)?;
    let quadruple = build_dual(&point, &coupling, framing.as_ref(), tol.distinct_rel)?;
    Ok(PointRecord {
        seed: args.seed,
        m,
        n: args.n,
        d: args.d,
        coupling,
        point,
        framing,
        quadruple,
    })
}

pub fn load_or_sample(args: &PointArgs, tol: &Tolerances) -> anyhow::Result<PointRecord> {
    match &args.input {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let rec: PointRecord =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            rec.point.validate(tol.distinct_rel)?;
            Ok(rec)
        }
        None => sample_record(args, tol),
    }
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}
