//! Randomized verification suites over seeded cases, and the JSON report.
//!
//! Every case draws from its own stream (`case_rng(seed, id)`), so a report is
//! a pure function of the configuration regardless of thread scheduling.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canonical::{canonicalize, orbit_distance, recover_spectral, theta_closed, RationalFn};
use crate::curves::{
    closed_curve, coefficient_distance, conjugates, equivariance_check, incidence_check,
    interpolated_curve, quotient_samples,
};
use crate::dynamics::{crosscheck_m1, evolve, h_spectral, h_trace, integrate_eom, FlowSpec};
use crate::error::{CmError, Result};
use crate::kernel::{inverse, CMatrix};
use crate::model::{
    build_dual, build_qmodel, case_rng, sample_coupling, sample_point, sample_qpoint, Convention,
    Coupling, SpectralPoint, SpinFraming,
};
use crate::poisson::{cross_derivative_residual, rel_err, verify_conjugacy, verify_partial_identities, State};
use crate::spectral::{
    a_closed, a_det, bundle, c_eval, d_eval, l_tilde, resolvent_closed, resolvent_lu,
    structure_residual,
};
use crate::tolerances::Tolerances;
use crate::C64;

/// One verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// `det(z − P)` against `∏(z^m − λ_j^m)`.
    Determinant,
    /// Closed-form resolvent of `L̃` against the identity and an LU solve.
    Resolvent,
    /// Moment-map residual of both builders, with a sign-flip negative control.
    Constraint,
    /// `r(λ_k) = φ_k`.
    Phi,
    /// `s(λ_k) = θ_k` and the finite-difference brackets.
    Theta,
    /// Partial-derivative identities behind the `θ` brackets.
    Partials,
    /// Invariance of `A`, `C`, `D` and of the recovered coordinates under conjugation.
    Gauge,
    /// `recover_spectral ∘ build_dual = canonicalize`.
    Roundtrip,
    /// Trace and spectral Hamiltonians, conservation, and the `m = 1` cross-check.
    Hamiltonians,
    /// Interpolation curves and their quotient samples.
    Curves,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Determinant,
        Suite::Resolvent,
        Suite::Constraint,
        Suite::Phi,
        Suite::Theta,
        Suite::Partials,
        Suite::Gauge,
        Suite::Roundtrip,
        Suite::Hamiltonians,
        Suite::Curves,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Determinant => "determinant",
            Suite::Resolvent => "resolvent",
            Suite::Constraint => "constraint",
            Suite::Phi => "phi",
            Suite::Theta => "theta",
            Suite::Partials => "partials",
            Suite::Gauge => "gauge",
            Suite::Roundtrip => "roundtrip",
            Suite::Hamiltonians => "hamiltonians",
            Suite::Curves => "curves",
        }
    }

    /// Acceptance criterion number (1–10).
    pub fn criterion(self) -> u8 {
        Suite::ALL.iter().position(|&s| s == self).expect("listed") as u8 + 1
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = CmError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
                CmError::InvalidInput(format!("unknown suite '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// What to run and how cases are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Cases for every suite except the bracket-based ones.
    pub cases: usize,
    /// Cases for the finite-difference bracket and partial-derivative checks.
    pub bracket_cases: usize,
    /// Random configurations for the `m = 1` projection-vs-ODE comparison.
    pub crosscheck_cases: usize,
    /// Fixed `m`, `n`, `d` (`d = 0` spinless); `None` draws per case.
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    /// Fixed coupling; requires a fixed `m`.
    pub coupling: Option<Coupling>,
    pub suites: Vec<Suite>,
    /// Replaces every dual quadruple by its `w ↦ −w` copy in the constraint suite.
    pub inject_sign_flip: bool,
    pub tolerances: Tolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            cases: 200,
            bracket_cases: 100,
            crosscheck_cases: 20,
            m: None,
            n: None,
            d: None,
            coupling: None,
            suites: Suite::ALL.to_vec(),
            inject_sign_flip: false,
            tolerances: Tolerances::default(),
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == Some(0) || self.n == Some(0) {
            return Err(CmError::InvalidInput("m and n must be at least 1".into()));
        }
        if let Some(k) = &self.coupling {
            match self.m {
                Some(m) if m == k.m() => {}
                _ => {
                    return Err(CmError::InvalidInput(
                        "an explicit coupling needs --m equal to its length".into(),
                    ))
                }
            }
            let reg = k.is_regular(self.tolerances.regular_eq);
            if !reg.regular {
                return Err(CmError::InvalidInput(format!("coupling is not regular: {}", reg.reason)));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON of the configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Inclusive ranges for the per-case draws.
#[derive(Debug, Clone, Copy)]
struct Ranges {
    m: (usize, usize),
    n: (usize, usize),
    d: (usize, usize),
}

const GENERAL: Ranges = Ranges {
    m: (1, 4),
    n: (1, 5),
    d: (0, 3),
};

const BRACKETS: Ranges = Ranges {
    m: (1, 3),
    n: (1, 4),
    d: (0, 2),
};

const BRACKET_STREAM: u64 = 0x5be0_cd19_137e_2179;
const CROSSCHECK_STREAM: u64 = 0x1f83_d9ab_fb41_bd6b;
const CROSS_STREAM: u64 = 0x9b05_688c_2b3e_6c1f;

/// A drawn test case.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub id: u64,
    pub coupling: Coupling,
    pub point: SpectralPoint,
    pub framing: Option<SpinFraming>,
}

impl Case {
    pub fn state(&self) -> State {
        State::new(self.point.clone(), self.framing.clone())
    }
}

fn pick(rng: &mut ChaCha8Rng, fixed: Option<usize>, range: (usize, usize)) -> usize {
    fixed.unwrap_or_else(|| rng.gen_range(range.0..=range.1))
}

fn draw_case(cfg: &VerifyConfig, seed: u64, id: u64, ranges: Ranges) -> Result<Case> {
    let mut rng = case_rng(seed, id);
    let m = pick(&mut rng, cfg.m, ranges.m);
    let n = pick(&mut rng, cfg.n, ranges.n);
    let d = pick(&mut rng, cfg.d, ranges.d);
    let coupling = match &cfg.coupling {
        Some(k) => k.clone(),
        None => sample_coupling(&mut rng, m, cfg.tolerances.regular_eq)?,
    };
    let (point, framing) = sample_point(&mut rng, m, n, &coupling, d)?;
    Ok(Case {
        id,
        coupling,
        point,
        framing,
    })
}

/// The `id`-th case of the general suites.
pub fn general_case(cfg: &VerifyConfig, id: u64) -> Result<Case> {
    draw_case(cfg, cfg.seed, id, GENERAL)
}

/// The `id`-th case of the bracket suites.
pub fn bracket_case(cfg: &VerifyConfig, id: u64) -> Result<Case> {
    draw_case(cfg, cfg.seed ^ BRACKET_STREAM, id, BRACKETS)
}

/// Whether a check bounds its residual from above or below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

/// Aggregate of one check over all cases of a suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub bound: Bound,
    pub tolerance: f64,
    /// Largest (`at_most`) or smallest (`at_least`) value seen; `None` if any
    /// value was not finite.
    pub worst: Option<f64>,
    pub samples: usize,
    pub passed: bool,
}

/// A case that raised an error instead of producing residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseError {
    pub case: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub criterion: u8,
    pub cases: usize,
    pub checks: Vec<CheckResult>,
    pub errors: usize,
    /// First few errors, in case order.
    pub error_samples: Vec<CaseError>,
    pub passed: bool,
}

impl SuiteReport {
    fn merge(mut self, other: SuiteReport) -> SuiteReport {
        self.cases += other.cases;
        self.checks.extend(other.checks);
        self.errors += other.errors;
        self.error_samples.extend(other.error_samples);
        self.error_samples.truncate(MAX_ERROR_SAMPLES);
        self.passed &= other.passed;
        self
    }

    /// `criterion N (<suite>): PASS|FAIL` followed by each check.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "criterion {} ({}): {}",
            self.criterion,
            self.suite,
            if self.passed { "PASS" } else { "FAIL" }
        );
        for c in &self.checks {
            let op = match c.bound {
                Bound::AtMost => "<=",
                Bound::AtLeast => ">=",
            };
            let worst = c.worst.map_or("non-finite".to_string(), |w| format!("{w:.3e}"));
            s.push_str(&format!(
                "\n    {:<20} {worst} {op} {:.1e} over {} [{}]",
                c.name,
                c.tolerance,
                c.samples,
                if c.passed { "ok" } else { "FAIL" }
            ));
        }
        if self.errors > 0 {
            s.push_str(&format!("\n    {} case error(s)", self.errors));
            for e in &self.error_samples {
                s.push_str(&format!("\n      case {}: {}", e.case, e.message));
            }
        }
        s
    }
}

/// Full verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tool: String,
    pub version: String,
    pub config_digest: String,
    pub config: VerifyConfig,
    pub convention: Convention,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn suite(&self, s: Suite) -> Option<&SuiteReport> {
        self.suites.iter().find(|r| r.suite == s)
    }
}

const MAX_ERROR_SAMPLES: usize = 10;

struct Spec {
    name: &'static str,
    bound: Bound,
    tol: f64,
}

fn at_most(name: &'static str, tol: f64) -> Spec {
    Spec {
        name,
        bound: Bound::AtMost,
        tol,
    }
}

fn at_least(name: &'static str, tol: f64) -> Spec {
    Spec {
        name,
        bound: Bound::AtLeast,
        tol,
    }
}

/// Per-case residuals, one list per check.
struct Sink(Vec<Vec<f64>>);

impl Sink {
    fn put(&mut self, check: usize, v: f64) {
        self.0[check].push(v);
    }
}

fn run_cases<F>(suite: Suite, specs: &[Spec], count: usize, f: F) -> SuiteReport
where
    F: Fn(u64, &mut Sink) -> Result<()> + Sync,
{
    let outcomes: Vec<(u64, Sink, Result<()>)> = (0..count as u64)
        .into_par_iter()
        .map(|id| {
            let mut sink = Sink(vec![Vec::new(); specs.len()]);
            let r = f(id, &mut sink);
            (id, sink, r)
        })
        .collect();

    let mut errors = 0;
    let mut error_samples = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); specs.len()];
    for (id, sink, r) in outcomes {
        if let Err(e) = r {
            errors += 1;
            if error_samples.len() < MAX_ERROR_SAMPLES {
                error_samples.push(CaseError {
                    case: id,
                    message: e.to_string(),
                });
            }
        }
        for (acc, v) in values.iter_mut().zip(sink.0) {
            acc.extend(v);
        }
    }

    let checks: Vec<CheckResult> = specs
        .iter()
        .zip(values)
        .map(|(spec, vals)| {
            let finite = vals.iter().all(|v| v.is_finite());
            let worst = if !finite {
                None
            } else {
                match spec.bound {
                    Bound::AtMost => vals.iter().copied().reduce(f64::max),
                    Bound::AtLeast => vals.iter().copied().reduce(f64::min),
                }
            };
            let passed = finite
                && worst.is_none_or(|w| match spec.bound {
                    Bound::AtMost => w <= spec.tol,
                    Bound::AtLeast => w >= spec.tol,
                });
            CheckResult {
                name: spec.name.to_string(),
                bound: spec.bound,
                tolerance: spec.tol,
                worst,
                samples: vals.len(),
                passed,
            }
        })
        .collect();
    let passed = errors == 0 && checks.iter().all(|c| c.passed);
    SuiteReport {
        suite,
        criterion: suite.criterion(),
        cases: count,
        checks,
        errors,
        error_samples,
        passed,
    }
}

/// Point in the annulus `lo ≤ |z| ≤ hi`.
fn random_z(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> C64 {
    C64::from_polar(rng.gen_range(lo..=hi), rng.gen_range(0.0..std::f64::consts::TAU))
}

/// `z` keeping `|z^m − λ_j^m| ≥ gap` for every `j`.
fn z_away_from_poles(rng: &mut ChaCha8Rng, point: &SpectralPoint, gap: f64) -> C64 {
    let lm = point.lambda_pow_m();
    loop {
        let z = random_z(rng, 0.2, 2.5);
        let zm = z.powu(point.m as u32);
        if lm.iter().all(|l| (zm - l).norm() >= gap) {
            return z;
        }
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |r, c| {
        let e = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if r == c {
            e + 1.5
        } else {
            e
        }
    })
}

/// Frobenius condition number, or infinity when `m` is numerically singular.
fn condition(m: &CMatrix, pivot_rel: f64) -> f64 {
    match inverse(m, pivot_rel) {
        Ok(inv) => m.norm_fro() * inv.norm_fro(),
        Err(_) => f64::INFINITY,
    }
}

const GAUGE_ATTEMPTS: usize = 200;

/// Random matrix with Frobenius condition number at most `max_cond`, either dense
/// or block diagonal with `blocks × blocks` blocks of size `size`.
fn random_gauge(
    rng: &mut ChaCha8Rng,
    blocks: usize,
    size: usize,
    dense: bool,
    max_cond: f64,
    pivot_rel: f64,
) -> Result<CMatrix> {
    let dim = blocks * size;
    for _ in 0..GAUGE_ATTEMPTS {
        let g = if dense {
            random_matrix(rng, dim)
        } else {
            let mut g = CMatrix::zeros(dim, dim);
            for b in 0..blocks {
                g.set_block(b, b, &random_matrix(rng, size));
            }
            g
        };
        if condition(&g, pivot_rel) <= max_cond {
            return Ok(g);
        }
    }
    Err(CmError::SamplingFailed {
        attempts: GAUGE_ATTEMPTS,
    })
}

fn suite_rng(cfg: &VerifyConfig, suite: Suite, id: u64) -> ChaCha8Rng {
    let salt = 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(suite.criterion() as u64);
    case_rng(cfg.seed ^ salt, id)
}

fn determinant_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = &cfg.tolerances;
    let specs = [at_most("det_vs_product", tol.det_rel)];
    run_cases(Suite::Determinant, &specs, cfg.cases, |id, out| {
        let case = general_case(cfg, id)?;
        let mut rng = suite_rng(cfg, Suite::Determinant, id);
        let quad = build_dual(&case.point, &case.coupling, case.framing.as_ref(), tol.distinct_rel)?;
        let m = case.point.m as i32;
        for _ in 0..10 {
            let z = random_z(&mut rng, 0.2, 2.5);
            let det = a_det(&quad, z, tol)?;
            let closed = a_closed(&case.point, z);
            let scale: f64 = case
                .point
                .lambda
                .iter()
                .map(|l| z.norm().powi(m) + l.norm().powi(m))
                .product();
            out.put(0, (det - closed).norm() / scale);
        }
        Ok(())
    })
}

fn resolvent_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = &cfg.tolerances;
    let specs = [
        at_most("resolvent_identity", tol.resolvent_identity),
        at_most("resolvent_vs_lu", tol.resolvent_lu),
    ];
    run_cases(Suite::Resolvent, &specs, cfg.cases, |id, out| {
        let case = general_case(cfg, id)?;
        let mut rng = suite_rng(cfg, Suite::Resolvent, id);
        let lt = l_tilde(&case.point);
        let dim = lt.rows();
        for _ in 0..5 {
            let z = z_away_from_poles(&mut rng, &case.point, 1e-3);
            let r = resolvent_closed(&case.point, z)?;
            let shifted = &CMatrix::identity(dim).scale(z) - &lt;
            let ident = &shifted.matmul(&r)? - &CMatrix::identity(dim);
            out.put(0, ident.norm_max());
            let lu = resolvent_lu(&case.point, z, tol)?;
            out.put(1, (&r - &lu).norm_max() / r.norm_max().max(1.0));
        }
        Ok(())
    })
}

fn constraint_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = &cfg.tolerances;
    let specs = [
        at_most("dual_moment", tol.constraint),
        at_most("qmodel_moment", tol.constraint),
        at_most("spin_framing", tol.constraint),
        at_most("convention_mismatch", 0.0),
        at_least("sign_flip_margin", 1.0),
    ];
    run_cases(Suite::Constraint, &specs, cfg.cases, |id, out| {
        let case = general_case(cfg, id)?;
        let mut rng = suite_rng(cfg, Suite::Constraint, id);
        let k = &case.coupling;
        let mut quad = build_dual(&case.point, k, case.framing.as_ref(), tol.distinct_rel)?;
        if cfg.inject_sign_flip {
            quad = quad.with_flipped_framing();
        }
        out.put(0, quad.moment_residual(k));
        let qp = sample_qpoint(&mut rng, case.point.m, case.point.n)?;
        let qq = build_qmodel(&qp, k, tol.distinct_rel)?;
        out.put(1, qq.moment_residual(k));
        if let Some(fr) = &case.framing {
            out.put(2, fr.constraint_residual(k.abs_g()));
        }
        for c in [quad.convention, qq.convention] {
            out.put(3, if c == Convention::ADOPTED { 0.0 } else { 1.0 });
        }
        let floor = k.abs_g().norm() * (case.point.n as f64).sqrt() / 2.0;
        out.put(4, quad.with_flipped_framing().moment_residual(k) / floor);
        Ok(())
    })
}

fn phi_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = &cfg.tolerances;
    let specs = [
        at_most("r_at_lambda", tol.phi_rel),
        at_most("d_structure", tol.structure_rel),
    ];
    run_cases(Suite::Phi, &specs, cfg.cases, |id, out| {
        let case = general_case(cfg, id)?;
        let b = bundle(&case.point, &case.coupling, case.framing.as_ref(), tol)?;
        if case.point.m >= 2 {
            out.put(1, structure_residual(&b.d, case.point.m));
        }
        let r = RationalFn::new(b.d, b.a_prime)?;
        for (l, phi) in case.point.lambda.iter().zip(&case.point.phi) {
            out.put(0, rel_err(r.eval(*l)?, *phi));
        }
        Ok(())
    })
}

fn theta_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = &cfg.tolerances;
    let specs = [at_most("s_at_lambda", tol.theta_rel)];
    let values = run_cases(Suite::Theta, &specs, cfg.cases, |id, out| {
        let case = general_case(cfg, id)?;
        let b = bundle(&case.point, &case.coupling, case.framing.as_ref(), tol)?;
        let s = RationalFn::new(b.c, b.a_prime.scale(case.coupling.abs_g()))?;
        let theta = theta_closed(&case.point, &case.coupling, case.framing.as_ref());
        for (l, t) in case.point.lambda.iter().zip(&theta) {
            out.put(0, rel_err(s.eval(*l)?, *t));
        }
        Ok(())
    });
    let specs = [
        at_most("lambda_theta", tol.bracket),
        at_most("theta_theta", tol.bracket),
        at_most("lambda_lambda", tol.bracket),
    ];
    let brackets = run_cases(Suite::Theta, &specs, cfg.bracket_cases, |id, out| {
        let case = bracket_case(cfg, id)?;
        let rep = verify_conjugacy(&case.state(), &case.coupling, tol)?;
        out.put(0, rep.lambda_theta);
        out.put(1, rep.theta_theta);
        out.put(2, rep.lambda_lambda);
        Ok(())
    });
    values.merge(brackets)
}

const CROSS_TRIPLES: usize = 20;

fn partials_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = &cfg.tolerances;
    let specs = [
        at_most("symmetry", tol.partial_symmetry),
        at_most("analytic_partials", tol.partial_rel),
    ];
    let fd = run_cases(Suite::Partials, &specs, cfg.bracket_cases, |id, out| {
        let case = bracket_case(cfg, id)?;
        let rep = verify_partial_identities(&case.state(), &case.coupling, tol)?;
        if let Some(s) = rep.symmetry {
            out.put(0, s);
        }
        if case.point.n > 1 || case.framing.is_some() {
            out.put(1, rep.worst_analytic());
        }
        Ok(())
    });
    let specs = [at_most("cross_derivative", tol.cross_derivative)];
    let key = run_cases(Suite::Partials, &specs, CROSS_TRIPLES, |id, out| {
        let mut rng = case_rng(cfg.seed ^ CROSS_STREAM, id);
        let m = rng.gen_range(1..=4usize);
        let h = rng.gen_range(0..m);
        loop {
            let lj = random_z(&mut rng, 0.5, 2.0);
            let lk = random_z(&mut rng, 0.5, 2.0);
            if (lj.powu(m as u32) - lk.powu(m as u32)).norm() >= 0.1 {
                out.put(0, cross_derivative_residual(lj, lk, m, h, tol));
                return Ok(());
            }
        }
    });
    SuiteReport {
        cases: fd.cases,
        ..fd.merge(key)
    }
}

fn gauge_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = &cfg.tolerances;
    let specs = [
        at_most("a_invariant", tol.gauge_fn_rel),
        at_most("c_invariant", tol.gauge_fn_rel),
        at_most("d_invariant", tol.gauge_fn_rel),
        at_most("recover_invariant", tol.gauge_recover),
    ];
    run_cases(Suite::Gauge, &specs, cfg.cases, |id, out| {
        let case = general_case(cfg, id)?;
        let mut rng = suite_rng(cfg, Suite::Gauge, id);
        let (m, n) = (case.point.m, case.point.n);
        let quad = build_dual(&case.point, &case.coupling, case.framing.as_ref(), tol.distinct_rel)?;
        let dense = random_gauge(&mut rng, m, n, true, 1e3, tol.pivot_rel)?;
        let moved = quad.gauge(&dense, tol.pivot_rel)?;
        for _ in 0..3 {
            let z = z_away_from_poles(&mut rng, &case.point, 1e-3);
            out.put(0, rel_err(a_det(&moved, z, tol)?, a_det(&quad, z, tol)?));
            out.put(1, rel_err(c_eval(&moved, z, tol)?, c_eval(&quad, z, tol)?));
            out.put(2, rel_err(d_eval(&moved, z, tol)?, d_eval(&quad, z, tol)?));
        }
        let blocks = random_gauge(&mut rng, m, n, false, 1e3, tol.pivot_rel)?;
        let moved = quad.gauge(&blocks, tol.pivot_rel)?;
        let before = recover_spectral(&quad, &case.coupling, tol)?;
        let after = recover_spectral(&moved, &case.coupling, tol)?;
        out.put(3, orbit_distance(&before.point, &after.point));
        Ok(())
    })
}

fn roundtrip_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = &cfg.tolerances;
    let specs = [at_most("recover_vs_canonical", tol.roundtrip)];
    run_cases(Suite::Roundtrip, &specs, cfg.cases, |id, out| {
        let case = general_case(cfg, id)?;
        let quad = build_dual(&case.point, &case.coupling, None, tol.distinct_rel)?;
        let rec = recover_spectral(&quad, &case.coupling, tol)?;
        let canon = canonicalize(&case.point, None);
        out.put(0, orbit_distance(&rec.point, &canon.point));
        Ok(())
    })
}

const CROSSCHECK_TIMES: [f64; 3] = [0.1, 0.5, 1.0];
const CROSSCHECK_STEPS: usize = 4000;
const CROSSCHECK_REDRAWS: usize = 20;

fn hamiltonians_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = &cfg.tolerances;
    let specs = [
        at_most("trace_vs_spectral", tol.hamiltonian_rel),
        at_most("conservation", tol.conservation_rel),
    ];
    let values = run_cases(Suite::Hamiltonians, &specs, cfg.cases, |id, out| {
        let case = general_case(cfg, id)?;
        let mut rng = suite_rng(cfg, Suite::Hamiltonians, id);
        let m = case.point.m;
        let scale = |k: usize| -> f64 {
            let s: f64 = case.point.lambda.iter().map(|l| l.norm().powi((m * k) as i32)).sum();
            (s / k as f64).max(1.0)
        };
        let quad = build_dual(&case.point, &case.coupling, case.framing.as_ref(), tol.distinct_rel)?;
        for k in 1..=3 {
            out.put(0, (h_trace(&quad, k) - h_spectral(&case.point, k)).norm() / scale(k));
        }
        let flow_k = rng.gen_range(1..=3usize);
        let t = random_z(&mut rng, 0.0, 1.0);
        let flow = FlowSpec::new(flow_k, t, 1)?;
        let (pt, fr) = evolve(&case.point, case.framing.as_ref(), &flow);
        let moved = build_dual(&pt, &case.coupling, fr.as_ref(), tol.distinct_rel)?;
        for k in 1..=3 {
            out.put(1, (h_trace(&moved, k) - h_spectral(&case.point, k)).norm() / scale(k));
        }
        Ok(())
    });
    let specs = [
        at_most("m1_crosscheck", tol.crosscheck),
        at_most("ode_conservation", tol.conservation_rel),
    ];
    let cross = run_cases(Suite::Hamiltonians, &specs, cfg.crosscheck_cases, |id, out| {
        let mut rng = case_rng(cfg.seed ^ CROSSCHECK_STREAM, id);
        let n = match cfg.n {
            Some(n) if n <= 3 => n,
            _ => rng.gen_range(1..=3usize),
        };
        let coupling = match &cfg.coupling {
            Some(k) if k.m() == 1 => k.clone(),
            _ => sample_coupling(&mut rng, 1, tol.regular_eq)?,
        };
        let mut last = None;
        for _ in 0..CROSSCHECK_REDRAWS {
            let qp = sample_qpoint(&mut rng, 1, n)?;
            match crosscheck_m1(&qp, &coupling, &CROSSCHECK_TIMES, CROSSCHECK_STEPS, tol) {
                Ok(rows) => {
                    for r in rows {
                        out.put(0, r.distance);
                    }
                    let g0 = coupling.g()[0];
                    let t = C64::new(CROSSCHECK_TIMES[2], 0.0);
                    let end = integrate_eom(&qp, -g0 * g0, t, CROSSCHECK_STEPS, tol.collision_gap)?;
                    let q0 = build_qmodel(&qp, &coupling, tol.distinct_rel)?;
                    let q1 = build_qmodel(&end, &coupling, tol.distinct_rel)?;
                    for k in 1..=3 {
                        let h0 = h_trace(&q0, k);
                        out.put(1, (h_trace(&q1, k) - h0).norm() / h0.norm().max(1.0));
                    }
                    return Ok(());
                }
                Err(e @ CmError::CollisionDetected { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one draw"))
    });
    SuiteReport {
        cases: values.cases,
        ..values.merge(cross)
    }
}

const QUOTIENT_POINTS: usize = 6;

fn curves_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = &cfg.tolerances;
    let specs = [
        at_most("divisibility", tol.divisibility_rel),
        at_most("degree_q", 0.0),
        at_most("two_route", tol.two_route),
        at_most("incidence", tol.incidence),
        at_most("equivariance", tol.equivariance),
        at_most("quotient_curve", tol.quotient_curve),
        at_most("quotient_surface", tol.quotient_surface),
        at_most("quotient_at_lambda", tol.incidence),
    ];
    let mut lenient = tol.clone();
    lenient.divisibility_rel = f64::INFINITY;
    run_cases(Suite::Curves, &specs, cfg.cases, |id, out| {
        let case = general_case(cfg, id)?;
        let mut rng = suite_rng(cfg, Suite::Curves, id);
        let (pt, fr, k) = (&case.point, case.framing.as_ref(), &case.coupling);
        for delta in [1u8, 2] {
            let interp = interpolated_curve(pt, k, fr, delta, &lenient)?;
            out.put(0, interp.divisibility);
            let deg = interp.curve.q.degree().map_or(f64::INFINITY, |d| d as f64);
            out.put(1, (deg - (pt.n as f64 - 1.0)).abs());
            let closed = closed_curve(pt, k, fr, delta)?;
            out.put(2, coefficient_distance(&closed, &interp.curve));
            let y = conjugates(pt, k, fr, delta)?;
            out.put(3, incidence_check(&interp.curve, pt, &y));
            out.put(4, equivariance_check(pt, k, fr, delta, &lenient)?);

            let mut zs: Vec<C64> = (0..QUOTIENT_POINTS).map(|_| random_z(&mut rng, 0.2, 2.5)).collect();
            zs.extend(pt.lambda.iter().copied());
            let (samples, _) = quotient_samples(&closed, &zs);
            for s in &samples {
                out.put(5, s.curve_residual(&closed));
                out.put(6, s.surface_residual(pt.m));
            }
            for s in samples.iter().filter(|s| pt.lambda.contains(&s.z)) {
                let j = pt.lambda.iter().position(|l| *l == s.z).expect("node");
                out.put(7, rel_err(s.c, pt.lambda[j] * y[j]));
            }
        }
        Ok(())
    })
}

/// Runs one suite.
pub fn run_suite(cfg: &VerifyConfig, suite: Suite) -> SuiteReport {
    match suite {
        Suite::Determinant => determinant_suite(cfg),
        Suite::Resolvent => resolvent_suite(cfg),
        Suite::Constraint => constraint_suite(cfg),
        Suite::Phi => phi_suite(cfg),
        Suite::Theta => theta_suite(cfg),
        Suite::Partials => partials_suite(cfg),
        Suite::Gauge => gauge_suite(cfg),
        Suite::Roundtrip => roundtrip_suite(cfg),
        Suite::Hamiltonians => hamiltonians_suite(cfg),
        Suite::Curves => curves_suite(cfg),
    }
}

/// Runs the configured suites in criterion order.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let mut suites = cfg.suites.clone();
    suites.sort();
    suites.dedup();
    let reports: Vec<SuiteReport> = suites.iter().map(|&s| run_suite(cfg, s)).collect();
    let passed = reports.iter().all(|r| r.passed);
    Ok(VerifyReport {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_digest: cfg.digest(),
        config: cfg.clone(),
        convention: Convention::ADOPTED,
        suites: reports,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(suite: Suite) -> VerifyConfig {
        VerifyConfig {
            seed: 4,
            cases: 12,
            bracket_cases: 6,
            crosscheck_cases: 2,
            suites: vec![suite],
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn suite_names_roundtrip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
        assert_eq!(Suite::Curves.criterion(), 10);
    }

    #[test]
    fn every_suite_passes_on_a_small_run() {
        for s in Suite::ALL {
            let rep = run_verify(&small(s)).unwrap();
            assert!(rep.passed, "{}", rep.suites[0].summary());
        }
    }

    #[test]
    fn sign_flip_fails_constraint() {
        let mut cfg = small(Suite::Constraint);
        cfg.inject_sign_flip = true;
        let rep = run_verify(&cfg).unwrap();
        assert!(!rep.passed);
        let dual = &rep.suites[0].checks[0];
        assert_eq!(dual.name, "dual_moment");
        assert!(!dual.passed);
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = small(Suite::Curves);
        let a = serde_json::to_string(&run_verify(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_verify(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn digest_tracks_config() {
        let a = VerifyConfig::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.tolerances.bracket = 1e-4;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn explicit_coupling_needs_matching_m() {
        let k = Coupling::from_real(&[1.0, 0.5]).unwrap();
        let cfg = VerifyConfig {
            coupling: Some(k.clone()),
            ..VerifyConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = VerifyConfig {
            coupling: Some(k),
            m: Some(2),
            ..VerifyConfig::default()
        };
        assert!(cfg.validate().is_ok());
    }
}
