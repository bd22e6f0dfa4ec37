//! Finite-difference Poisson brackets on spectral coordinates and checks of the
//! bracket relations and partial-derivative identities behind them.
//!
//! The bracket is
//! `{f, g} = m Σ_j (∂_{λ_j}f ∂_{φ_j}g − ∂_{φ_j}f ∂_{λ_j}g)
//!         + Σ_{i,α,j} (∂_{[w̃_i]_{αj}}f ∂_{[ṽ_i]_{jα}}g − ∂_{[ṽ_i]_{jα}}f ∂_{[w̃_i]_{αj}}g)`,
//! with all coordinates treated as independent.

use serde::{Deserialize, Serialize};

use crate::canonical::{e_term, f_spinless, f_term, ratio, theta_closed};
use crate::error::{CmError, Result};
use crate::kernel::CMatrix;
use crate::model::{Coupling, SpectralPoint, SpinFraming};
use crate::tolerances::Tolerances;
use crate::C64;

/// A point of phase space: spectral coordinates plus an optional framing.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub point: SpectralPoint,
    pub framing: Option<SpinFraming>,
}

/// One complex coordinate of a [`State`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    Lambda(usize),
    Phi(usize),
    /// `[ṽ_i]_{j,α}` as `(i, j, α)`.
    V(usize, usize, usize),
    /// `[w̃_i]_{α,j}` as `(i, α, j)`.
    W(usize, usize, usize),
}

type Eval = dyn Fn(&State) -> C64 + Send + Sync;

/// A labelled scalar function of the state.
pub struct PhaseFunction {
    pub label: String,
    f: Box<Eval>,
}

impl PhaseFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(&State) -> C64 + Send + Sync + 'static) -> Self {
        PhaseFunction {
            label: label.into(),
            f: Box::new(f),
        }
    }

    pub fn eval(&self, s: &State) -> C64 {
        (self.f)(s)
    }

    pub fn lambda(j: usize) -> Self {
        Self::new(format!("lambda_{j}"), move |s| s.point.lambda[j])
    }

    pub fn phi(j: usize) -> Self {
        Self::new(format!("phi_{j}"), move |s| s.point.phi[j])
    }

    pub fn theta(j: usize, coupling: Coupling) -> Self {
        Self::new(format!("theta_{j}"), move |s| {
            theta_closed(&s.point, &coupling, s.framing.as_ref())[j]
        })
    }
}

impl State {
    pub fn new(point: SpectralPoint, framing: Option<SpinFraming>) -> Self {
        State { point, framing }
    }

    pub fn get(&self, c: Coord) -> C64 {
        match c {
            Coord::Lambda(j) => self.point.lambda[j],
            Coord::Phi(j) => self.point.phi[j],
            Coord::V(i, j, a) => self.framing.as_ref().expect("framing").v[i][(j, a)],
            Coord::W(i, a, j) => self.framing.as_ref().expect("framing").w[i][(a, j)],
        }
    }

    pub fn shifted(&self, c: Coord, dz: C64) -> State {
        let mut s = self.clone();
        match c {
            Coord::Lambda(j) => s.point.lambda[j] += dz,
            Coord::Phi(j) => s.point.phi[j] += dz,
            Coord::V(i, j, a) => s.framing.as_mut().expect("framing").v[i][(j, a)] += dz,
            Coord::W(i, a, j) => s.framing.as_mut().expect("framing").w[i][(a, j)] += dz,
        }
        s
    }

    /// All coordinates, `λ` and `φ` first, then the framing entries.
    pub fn coords(&self) -> Vec<Coord> {
        let n = self.point.n;
        let mut out: Vec<Coord> = (0..n).map(Coord::Lambda).chain((0..n).map(Coord::Phi)).collect();
        if let Some(fr) = &self.framing {
            for i in 0..fr.m() {
                for j in 0..n {
                    for a in 0..fr.d {
                        out.push(Coord::V(i, j, a));
                        out.push(Coord::W(i, a, j));
                    }
                }
            }
        }
        out
    }
}

fn default_step(x: C64, rel: f64) -> f64 {
    rel * (1.0 + x.norm())
}

fn central(fp: C64, fm: C64, h: C64) -> Result<C64> {
    let d = (fp - fm) / (h * 2.0);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(CmError::EvaluationFailure("non-finite difference".into()))
    }
}

/// `(f(x+h) − f(x−h)) / 2h` along the real direction of `coord`.
pub fn fd_partial(f: &PhaseFunction, coord: Coord, state: &State, h: Option<f64>, tol: &Tolerances) -> Result<C64> {
    let h = h.unwrap_or_else(|| default_step(state.get(coord), tol.fd_step));
    let dz = C64::new(h, 0.0);
    central(f.eval(&state.shifted(coord, dz)), f.eval(&state.shifted(coord, -dz)), dz)
}

/// The same derivative taken along the imaginary direction (equal for holomorphic `f`).
pub fn fd_partial_imag(f: &PhaseFunction, coord: Coord, state: &State, h: Option<f64>, tol: &Tolerances) -> Result<C64> {
    let h = h.unwrap_or_else(|| default_step(state.get(coord), tol.fd_step));
    let dz = C64::new(0.0, h);
    central(f.eval(&state.shifted(coord, dz)), f.eval(&state.shifted(coord, -dz)), dz)
}

/// Partials of a vector-valued function along every coordinate: `out[c][k] = ∂F_k/∂c`.
pub fn jacobian(
    f: &dyn Fn(&State) -> Vec<C64>,
    state: &State,
    coords: &[Coord],
    tol: &Tolerances,
) -> Result<Vec<Vec<C64>>> {
    coords
        .iter()
        .map(|&c| {
            let dz = C64::new(default_step(state.get(c), tol.fd_step), 0.0);
            let fp = f(&state.shifted(c, dz));
            let fm = f(&state.shifted(c, -dz));
            fp.iter().zip(&fm).map(|(&a, &b)| central(a, b, dz)).collect()
        })
        .collect()
}

/// Bracket of two functions given their partials over `coords`.
pub fn bracket_from_partials(coords: &[Coord], m: usize, df: &[C64], dg: &[C64]) -> C64 {
    let find = |want: Coord| coords.iter().position(|&c| c == want);
    let mut s = C64::new(0.0, 0.0);
    for (a, &c) in coords.iter().enumerate() {
        match c {
            Coord::Lambda(j) => {
                if let Some(b) = find(Coord::Phi(j)) {
                    s += (df[a] * dg[b] - df[b] * dg[a]) * m as f64;
                }
            }
            Coord::W(i, al, j) => {
                if let Some(b) = find(Coord::V(i, j, al)) {
                    s += df[a] * dg[b] - df[b] * dg[a];
                }
            }
            _ => {}
        }
    }
    s
}

/// `{f, g}` at `state` by central differences.
pub fn bracket(f: &PhaseFunction, g: &PhaseFunction, state: &State, tol: &Tolerances) -> Result<C64> {
    let coords = state.coords();
    let df = coords
        .iter()
        .map(|&c| fd_partial(f, c, state, None, tol))
        .collect::<Result<Vec<_>>>()?;
    let dg = coords
        .iter()
        .map(|&c| fd_partial(g, c, state, None, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(bracket_from_partials(&coords, state.point.m, &df, &dg))
}

/// Residuals of `{λ_j, θ_k} = δ_{jk}` and `{θ_j, θ_k} = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyReport {
    pub lambda_theta: f64,
    pub theta_theta: f64,
    pub lambda_lambda: f64,
}

pub fn verify_conjugacy(state: &State, coupling: &Coupling, tol: &Tolerances) -> Result<ConjugacyReport> {
    let coords = state.coords();
    let n = state.point.n;
    let m = state.point.m;
    let k = coupling.clone();
    let theta = move |s: &State| theta_closed(&s.point, &k, s.framing.as_ref());
    let jt = jacobian(&theta, state, &coords, tol)?;
    let jl = jacobian(&|s: &State| s.point.lambda.clone(), state, &coords, tol)?;
    let col = |jac: &[Vec<C64>], k: usize| -> Vec<C64> { jac.iter().map(|row| row[k]).collect() };
    let mut report = ConjugacyReport {
        lambda_theta: 0.0,
        theta_theta: 0.0,
        lambda_lambda: 0.0,
    };
    for a in 0..n {
        for b in 0..n {
            let lt = bracket_from_partials(&coords, m, &col(&jl, a), &col(&jt, b));
            let delta = if a == b { 1.0 } else { 0.0 };
            report.lambda_theta = report.lambda_theta.max((lt - delta).norm());
            let tt = bracket_from_partials(&coords, m, &col(&jt, a), &col(&jt, b));
            report.theta_theta = report.theta_theta.max(tt.norm());
            let ll = bracket_from_partials(&coords, m, &col(&jl, a), &col(&jl, b));
            report.lambda_lambda = report.lambda_lambda.max(ll.norm());
        }
    }
    Ok(report)
}

/// `|a − b| / max(|b|, 1)`.
pub fn rel_err(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// Analytic `∂f_k/∂λ_j` (`j ≠ k`) of the spinless interaction term.
pub fn df_spinless_dlambda(point: &SpectralPoint, coupling: &Coupling, k: usize, j: usize) -> C64 {
    let m = point.m as u32;
    let (lj, lk) = (point.lambda[j], point.lambda[k]);
    coupling.abs_g() * (lj * lk).powu(m - 1) / (lk.powu(m) - lj.powu(m)).powu(2)
}

/// `B_i = c_{i−1} − (i/m)|g| + μ_i + Σ_s ((m−s)/m) μ_s` at particle `j`.
fn e_weight(point: &SpectralPoint, coupling: &Coupling, mus: &[CMatrix], i: usize, j: usize) -> C64 {
    let m = point.m;
    let shift: C64 = (0..m).map(|s| mus[s][(j, j)] * ((m - s) as f64 / m as f64)).sum();
    coupling.c_before(i) - coupling.abs_g() * (i as f64 / m as f64) + mus[i][(j, j)] + shift
}

/// Analytic `∂e_j/∂[w̃_i]_{αj}`.
pub fn de_dw(point: &SpectralPoint, coupling: &Coupling, fr: &SpinFraming, i: usize, al: usize, j: usize) -> C64 {
    let mus = fr.mus();
    let b = e_weight(point, coupling, &mus, i, j);
    fr.v[i][(j, al)] * b / (coupling.abs_g() * point.lambda[j] * point.m as f64)
}

/// Analytic `∂e_j/∂[ṽ_i]_{jα}`.
pub fn de_dv(point: &SpectralPoint, coupling: &Coupling, fr: &SpinFraming, i: usize, al: usize, j: usize) -> C64 {
    let mus = fr.mus();
    let b = e_weight(point, coupling, &mus, i, j);
    fr.w[i][(al, j)] * b / (coupling.abs_g() * point.lambda[j] * point.m as f64)
}

fn mu_at(mus: &[CMatrix], i: isize) -> &CMatrix {
    &mus[i.rem_euclid(mus.len() as isize) as usize]
}

/// Analytic `∂f_k/∂[w̃_i]_{αj}`; covers both `j ≠ k` and `j = k`.
pub fn df_dw(point: &SpectralPoint, coupling: &Coupling, fr: &SpinFraming, k: usize, i: usize, al: usize, j: usize) -> C64 {
    let m = point.m;
    let mus = fr.mus();
    let lam = &point.lambda;
    let pre = -C64::new(1.0, 0.0) / (coupling.abs_g() * m as f64);
    let ii = i as isize;
    if j != k {
        let s: C64 = (0..m)
            .map(|h| mu_at(&mus, ii - h as isize - 1)[(j, k)] * ratio(lam, m, j, k, h))
            .sum();
        pre * fr.v[i][(k, al)] * s
    } else {
        let mut s = C64::new(0.0, 0.0);
        for t in (0..point.n).filter(|&t| t != j) {
            let inner: C64 = (0..m)
                .map(|h| mu_at(&mus, ii + h as isize + 1)[(j, t)] * ratio(lam, m, t, j, h))
                .sum();
            s += fr.v[i][(t, al)] * inner;
        }
        pre * s
    }
}

/// Analytic `∂f_k/∂[ṽ_i]_{jα}`; covers both `j ≠ k` and `j = k`.
pub fn df_dv(point: &SpectralPoint, coupling: &Coupling, fr: &SpinFraming, k: usize, i: usize, j: usize, al: usize) -> C64 {
    let m = point.m;
    let mus = fr.mus();
    let lam = &point.lambda;
    let pre = -C64::new(1.0, 0.0) / (coupling.abs_g() * m as f64);
    let ii = i as isize;
    if j != k {
        let s: C64 = (0..m)
            .map(|h| mu_at(&mus, ii + h as isize + 1)[(k, j)] * ratio(lam, m, j, k, h))
            .sum();
        pre * fr.w[i][(al, k)] * s
    } else {
        let mut s = C64::new(0.0, 0.0);
        for t in (0..point.n).filter(|&t| t != j) {
            let inner: C64 = (0..m)
                .map(|h| mu_at(&mus, ii - h as isize - 1)[(t, j)] * ratio(lam, m, t, j, h))
                .sum();
            s += fr.w[i][(al, t)] * inner;
        }
        pre * s
    }
}

/// Worst relative errors of analytic partials against central differences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PartialReport {
    /// `max |∂f_j/∂λ_k − ∂f_k/∂λ_j|` (spinless).
    pub symmetry: Option<f64>,
    /// Analytic `∂f_k/∂λ_j` against differences (spinless).
    pub f_lambda: Option<f64>,
    pub e_w: Option<f64>,
    pub e_v: Option<f64>,
    pub f_w: Option<f64>,
    pub f_v: Option<f64>,
}

impl PartialReport {
    pub fn worst_analytic(&self) -> f64 {
        [self.f_lambda, self.e_w, self.e_v, self.f_w, self.f_v]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

fn fd_scalar(f: &dyn Fn(&State) -> C64, state: &State, c: Coord, tol: &Tolerances) -> Result<C64> {
    let dz = C64::new(default_step(state.get(c), tol.fd_step), 0.0);
    central(f(&state.shifted(c, dz)), f(&state.shifted(c, -dz)), dz)
}

pub fn verify_partial_identities(state: &State, coupling: &Coupling, tol: &Tolerances) -> Result<PartialReport> {
    let n = state.point.n;
    let mut rep = PartialReport::default();
    match &state.framing {
        None => {
            let mut sym: f64 = 0.0;
            let mut ana: f64 = 0.0;
            for k in 0..n {
                for j in 0..n {
                    if j == k {
                        continue;
                    }
                    let k2 = coupling.clone();
                    let fk = move |s: &State| f_spinless(&s.point, &k2, k);
                    let k3 = coupling.clone();
                    let fj = move |s: &State| f_spinless(&s.point, &k3, j);
                    let dfk_dj = fd_scalar(&fk, state, Coord::Lambda(j), tol)?;
                    let dfj_dk = fd_scalar(&fj, state, Coord::Lambda(k), tol)?;
                    sym = sym.max((dfk_dj - dfj_dk).norm());
                    ana = ana.max(rel_err(df_spinless_dlambda(&state.point, coupling, k, j), dfk_dj));
                }
            }
            rep.symmetry = Some(sym);
            rep.f_lambda = Some(ana);
        }
        Some(fr) => {
            let (mut ew, mut ev, mut fw, mut fv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            let pt = &state.point;
            for k in 0..n {
                let k2 = coupling.clone();
                let ek = move |s: &State| e_term(&s.point, &k2, s.framing.as_ref().expect("framing"), k);
                let k3 = coupling.clone();
                let fk = move |s: &State| f_term(&s.point, &k3, s.framing.as_ref().expect("framing"), k);
                for i in 0..pt.m {
                    for al in 0..fr.d {
                        let fd = fd_scalar(&ek, state, Coord::W(i, al, k), tol)?;
                        ew = ew.max(rel_err(de_dw(pt, coupling, fr, i, al, k), fd));
                        let fd = fd_scalar(&ek, state, Coord::V(i, k, al), tol)?;
                        ev = ev.max(rel_err(de_dv(pt, coupling, fr, i, al, k), fd));
                        for j in 0..n {
                            let fd = fd_scalar(&fk, state, Coord::W(i, al, j), tol)?;
                            fw = fw.max(rel_err(df_dw(pt, coupling, fr, k, i, al, j), fd));
                            let fd = fd_scalar(&fk, state, Coord::V(i, j, al), tol)?;
                            fv = fv.max(rel_err(df_dv(pt, coupling, fr, k, i, j, al), fd));
                        }
                    }
                }
            }
            rep.e_w = Some(ew);
            rep.e_v = Some(ev);
            rep.f_w = Some(fw);
            rep.f_v = Some(fv);
        }
    }
    Ok(rep)
}

/// Both sides of `∂_{λ_k}[λ_k^{m−h−1}λ_j^h/(λ_k^m − λ_j^m)] = ∂_{λ_j}[λ_j^{h+1}λ_k^{m−h−2}/(λ_j^m − λ_k^m)]`
/// by central differences; returns `|lhs − rhs|`.
pub fn cross_derivative_residual(lj: C64, lk: C64, m: usize, h: usize, tol: &Tolerances) -> f64 {
    let mi = m as i32;
    let hi = h as i32;
    let left = |a: C64| a.powi(mi - hi - 1) * lj.powi(hi) / (a.powi(mi) - lj.powi(mi));
    let right = |b: C64| b.powi(hi + 1) * lk.powi(mi - hi - 2) / (b.powi(mi) - lk.powi(mi));
    let hk = C64::new(default_step(lk, tol.fd_step), 0.0);
    let hj = C64::new(default_step(lj, tol.fd_step), 0.0);
    let lhs = (left(lk + hk) - left(lk - hk)) / (hk * 2.0);
    let rhs = (right(lj + hj) - right(lj - hj)) / (hj * 2.0);
    (lhs - rhs).norm()
}
