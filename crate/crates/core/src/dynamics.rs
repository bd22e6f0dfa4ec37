//! Hamiltonians, their exact flows in spectral coordinates, projection to
//! particle positions, and a direct integrator for the single-vertex system.

use std::io;

use serde::{Deserialize, Serialize};

use crate::canonical::recover_spectral;
use crate::error::{CmError, Result};
use crate::kernel::{eigenvalues, CMatrix};
use crate::model::{build_dual, build_qmodel, Coupling, QModelPoint, Quadruple, SpectralPoint, SpinFraming};
use crate::tolerances::Tolerances;
use crate::C64;

/// Which Hamiltonian `H_K` to flow, for how long, and how finely for the ODE route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub k: usize,
    #[serde(with = "crate::serde_cx::scalar")]
    pub t: C64,
    pub steps: usize,
}

impl FlowSpec {
    pub fn new(k: usize, t: C64, steps: usize) -> Result<Self> {
        if k == 0 || steps == 0 {
            return Err(CmError::InvalidInput("K and steps must be positive".into()));
        }
        Ok(FlowSpec { k, t, steps })
    }
}

/// `tr(P^{mK}) / (mK)`.
pub fn h_trace(quad: &Quadruple, k: usize) -> C64 {
    let e = quad.m * k;
    let mut acc = CMatrix::identity(quad.dim());
    for _ in 0..e {
        acc = &acc * &quad.p;
    }
    acc.trace() / e as f64
}

/// `(1/K) Σ_j λ_j^{mK}`.
pub fn h_spectral(point: &SpectralPoint, k: usize) -> C64 {
    let e = (point.m * k) as u32;
    point.lambda.iter().map(|l| l.powu(e)).sum::<C64>() / k as f64
}

/// Exact flow of `H_K`: `λ` fixed, `φ_j ↦ φ_j + m² λ_j^{mK−1} t`; the framing is unchanged.
pub fn evolve(
    point: &SpectralPoint,
    framing: Option<&SpinFraming>,
    flow: &FlowSpec,
) -> (SpectralPoint, Option<SpinFraming>) {
    let m = point.m;
    let e = (m * flow.k - 1) as u32;
    let mut p = point.clone();
    for (phi, lam) in p.phi.iter_mut().zip(&point.lambda) {
        *phi += lam.powu(e) * flow.t * (m * m) as f64;
    }
    (p, framing.cloned())
}

/// `X_{m−1} ⋯ X_0` restricted to `V_0`.
pub fn x_product(quad: &Quadruple) -> CMatrix {
    let mut acc = CMatrix::identity(quad.n);
    for i in 0..quad.m {
        acc = &quad.x_block(i) * &acc;
    }
    acc
}

/// Eigenvalues of `X_{m−1} ⋯ X_0` on `V_0`, i.e. the `q_j^m`.
pub fn positions_of(quad: &Quadruple, tol: &Tolerances) -> Result<Vec<C64>> {
    let ev = eigenvalues(&x_product(quad), tol.root_rel, tol.root_max_iter, tol.pivot_rel)?;
    let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    for j in 0..ev.len() {
        for k in j + 1..ev.len() {
            if (ev[j] - ev[k]).norm() <= tol.spectrum_gap * scale {
                return Err(CmError::DegenerateSpectrum(format!("positions {j} and {k} coincide")));
            }
        }
    }
    Ok(ev)
}

/// Positions `q_j^m` of the particles at a spectral point.
pub fn positions(
    point: &SpectralPoint,
    coupling: &Coupling,
    framing: Option<&SpinFraming>,
    tol: &Tolerances,
) -> Result<Vec<C64>> {
    positions_of(&build_dual(point, coupling, framing, tol.distinct_rel)?, tol)
}

/// `Σ p_j²/2 + Σ_{j<k} γ/(q_j − q_k)²`.
pub fn energy(qp: &QModelPoint, gamma: C64) -> C64 {
    let kinetic: C64 = qp.p.iter().map(|p| p * p / 2.0).sum();
    let mut pot = C64::new(0.0, 0.0);
    for j in 0..qp.n {
        for k in j + 1..qp.n {
            let d = qp.q[j] - qp.q[k];
            pot += gamma / (d * d);
        }
    }
    kinetic + pot
}

fn rhs(q: &[C64], p: &[C64], gamma: C64) -> (Vec<C64>, Vec<C64>) {
    let n = q.len();
    let dp = (0..n)
        .map(|j| {
            (0..n)
                .filter(|&k| k != j)
                .map(|k| {
                    let d = q[j] - q[k];
                    gamma * 2.0 / (d * d * d)
                })
                .sum()
        })
        .collect();
    (p.to_vec(), dp)
}

fn min_gap(q: &[C64]) -> f64 {
    let mut g = f64::INFINITY;
    for j in 0..q.len() {
        for k in j + 1..q.len() {
            g = g.min((q[j] - q[k]).norm());
        }
    }
    g
}

fn axpy(x: &[C64], a: C64, y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(&xi, &yi)| xi + a * yi).collect()
}

/// Fixed-step RK4 for `q̇ = p`, `ṗ_j = 2γ Σ_{k≠j} (q_j − q_k)⁻³` over `[0, t]`.
pub fn integrate_eom(qp: &QModelPoint, gamma: C64, t: C64, steps: usize, collision_gap: f64) -> Result<QModelPoint> {
    if qp.m != 1 {
        return Err(CmError::InvalidInput("the particle equations need m = 1".into()));
    }
    if steps == 0 {
        return Err(CmError::InvalidInput("steps must be positive".into()));
    }
    let dt = t / steps as f64;
    let mut q = qp.q.clone();
    let mut p = qp.p.clone();
    for step in 0..steps {
        let (k1q, k1p) = rhs(&q, &p, gamma);
        let (k2q, k2p) = rhs(&axpy(&q, dt / 2.0, &k1q), &axpy(&p, dt / 2.0, &k1p), gamma);
        let (k3q, k3p) = rhs(&axpy(&q, dt / 2.0, &k2q), &axpy(&p, dt / 2.0, &k2p), gamma);
        let (k4q, k4p) = rhs(&axpy(&q, dt, &k3q), &axpy(&p, dt, &k3p), gamma);
        for j in 0..q.len() {
            q[j] += dt / 6.0 * (k1q[j] + k2q[j] * 2.0 + k3q[j] * 2.0 + k4q[j]);
            p[j] += dt / 6.0 * (k1p[j] + k2p[j] * 2.0 + k3p[j] * 2.0 + k4p[j]);
        }
        let gap = min_gap(&q);
        if gap < collision_gap || q.iter().any(|z| !z.is_finite()) {
            return Err(CmError::CollisionDetected {
                time: ((step + 1) as f64 / steps as f64) * t.norm(),
                gap,
            });
        }
    }
    QModelPoint::new(1, p, q)
}

/// Largest distance between two multisets of equal size under the best pairing.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let n = a.len();
    if n <= 8 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        search(&mut perm, 0, a, b, &mut best);
        best
    } else {
        let mut used = vec![false; n];
        let mut worst: f64 = 0.0;
        for &x in a {
            let (k, d) = (0..n)
                .filter(|&k| !used[k])
                .map(|k| (k, (x - b[k]).norm()))
                .min_by(|u, v| u.1.partial_cmp(&v.1).unwrap_or(std::cmp::Ordering::Equal))
                .expect("unused index");
            used[k] = true;
            worst = worst.max(d);
        }
        worst
    }
}

fn search(perm: &mut Vec<usize>, at: usize, a: &[C64], b: &[C64], best: &mut f64) {
    let n = perm.len();
    if at == n {
        let v = (0..n).map(|j| (a[j] - b[perm[j]]).norm()).fold(0.0, f64::max);
        *best = best.min(v);
        return;
    }
    for i in at..n {
        perm.swap(at, i);
        let partial = (0..=at).map(|j| (a[j] - b[perm[j]]).norm()).fold(0.0, f64::max);
        if partial < *best {
            search(perm, at + 1, a, b, best);
        }
        perm.swap(at, i);
    }
}

/// Number of trace Hamiltonians `H_1..H_3` tracked along a flow.
pub const TRACKED_HAMILTONIANS: usize = 3;

/// State of a flow at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    #[serde(with = "crate::serde_cx::scalar")]
    pub t: C64,
    #[serde(with = "crate::serde_cx::vec")]
    pub lambda: Vec<C64>,
    #[serde(with = "crate::serde_cx::vec")]
    pub phi: Vec<C64>,
    /// `q_j^m`, sorted by real then imaginary part.
    #[serde(with = "crate::serde_cx::vec")]
    pub positions: Vec<C64>,
    /// `H_1, H_2, H_3` read off the matrices.
    #[serde(with = "crate::serde_cx::vec")]
    pub hamiltonians: Vec<C64>,
}

/// `rows + 1` equally spaced samples of the flow of `H_K` on `[0, t]`.
pub fn evolve_series(
    point: &SpectralPoint,
    coupling: &Coupling,
    framing: Option<&SpinFraming>,
    k: usize,
    t: C64,
    rows: usize,
    tol: &Tolerances,
) -> Result<Vec<SeriesRow>> {
    let rows = rows.max(1);
    (0..=rows)
        .map(|i| {
            let ti = t * (i as f64 / rows as f64);
            let flow = FlowSpec::new(k, ti, rows)?;
            let (pt, fr) = evolve(point, framing, &flow);
            let quad = build_dual(&pt, coupling, fr.as_ref(), tol.distinct_rel)?;
            let mut positions = positions_of(&quad, tol)?;
            positions.sort_by(|a, b| {
                (a.re, a.im)
                    .partial_cmp(&(b.re, b.im))
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            let hamiltonians = (1..=TRACKED_HAMILTONIANS).map(|kk| h_trace(&quad, kk)).collect();
            Ok(SeriesRow {
                t: ti,
                lambda: pt.lambda,
                phi: pt.phi,
                positions,
                hamiltonians,
            })
        })
        .collect()
}

/// Largest relative change of any tracked Hamiltonian from the first row.
pub fn hamiltonian_drift(rows: &[SeriesRow]) -> f64 {
    let Some(first) = rows.first() else {
        return 0.0;
    };
    rows.iter()
        .flat_map(|r| {
            r.hamiltonians
                .iter()
                .zip(&first.hamiltonians)
                .map(|(h, h0)| (h - h0).norm() / h0.norm().max(1.0))
        })
        .fold(0.0, f64::max)
}

/// Writes `t`, `φ_j`, `x_j = q_j^m` and `H_K` as real/imaginary column pairs.
pub fn write_series_csv<W: io::Write>(rows: &[SeriesRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = rows.first().map_or(0, |r| r.phi.len());
    let mut header = vec!["t_re".to_string(), "t_im".to_string()];
    for j in 0..n {
        header.push(format!("phi{j}_re"));
        header.push(format!("phi{j}_im"));
    }
    for j in 0..n {
        header.push(format!("x{j}_re"));
        header.push(format!("x{j}_im"));
    }
    for kk in 1..=TRACKED_HAMILTONIANS {
        header.push(format!("h{kk}_re"));
        header.push(format!("h{kk}_im"));
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.t.re.to_string(), r.t.im.to_string()];
        for z in r.phi.iter().chain(&r.positions).chain(&r.hamiltonians) {
            rec.push(z.re.to_string());
            rec.push(z.im.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()
}

/// One row of the single-vertex comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckRow {
    pub t: f64,
    #[serde(with = "crate::serde_cx::vec")]
    pub spectral: Vec<C64>,
    #[serde(with = "crate::serde_cx::vec")]
    pub ode: Vec<C64>,
    pub distance: f64,
}

/// Positions from the projection route (`build_qmodel → recover_spectral →
/// evolve → build_dual → positions`) against RK4 on the particle equations with
/// `γ = −g_0²`, for the quadratic Hamiltonian `H_2`.
pub fn crosscheck_m1(
    qp: &QModelPoint,
    coupling: &Coupling,
    times: &[f64],
    steps: usize,
    tol: &Tolerances,
) -> Result<Vec<CrosscheckRow>> {
    if qp.m != 1 || coupling.m() != 1 {
        return Err(CmError::InvalidInput("the cross-check needs m = 1".into()));
    }
    let quad = build_qmodel(qp, coupling, tol.distinct_rel)?;
    let start = recover_spectral(&quad, coupling, tol)?.point;
    let g0 = coupling.g()[0];
    let gamma = -g0 * g0;
    times
        .iter()
        .map(|&t| {
            let flow = FlowSpec::new(2, C64::new(t, 0.0), steps)?;
            let (pt, _) = evolve(&start, None, &flow);
            let spectral = positions(&pt, coupling, None, tol)?;
            let ode = integrate_eom(qp, gamma, C64::new(t, 0.0), steps, tol.collision_gap)?.q;
            let distance = multiset_distance(&spectral, &ode);
            Ok(CrosscheckRow { t, spectral, ode, distance })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{case_rng, sample_coupling, sample_point, sample_qpoint};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn hamiltonian_examples() {
        let k = Coupling::from_real(&[1.0]).unwrap();
        let pt = SpectralPoint::new(1, vec![c(2.0)], vec![c(0.0)]).unwrap();
        let q = build_dual(&pt, &k, None, 1e-9).unwrap();
        assert!((h_spectral(&pt, 1) - c(2.0)).norm() < 1e-15);
        assert!((h_trace(&q, 1) - c(2.0)).norm() < 1e-15);

        let k = Coupling::from_real(&[1.0, 0.5]).unwrap();
        let pt = SpectralPoint::new(2, vec![c(1.0), c(2.0)], vec![c(0.3), c(-0.1)]).unwrap();
        let q = build_dual(&pt, &k, None, 1e-9).unwrap();
        assert!((h_spectral(&pt, 1) - c(5.0)).norm() < 1e-14);
        assert!((h_trace(&q, 1) - c(5.0)).norm() < 1e-10);
    }

    #[test]
    fn trace_and_spectral_agree() {
        let mut rng = case_rng(21, 0);
        for m in 1..=4 {
            let k = sample_coupling(&mut rng, m, 1e-10).unwrap();
            let (pt, fr) = sample_point(&mut rng, m, 3, &k, 1).unwrap();
            let q = build_dual(&pt, &k, fr.as_ref(), 1e-9).unwrap();
            for kk in 1..=3 {
                let a = h_trace(&q, kk);
                let b = h_spectral(&pt, kk);
                assert!((a - b).norm() <= 1e-9 * b.norm().max(1.0));
            }
        }
    }

    #[test]
    fn evolve_identity_and_shift() {
        let pt = SpectralPoint::new(1, vec![c(2.0)], vec![c(0.5)]).unwrap();
        let (same, _) = evolve(&pt, None, &FlowSpec::new(2, c(0.0), 1).unwrap());
        assert_eq!(same, pt);
        let (moved, _) = evolve(&pt, None, &FlowSpec::new(2, c(1.0), 1).unwrap());
        assert!((moved.phi[0] - c(2.5)).norm() < 1e-15);
    }

    #[test]
    fn positions_of_qmodel() {
        let tol = Tolerances::default();
        let k = Coupling::from_real(&[1.0]).unwrap();
        let qp = QModelPoint::new(1, vec![c(0.2), c(-0.4), c(0.1)], vec![c(1.0), c(-0.5), C64::new(0.3, 0.8)]).unwrap();
        let quad = build_qmodel(&qp, &k, 1e-9).unwrap();
        let pos = positions_of(&quad, &tol).unwrap();
        assert!(multiset_distance(&pos, &qp.q) < 1e-12);
    }

    #[test]
    fn free_motion_is_exact() {
        let qp = QModelPoint::new(1, vec![C64::new(0.7, -0.2)], vec![c(1.0)]).unwrap();
        let out = integrate_eom(&qp, c(0.0), c(2.0), 3, 1e-6).unwrap();
        assert!((out.q[0] - (qp.q[0] + qp.p[0] * 2.0)).norm() < 1e-14);
    }

    #[test]
    fn energy_drift() {
        let qp = QModelPoint::new(1, vec![c(0.3), c(-0.2), c(0.1)], vec![c(-1.5), c(0.2), c(1.7)]).unwrap();
        let gamma = c(0.8);
        let out = integrate_eom(&qp, gamma, c(1.0), 10_000, 1e-6).unwrap();
        let (e0, e1) = (energy(&qp, gamma), energy(&out, gamma));
        assert!((e1 - e0).norm() <= 1e-8 * e0.norm());
    }

    #[test]
    fn collision_guard() {
        let qp = QModelPoint::new(1, vec![c(1.0), c(-1.0)], vec![c(-1.0), c(1.0)]).unwrap();
        let r = integrate_eom(&qp, c(0.0), c(2.0), 100, 1e-6);
        assert!(matches!(r, Err(CmError::CollisionDetected { .. })));
    }

    #[test]
    fn projection_matches_ode() {
        let tol = Tolerances::default();
        let k = Coupling::from_real(&[1.0]).unwrap();
        let mut rng = case_rng(31, 0);
        for _ in 0..3 {
            let qp = sample_qpoint(&mut rng, 1, 2).unwrap();
            let rows = crosscheck_m1(&qp, &k, &[0.1, 0.5, 1.0], 2000, &tol).unwrap();
            for r in rows {
                assert!(r.distance < 1e-6, "{r:?}");
            }
        }
    }

    #[test]
    fn series_starts_at_input_and_conserves() {
        let tol = Tolerances::default();
        let mut rng = case_rng(8, 0);
        let k = sample_coupling(&mut rng, 2, 1e-10).unwrap();
        let (pt, fr) = sample_point(&mut rng, 2, 3, &k, 1).unwrap();
        let rows = evolve_series(&pt, &k, fr.as_ref(), 1, C64::new(0.8, 0.1), 4, &tol).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].phi, pt.phi);
        assert_eq!(rows[0].lambda, pt.lambda);
        assert!(hamiltonian_drift(&rows) < 1e-8);
        let mut buf = Vec::new();
        write_series_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 2 + 4 * 3 + 6);
    }
}
