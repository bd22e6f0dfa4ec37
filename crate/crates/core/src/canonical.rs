//! Conjugate variables `φ`, `θ`, the rational functions `r`, `s`, and recovery
//! of spectral coordinates from a matrix representative.

use serde::{Deserialize, Serialize};

use crate::error::{CmError, Result};
use crate::kernel::{eigenvalues, CMatrix, DensePoly};
use crate::model::{Coupling, Quadruple, SpectralPoint, SpinFraming};
use crate::spectral::{a_prime_closed, bundle, interpolate_cd};
use crate::tolerances::Tolerances;
use crate::C64;

/// Quotient of two polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalFn {
    pub num: DensePoly,
    pub den: DensePoly,
}

impl RationalFn {
    pub fn new(num: DensePoly, den: DensePoly) -> Result<Self> {
        if den.is_zero() {
            return Err(CmError::InvalidInput("zero denominator".into()));
        }
        Ok(RationalFn { num, den })
    }

    /// Value at `z`; `PoleAtZ` when `|den(z)|` is at the rounding level of its evaluation.
    pub fn eval(&self, z: C64) -> Result<C64> {
        let d = self.den.eval(z);
        if d.norm() <= 1e-12 * self.den.eval_abs(z.norm()) {
            return Err(CmError::PoleAtZ { z });
        }
        Ok(self.num.eval(z) / d)
    }
}

/// A spectral point (and framing) up to relabelling and the cyclic action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitCoordinates {
    pub point: SpectralPoint,
    pub framing: Option<SpinFraming>,
    pub canonical_form: bool,
}

/// `r(z) = D(z) / A′(z)`.
pub fn r_function(
    point: &SpectralPoint,
    coupling: &Coupling,
    framing: Option<&SpinFraming>,
    tol: &Tolerances,
) -> Result<RationalFn> {
    let b = bundle(point, coupling, framing, tol)?;
    RationalFn::new(b.d, b.a_prime)
}

/// `s(z) = C(z) / (|g|·A′(z))`.
pub fn s_function(
    point: &SpectralPoint,
    coupling: &Coupling,
    framing: Option<&SpinFraming>,
    tol: &Tolerances,
) -> Result<RationalFn> {
    let ag = coupling.abs_g();
    if ag.norm() == 0.0 {
        return Err(CmError::ZeroCoupling);
    }
    let b = bundle(point, coupling, framing, tol)?;
    RationalFn::new(b.c, b.a_prime.scale(ag))
}

/// Framing-diagonal part `e_k` of `θ_k`.
///
/// `e_k = (m|g|λ_k)⁻¹ Σ_i μ_i (c_{i−1} − Σ_{r<i} μ_r + Σ_s ((m−s)/m) μ_s)` with
/// `μ_r = [ṽ_r w̃_r]_{kk}` and `c_{−1}` read as an empty sum.
pub fn e_term(point: &SpectralPoint, coupling: &Coupling, framing: &SpinFraming, k: usize) -> C64 {
    let m = point.m;
    let mu: Vec<C64> = (0..m)
        .map(|i| {
            (0..framing.d)
                .map(|a| framing.v[i][(k, a)] * framing.w[i][(a, k)])
                .sum()
        })
        .collect();
    let shift: C64 = (0..m).map(|s| mu[s] * ((m - s) as f64 / m as f64)).sum();
    let mut before = C64::new(0.0, 0.0);
    let mut e = C64::new(0.0, 0.0);
    for i in 0..m {
        e += mu[i] * (coupling.c_before(i) - before + shift);
        before += mu[i];
    }
    e / (coupling.abs_g() * point.lambda[k] * m as f64)
}

/// `R(t, k, h) = λ_t^{m−h−1} λ_k^h / (λ_t^m − λ_k^m)`.
pub(crate) fn ratio(lam: &[C64], m: usize, t: usize, k: usize, h: usize) -> C64 {
    lam[t].powu((m - h - 1) as u32) * lam[k].powu(h as u32)
        / (lam[t].powu(m as u32) - lam[k].powu(m as u32))
}

/// Interaction part `f_k = −(m|g|)⁻¹ Σ_{h,i} Σ_{t≠k} M^{(i)}_{kt} M^{(i−h−1)}_{tk} R(t,k,h)`.
pub fn f_term_with(point: &SpectralPoint, coupling: &Coupling, mus: &[CMatrix], k: usize) -> C64 {
    let m = point.m as isize;
    let mut f = C64::new(0.0, 0.0);
    for h in 0..m {
        for i in 0..m {
            let a = &mus[i as usize];
            let b = &mus[(i - h - 1).rem_euclid(m) as usize];
            for t in 0..point.n {
                if t != k {
                    f += a[(k, t)] * b[(t, k)] * ratio(&point.lambda, point.m, t, k, h as usize);
                }
            }
        }
    }
    -f / (coupling.abs_g() * m as f64)
}

pub fn f_term(point: &SpectralPoint, coupling: &Coupling, framing: &SpinFraming, k: usize) -> C64 {
    f_term_with(point, coupling, &framing.mus(), k)
}

/// Spinless interaction term `(|g|/(mλ_k)) Σ_{ℓ≠k} λ_k^m/(λ_k^m − λ_ℓ^m)`.
pub fn f_spinless(point: &SpectralPoint, coupling: &Coupling, k: usize) -> C64 {
    let lm = point.lambda_pow_m();
    let s: C64 = (0..point.n)
        .filter(|&l| l != k)
        .map(|l| lm[k] / (lm[k] - lm[l]))
        .sum();
    coupling.abs_g() * s / (point.lambda[k] * point.m as f64)
}

/// Closed-form conjugates `θ_k` of `λ_k`.
pub fn theta_closed(
    point: &SpectralPoint,
    coupling: &Coupling,
    framing: Option<&SpinFraming>,
) -> Vec<C64> {
    let m = point.m as f64;
    match framing {
        None => (0..point.n)
            .map(|k| {
                point.phi[k] / m
                    + coupling.c(point.m - 1) / (point.lambda[k] * m)
                    + f_spinless(point, coupling, k)
            })
            .collect(),
        Some(fr) => {
            let mus = fr.mus();
            (0..point.n)
                .map(|k| {
                    point.phi[k] / m
                        + e_term(point, coupling, fr, k)
                        + f_term_with(point, coupling, &mus, k)
                })
                .collect()
        }
    }
}

/// `ω = exp(2πi/m)`.
pub fn omega(m: usize) -> C64 {
    C64::from_polar(1.0, std::f64::consts::TAU / m as f64)
}

/// Applies the generator power `ω^k` to particle `j`: `λ_j ↦ ω^kλ_j`,
/// `φ_j ↦ ω^{−k}φ_j`, row `j` of `ṽ_i` times `ω^{−ik}`, column `j` of `w̃_i` times `ω^{ik}`.
pub fn act_particle(
    point: &mut SpectralPoint,
    framing: Option<&mut SpinFraming>,
    j: usize,
    k: i64,
) {
    let m = point.m as i64;
    let w = |e: i64| C64::from_polar(1.0, std::f64::consts::TAU * e.rem_euclid(m) as f64 / m as f64);
    point.lambda[j] *= w(k);
    point.phi[j] *= w(-k);
    if let Some(fr) = framing {
        for i in 0..point.m {
            let s = w(i as i64 * k);
            for a in 0..fr.d {
                fr.v[i][(j, a)] *= s.conj();
                fr.w[i][(a, j)] *= s;
            }
        }
    }
}

/// Applies `ω^k` to every particle.
pub fn act_all(point: &SpectralPoint, framing: Option<&SpinFraming>, k: i64) -> (SpectralPoint, Option<SpinFraming>) {
    let mut p = point.clone();
    let mut f = framing.cloned();
    for j in 0..p.n {
        act_particle(&mut p, f.as_mut(), j, k);
    }
    (p, f)
}

fn sector(z: C64, m: usize) -> i64 {
    let mut a = z.arg();
    if a < 0.0 {
        a += std::f64::consts::TAU;
    }
    ((a * m as f64 / std::f64::consts::TAU).floor() as i64).clamp(0, m as i64 - 1)
}

fn sort_key(z: C64, m: usize) -> (f64, f64) {
    let p = z.powu(m as u32);
    (p.re, p.im)
}

/// Representative with every `arg λ_j ∈ [0, 2π/m)`, sorted by `(Re λ^m, Im λ^m)`.
pub fn canonicalize(point: &SpectralPoint, framing: Option<&SpinFraming>) -> OrbitCoordinates {
    let m = point.m;
    let mut p = point.clone();
    let mut f = framing.cloned();
    for j in 0..p.n {
        let k = sector(p.lambda[j], m);
        if k != 0 {
            act_particle(&mut p, f.as_mut(), j, -k);
        }
    }
    let mut order: Vec<usize> = (0..p.n).collect();
    order.sort_by(|&a, &b| {
        sort_key(p.lambda[a], m)
            .partial_cmp(&sort_key(p.lambda[b], m))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let point = SpectralPoint {
        m,
        n: p.n,
        lambda: order.iter().map(|&j| p.lambda[j]).collect(),
        phi: order.iter().map(|&j| p.phi[j]).collect(),
    };
    let framing = f.map(|fr| SpinFraming {
        d: fr.d,
        v: fr
            .v
            .iter()
            .map(|vi| CMatrix::from_fn(vi.rows(), vi.cols(), |r, c| vi[(order[r], c)]))
            .collect(),
        w: fr
            .w
            .iter()
            .map(|wi| CMatrix::from_fn(wi.rows(), wi.cols(), |r, c| wi[(r, order[c])]))
            .collect(),
    });
    OrbitCoordinates {
        point,
        framing,
        canonical_form: true,
    }
}

/// `P_0 P_1 ⋯ P_{m−1}` restricted to `V_0`.
pub fn p_product(quad: &Quadruple) -> CMatrix {
    let mut acc = CMatrix::identity(quad.n);
    for i in 0..quad.m {
        acc = &acc * &quad.p_block(i);
    }
    acc
}

fn check_pattern(quad: &Quadruple) -> Result<()> {
    let scale = quad.x.norm_max().max(quad.p.norm_max()).max(1.0);
    let off = quad.off_pattern();
    if off > 1e-8 * scale {
        return Err(CmError::InvalidInput(format!(
            "quadruple leaves the cyclic block pattern (entry {off:.3e})"
        )));
    }
    Ok(())
}

/// Spectral coordinates of a representative: `λ_j` the principal `m`-th roots of
/// the eigenvalues of `P_0⋯P_{m−1}|_{V_0}`, `φ_j = r(λ_j)`. The framing is not
/// recovered.
pub fn recover_spectral(quad: &Quadruple, coupling: &Coupling, tol: &Tolerances) -> Result<OrbitCoordinates> {
    if coupling.m() != quad.m {
        return Err(CmError::Dimension("coupling does not match the quadruple".into()));
    }
    check_pattern(quad)?;
    let m = quad.m;
    let prod = p_product(quad);
    let mu = eigenvalues(&prod, tol.root_rel, tol.root_max_iter, tol.pivot_rel)?;
    let scale = mu.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for j in 0..mu.len() {
        if mu[j].norm() <= tol.spectrum_gap * scale.max(f64::MIN_POSITIVE) {
            return Err(CmError::DegenerateSpectrum(format!("eigenvalue {j} vanishes")));
        }
        for k in j + 1..mu.len() {
            if (mu[j] - mu[k]).norm() <= tol.spectrum_gap * scale {
                return Err(CmError::DegenerateSpectrum(format!(
                    "eigenvalues {j} and {k} coincide"
                )));
            }
        }
    }
    let lambda: Vec<C64> = mu
        .iter()
        .map(|z| {
            let mut a = z.arg();
            if a < 0.0 {
                a += std::f64::consts::TAU;
            }
            C64::from_polar(z.norm().powf(1.0 / m as f64), a / m as f64)
        })
        .collect();
    let (_, d) = interpolate_cd(quad, tol)?;
    let provisional = SpectralPoint::new(m, lambda.clone(), vec![C64::new(0.0, 0.0); lambda.len()])?;
    let phi = lambda
        .iter()
        .map(|&l| {
            let den = a_prime_closed(&provisional, l);
            if den.norm() == 0.0 {
                Err(CmError::PoleAtZ { z: l })
            } else {
                Ok(d.eval(l) / den)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let point = SpectralPoint::new(m, lambda, phi)?;
    Ok(canonicalize(&point, None))
}

/// Distance between two points modulo relabelling and the per-particle cyclic
/// action: the bottleneck (max over particles) of the best per-pair distance,
/// minimized over matchings. Exhaustive for `n ≤ 8`, greedy on `λ^m` beyond.
pub fn orbit_distance(a: &SpectralPoint, b: &SpectralPoint) -> f64 {
    if a.n != b.n || a.m != b.m {
        return f64::INFINITY;
    }
    let n = a.n;
    let m = a.m;
    let om = omega(m);
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    (0..m)
                        .map(|e| {
                            let w = om.powu(e as u32);
                            let dl = (a.lambda[j] * w - b.lambda[k]).norm();
                            let dp = (a.phi[j] / w - b.phi[k]).norm();
                            dl.max(dp)
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        })
        .collect();
    if n <= 8 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &cost, &mut best);
        best
    } else {
        let am = a.lambda_pow_m();
        let bm = b.lambda_pow_m();
        let mut used = vec![false; n];
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let k = (0..n)
                .filter(|&k| !used[k])
                .min_by(|&x, &y| {
                    (am[j] - bm[x])
                        .norm()
                        .partial_cmp(&(am[j] - bm[y]).norm())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("unused index");
            used[k] = true;
            worst = worst.max(cost[j][k]);
        }
        worst
    }
}

fn permute(perm: &mut Vec<usize>, at: usize, cost: &[Vec<f64>], best: &mut f64) {
    let n = perm.len();
    if at == n {
        let v = (0..n).map(|j| cost[j][perm[j]]).fold(0.0, f64::max);
        if v < *best {
            *best = v;
        }
        return;
    }
    for i in at..n {
        perm.swap(at, i);
        let partial = (0..=at).map(|j| cost[j][perm[j]]).fold(0.0, f64::max);
        if partial < *best {
            permute(perm, at + 1, cost, best);
        }
        perm.swap(at, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_dual, case_rng, sample_coupling, sample_point};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn single_particle_r_and_s() {
        let tol = Tolerances::default();
        let k = Coupling::from_real(&[1.0]).unwrap();
        let pt = SpectralPoint::new(1, vec![c(2.0)], vec![c(3.0)]).unwrap();
        let r = r_function(&pt, &k, None, &tol).unwrap();
        let s = s_function(&pt, &k, None, &tol).unwrap();
        for z in [c(0.5), C64::new(-1.0, 2.0)] {
            assert!((r.eval(z).unwrap() - c(3.0)).norm() < 1e-12);
            assert!((s.eval(z).unwrap() - c(3.0)).norm() < 1e-12);
        }
        assert!((theta_closed(&pt, &k, None)[0] - c(3.0)).norm() < 1e-15);
    }

    #[test]
    fn r_has_pole_at_double_root_of_derivative() {
        let r = RationalFn::new(DensePoly::constant(c(1.0)), DensePoly::new(vec![c(-1.0), c(1.0)])).unwrap();
        assert!(matches!(r.eval(c(1.0)), Err(CmError::PoleAtZ { .. })));
    }

    #[test]
    fn two_vertex_single_particle_theta() {
        let tol = Tolerances::default();
        let k = Coupling::from_real(&[1.0, 2.0]).unwrap();
        let lam = C64::new(0.8, 0.3);
        let phi = C64::new(-0.2, 0.5);
        let pt = SpectralPoint::new(2, vec![lam], vec![phi]).unwrap();
        let want = phi / 2.0 + c(1.0) / (lam * 2.0);
        let s = s_function(&pt, &k, None, &tol).unwrap();
        assert!((s.eval(lam).unwrap() - want).norm() < 1e-10);
        assert!((theta_closed(&pt, &k, None)[0] - want).norm() < 1e-14);
    }

    #[test]
    fn spinless_interaction_sign() {
        // m = 1, λ = (1, 2): f_1 = (1/1)·1/(1 − 2) = −1
        let k = Coupling::from_real(&[1.0]).unwrap();
        let pt = SpectralPoint::new(1, vec![c(1.0), c(2.0)], vec![c(0.25), c(0.0)]).unwrap();
        let th = theta_closed(&pt, &k, None);
        assert!((th[0] - c(0.25 - 1.0)).norm() < 1e-14);
        let s = s_function(&pt, &k, None, &Tolerances::default()).unwrap();
        assert!((s.eval(c(1.0)).unwrap() - th[0]).norm() < 1e-10);
    }

    #[test]
    fn spin_formula_reduces_to_spinless() {
        let mut rng = case_rng(3, 3);
        for m in 1..=4 {
            let k = sample_coupling(&mut rng, m, 1e-10).unwrap();
            let (pt, _) = sample_point(&mut rng, m, 4, &k, 0).unwrap();
            let fr = SpinFraming::spinless(m, 4, k.abs_g());
            let a = theta_closed(&pt, &k, None);
            let b = theta_closed(&pt, &k, Some(&fr));
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn r_and_s_at_eigenvalues() {
        let tol = Tolerances::default();
        let mut rng = case_rng(8, 0);
        for (m, d) in [(1, 0), (2, 2), (3, 1), (4, 3), (3, 0)] {
            let k = sample_coupling(&mut rng, m, 1e-10).unwrap();
            let (pt, fr) = sample_point(&mut rng, m, 4, &k, d).unwrap();
            let r = r_function(&pt, &k, fr.as_ref(), &tol).unwrap();
            let s = s_function(&pt, &k, fr.as_ref(), &tol).unwrap();
            let th = theta_closed(&pt, &k, fr.as_ref());
            for j in 0..4 {
                let l = pt.lambda[j];
                assert!((r.eval(l).unwrap() - pt.phi[j]).norm() < 1e-8, "m={m} d={d}");
                assert!((s.eval(l).unwrap() - th[j]).norm() < 1e-8 * th[j].norm().max(1.0), "m={m} d={d}");
            }
        }
    }

    #[test]
    fn canonicalize_examples() {
        let pt = SpectralPoint::new(2, vec![c(-1.0)], vec![c(5.0)]).unwrap();
        let o = canonicalize(&pt, None);
        assert!((o.point.lambda[0] - c(1.0)).norm() < 1e-15);
        assert!((o.point.phi[0] - c(-5.0)).norm() < 1e-14);
        let pt = SpectralPoint::new(1, vec![c(3.0), c(-1.0)], vec![c(1.0), c(2.0)]).unwrap();
        let o = canonicalize(&pt, None);
        assert_eq!(o.point.lambda, vec![c(-1.0), c(3.0)]);
        assert_eq!(canonicalize(&o.point, None), o);
    }

    #[test]
    fn recover_single() {
        let tol = Tolerances::default();
        let k = Coupling::from_real(&[1.0]).unwrap();
        let pt = SpectralPoint::new(1, vec![c(2.0)], vec![c(3.0)]).unwrap();
        let q = build_dual(&pt, &k, None, 1e-9).unwrap();
        let o = recover_spectral(&q, &k, &tol).unwrap();
        assert!((o.point.lambda[0] - c(2.0)).norm() < 1e-12);
        assert!((o.point.phi[0] - c(3.0)).norm() < 1e-12);
    }

    #[test]
    fn recover_roundtrip() {
        let tol = Tolerances::default();
        let mut rng = case_rng(4, 4);
        for m in 1..=4 {
            let k = sample_coupling(&mut rng, m, 1e-10).unwrap();
            let (pt, _) = sample_point(&mut rng, m, 4, &k, 0).unwrap();
            let q = build_dual(&pt, &k, None, 1e-9).unwrap();
            let o = recover_spectral(&q, &k, &tol).unwrap();
            let want = canonicalize(&pt, None);
            assert!(orbit_distance(&o.point, &want.point) < 1e-7, "m={m}");
        }
    }

    #[test]
    fn theta_equivariance() {
        let mut rng = case_rng(9, 2);
        for (m, d) in [(3, 0), (2, 2), (4, 1)] {
            let k = sample_coupling(&mut rng, m, 1e-10).unwrap();
            let (pt, fr) = sample_point(&mut rng, m, 3, &k, d).unwrap();
            let (p2, f2) = act_all(&pt, fr.as_ref(), 1);
            let a = theta_closed(&pt, &k, fr.as_ref());
            let b = theta_closed(&p2, &k, f2.as_ref());
            let w = omega(m);
            for (x, y) in a.iter().zip(&b) {
                assert!((x / w - y).norm() < 1e-12, "m={m} d={d}");
            }
        }
    }
}
