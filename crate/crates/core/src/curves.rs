//! Interpolation curves through the conjugate pairs and their images on the
//! surface `ab = c^m`.
//!
//! Curves are stored in the variable `a = z^m`: the plane curve is
//! `q(z^m)·z·y = p(z^m)`.

use std::io;

use serde::{Deserialize, Serialize};

use crate::canonical::{act_all, theta_closed};
use crate::error::{CmError, Result};
use crate::kernel::{lagrange_interp, DensePoly};
use crate::model::{build_dual, Coupling, SpectralPoint, SpinFraming};
use crate::spectral::bundle_from_quad;
use crate::tolerances::Tolerances;
use crate::C64;

const ONE: C64 = C64::new(1.0, 0.0);

/// `q(a) z y = p(a)` with `a = z^m`; `delta` selects `y = φ` (1) or `y = θ` (2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePolys {
    pub delta: u8,
    pub m: usize,
    pub n: usize,
    pub p: DensePoly,
    pub q: DensePoly,
}

/// Interpolated curve together with the size of the low-order part of the
/// numerator that the division by `z^{m−2}` discards.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedCurve {
    pub curve: CurvePolys,
    pub divisibility: f64,
}

fn check_delta(delta: u8) -> Result<()> {
    if delta == 1 || delta == 2 {
        Ok(())
    } else {
        Err(CmError::InvalidInput(format!("delta must be 1 or 2, got {delta}")))
    }
}

/// `y_k`: `φ_k` for `delta = 1`, the closed-form `θ_k` for `delta = 2`.
pub fn conjugates(
    point: &SpectralPoint,
    coupling: &Coupling,
    framing: Option<&SpinFraming>,
    delta: u8,
) -> Result<Vec<C64>> {
    check_delta(delta)?;
    if delta == 1 {
        return Ok(point.phi.clone());
    }
    if coupling.abs_g().norm() == 0.0 {
        return Err(CmError::ZeroCoupling);
    }
    Ok(theta_closed(point, coupling, framing))
}

/// `Σ_j w_j ∏_{ℓ≠j}(a − x_ℓ)`.
fn node_sum(x: &[C64], w: &[C64]) -> DensePoly {
    let mut total = DensePoly::zero();
    for j in 0..x.len() {
        let mut prod = DensePoly::constant(w[j]);
        for (l, &xl) in x.iter().enumerate() {
            if l != j {
                prod = prod.mul(&DensePoly::new(vec![-xl, ONE]));
            }
        }
        total = total.add(&prod);
    }
    total
}

/// `q(a) = m Σ_j ∏_{ℓ≠j}(a − λ_ℓ^m)`, `p(a) = m Σ_j λ_j y_j ∏_{ℓ≠j}(a − λ_ℓ^m)`.
pub fn closed_curve(
    point: &SpectralPoint,
    coupling: &Coupling,
    framing: Option<&SpinFraming>,
    delta: u8,
) -> Result<CurvePolys> {
    let y = conjugates(point, coupling, framing, delta)?;
    let m = point.m as f64;
    let lm = point.lambda_pow_m();
    let q = node_sum(&lm, &vec![C64::new(m, 0.0); point.n]);
    let gamma: Vec<C64> = (0..point.n).map(|j| point.lambda[j] * y[j] * m).collect();
    let p = node_sum(&lm, &gamma);
    Ok(CurvePolys {
        delta,
        m: point.m,
        n: point.n,
        p,
        q,
    })
}

/// Largest coefficient of index `< m−2`, relative to `max|coeff|`, and its index.
pub fn low_order_residual(poly: &DensePoly, m: usize) -> (usize, f64) {
    let scale = poly.max_abs();
    if scale == 0.0 || m < 3 {
        return (0, 0.0);
    }
    (0..m - 2)
        .map(|k| (k, poly.coeff(k).norm() / scale))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// The curve read off the matrices: `D` (or `C/|g|`) and `A′ = d/dz det(z − P)`
/// divided by `z^{m−2}`, `z^{m−1}` and rewritten in `a = z^m`.
///
/// For `m = 1`, `p` interpolates `λ_k·D(λ_k)` (resp. `λ_k C(λ_k)/|g|`) at the `λ_k`.
pub fn interpolated_curve(
    point: &SpectralPoint,
    coupling: &Coupling,
    framing: Option<&SpinFraming>,
    delta: u8,
    tol: &Tolerances,
) -> Result<InterpolatedCurve> {
    check_delta(delta)?;
    let ag = coupling.abs_g();
    if delta == 2 && ag.norm() == 0.0 {
        return Err(CmError::ZeroCoupling);
    }
    let (m, n) = (point.m, point.n);
    let quad = build_dual(point, coupling, framing, tol.distinct_rel)?;
    let b = bundle_from_quad(&quad, tol)?;
    let num = if delta == 1 { b.d } else { b.c.scale(ONE / ag) };
    let (index, divisibility) = low_order_residual(&num, m);
    if divisibility > tol.divisibility_rel {
        return Err(CmError::DivisibilityViolation {
            index,
            magnitude: divisibility,
            threshold: tol.divisibility_rel,
        });
    }
    let q = DensePoly::new((0..n).map(|t| b.a_prime.coeff(m - 1 + m * t)).collect());
    let p = if m >= 2 {
        DensePoly::new((0..n).map(|t| num.coeff(m - 2 + m * t)).collect())
    } else {
        let values: Vec<C64> = point.lambda.iter().map(|&l| l * num.eval(l)).collect();
        lagrange_interp(&point.lambda, &values, tol.node_gap_rel, tol.pivot_rel)?
    };
    Ok(InterpolatedCurve {
        curve: CurvePolys {
            delta,
            m,
            n,
            p: p.trimmed(tol.trim_rel),
            q: q.trimmed(tol.trim_rel),
        },
        divisibility,
    })
}

/// Largest coefficient difference of `p` and `q`, relative to `max(1, max|coeff|)`.
pub fn coefficient_distance(a: &CurvePolys, b: &CurvePolys) -> f64 {
    let scale = [&a.p, &a.q, &b.p, &b.q]
        .iter()
        .map(|p| p.max_abs())
        .fold(1.0, f64::max);
    let diff = |x: &DensePoly, y: &DensePoly| {
        let len = x.coeffs.len().max(y.coeffs.len());
        (0..len)
            .map(|k| (x.coeff(k) - y.coeff(k)).norm())
            .fold(0.0, f64::max)
    };
    diff(&a.p, &b.p).max(diff(&a.q, &b.q)) / scale
}

/// Closed-form curve, cross-checked against the interpolated one.
pub fn curve_polys(
    point: &SpectralPoint,
    coupling: &Coupling,
    framing: Option<&SpinFraming>,
    delta: u8,
    tol: &Tolerances,
) -> Result<CurvePolys> {
    let closed = closed_curve(point, coupling, framing, delta)?;
    let interp = interpolated_curve(point, coupling, framing, delta, tol)?;
    let dist = coefficient_distance(&closed, &interp.curve);
    if !(dist <= tol.two_route) {
        return Err(CmError::EvaluationFailure(format!(
            "closed and interpolated curves differ by {dist:.3e}"
        )));
    }
    Ok(closed)
}

/// `max_k |q(λ_k^m)·λ_k·y_k − p(λ_k^m)|`, each term relative to its evaluation scale.
pub fn incidence_check(curve: &CurvePolys, point: &SpectralPoint, y: &[C64]) -> f64 {
    let lm = point.lambda_pow_m();
    (0..point.n)
        .map(|k| {
            let a = lm[k];
            let gamma = point.lambda[k] * y[k];
            let r = curve.q.eval(a) * gamma - curve.p.eval(a);
            let scale = curve.q.eval_abs(a.norm()) * gamma.norm() + curve.p.eval_abs(a.norm());
            r.norm() / scale.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// Distance between the curves of a point and of its image under `ω` acting on
/// every particle (both read off the matrices).
pub fn equivariance_check(
    point: &SpectralPoint,
    coupling: &Coupling,
    framing: Option<&SpinFraming>,
    delta: u8,
    tol: &Tolerances,
) -> Result<f64> {
    let base = interpolated_curve(point, coupling, framing, delta, tol)?;
    let (p2, f2) = act_all(point, framing, 1);
    let moved = interpolated_curve(&p2, coupling, f2.as_ref(), delta, tol)?;
    Ok(coefficient_distance(&base.curve, &moved.curve))
}

/// A point `(a, b, c) = (z^m, y^m, zy)` on the surface `ab = c^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientSample {
    #[serde(with = "crate::serde_cx::scalar")]
    pub z: C64,
    #[serde(with = "crate::serde_cx::scalar")]
    pub a: C64,
    #[serde(with = "crate::serde_cx::scalar")]
    pub b: C64,
    #[serde(with = "crate::serde_cx::scalar")]
    pub c: C64,
}

impl QuotientSample {
    /// `|q(a)c − p(a)|` relative to `max(1, evaluation scale)`.
    pub fn curve_residual(&self, curve: &CurvePolys) -> f64 {
        let r = curve.q.eval(self.a) * self.c - curve.p.eval(self.a);
        let r_abs = self.a.norm();
        let scale = curve.q.eval_abs(r_abs) * self.c.norm() + curve.p.eval_abs(r_abs);
        r.norm() / scale.max(1.0)
    }

    /// `|ab − c^m|` relative to `max(1, |a||b|, |c|^m)`.
    pub fn surface_residual(&self, m: usize) -> f64 {
        let cm = self.c.powu(m as u32);
        let scale = (self.a.norm() * self.b.norm()).max(cm.norm()).max(1.0);
        (self.a * self.b - cm).norm() / scale
    }
}

/// The curve point over `z`: `a = z^m`, `c = p(a)/q(a)`, `b = c^m / a`.
pub fn quotient_sample(curve: &CurvePolys, z: C64) -> Result<QuotientSample> {
    let a = z.powu(curve.m as u32);
    let qa = curve.q.eval(a);
    if z.norm() == 0.0 || qa.norm() <= 1e-12 * curve.q.eval_abs(a.norm()) {
        return Err(CmError::PoleAtZ { z });
    }
    let c = curve.p.eval(a) / qa;
    let b = c.powu(curve.m as u32) / a;
    Ok(QuotientSample { z, a, b, c })
}

/// Samples at every `z` that is not a pole, and the number of poles skipped.
pub fn quotient_samples(curve: &CurvePolys, zs: &[C64]) -> (Vec<QuotientSample>, usize) {
    let mut out = Vec::with_capacity(zs.len());
    let mut skipped = 0;
    for &z in zs {
        match quotient_sample(curve, z) {
            Ok(s) => out.push(s),
            Err(_) => skipped += 1,
        }
    }
    (out, skipped)
}

#[derive(Serialize)]
struct CsvRow {
    z_re: f64,
    z_im: f64,
    a_re: f64,
    a_im: f64,
    b_re: f64,
    b_im: f64,
    c_re: f64,
    c_im: f64,
}

/// Writes `z_re,z_im,a_re,a_im,b_re,b_im,c_re,c_im` rows with a header.
pub fn write_samples_csv<W: io::Write>(samples: &[QuotientSample], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if samples.is_empty() {
        w.write_record(["z_re", "z_im", "a_re", "a_im", "b_re", "b_im", "c_re", "c_im"])?;
    }
    for s in samples {
        w.serialize(CsvRow {
            z_re: s.z.re,
            z_im: s.z.im,
            a_re: s.a.re,
            a_im: s.a.im,
            b_re: s.b.re,
            b_im: s.b.im,
            c_re: s.c.re,
            c_im: s.c.im,
        })?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{case_rng, sample_coupling, sample_point};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_case(seed: u64, m: usize, n: usize, d: usize) -> (SpectralPoint, Coupling, Option<SpinFraming>) {
        let mut rng = case_rng(seed, (m * 100 + n * 10 + d) as u64);
        let k = sample_coupling(&mut rng, m, 1e-10).unwrap();
        let (pt, fr) = sample_point(&mut rng, m, n, &k, d).unwrap();
        (pt, k, fr)
    }

    #[test]
    fn single_particle_m1() {
        let k = Coupling::from_real(&[1.0]).unwrap();
        let pt = SpectralPoint::new(1, vec![c(2.0)], vec![c(3.0)]).unwrap();
        let tol = Tolerances::default();
        let cv = curve_polys(&pt, &k, None, 1, &tol).unwrap();
        assert_eq!(cv.q.coeffs, vec![c(1.0)]);
        assert_eq!(cv.p.coeffs, vec![c(6.0)]);
        assert_eq!(incidence_check(&cv, &pt, &pt.phi), 0.0);
    }

    #[test]
    fn single_particle_constant_curves() {
        let tol = Tolerances::default();
        for m in 1..=4 {
            let (pt, k, _) = random_case(3, m, 1, 0);
            for delta in [1, 2] {
                let cv = curve_polys(&pt, &k, None, delta, &tol).unwrap();
                assert_eq!(cv.q.degree(), Some(0));
                assert!(cv.p.coeffs.len() <= 1);
                let y = conjugates(&pt, &k, None, delta).unwrap();
                assert!(incidence_check(&cv, &pt, &y) < 1e-15);
            }
        }
    }

    #[test]
    fn two_routes_agree() {
        let tol = Tolerances::default();
        for m in 1..=4 {
            for n in 1..=4 {
                for d in [0, 2] {
                    let (pt, k, fr) = random_case(11, m, n, d);
                    for delta in [1, 2] {
                        let closed = closed_curve(&pt, &k, fr.as_ref(), delta).unwrap();
                        let interp = interpolated_curve(&pt, &k, fr.as_ref(), delta, &tol).unwrap();
                        let dist = coefficient_distance(&closed, &interp.curve);
                        assert!(dist < 1e-8, "m={m} n={n} d={d} delta={delta}: {dist:e}");
                        assert!(interp.divisibility < 1e-8);
                        assert_eq!(interp.curve.q.degree(), Some(n - 1));
                        let y = conjugates(&pt, &k, fr.as_ref(), delta).unwrap();
                        assert!(incidence_check(&interp.curve, &pt, &y) < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn incidence_detects_perturbation() {
        let (mut pt, k, _) = random_case(5, 2, 3, 0);
        let cv = closed_curve(&pt, &k, None, 1).unwrap();
        pt.phi[0] += c(0.1);
        assert!(incidence_check(&cv, &pt, &pt.phi) >= 1e-3);
    }

    #[test]
    fn equivariance() {
        let tol = Tolerances::default();
        let (pt, k, _) = random_case(7, 1, 3, 0);
        assert!(equivariance_check(&pt, &k, None, 1, &tol).unwrap() < 1e-12);
        let (pt, k, _) = random_case(7, 3, 2, 0);
        assert!(equivariance_check(&pt, &k, None, 1, &tol).unwrap() < 1e-9);
        let (pt, k, fr) = random_case(7, 2, 3, 2);
        assert!(equivariance_check(&pt, &k, fr.as_ref(), 2, &tol).unwrap() < 1e-8);
    }

    #[test]
    fn theta_curve_needs_coupling() {
        let k = Coupling::from_real(&[0.5, -0.5]).unwrap();
        let pt = SpectralPoint::new(2, vec![c(1.0), c(1.5)], vec![c(0.0), c(0.0)]).unwrap();
        assert_eq!(closed_curve(&pt, &k, None, 2), Err(CmError::ZeroCoupling));
        assert!(matches!(closed_curve(&pt, &k, None, 3), Err(CmError::InvalidInput(_))));
    }

    #[test]
    fn low_order_detection() {
        let p = DensePoly::new(vec![c(1e-3), c(0.0), c(0.0), c(1.0)]);
        assert_eq!(low_order_residual(&p, 4), (0, 1e-3));
        assert_eq!(low_order_residual(&p, 2), (0, 0.0));
    }

    #[test]
    fn quotient_samples_lie_on_surface() {
        let (pt, k, fr) = random_case(9, 3, 3, 1);
        let cv = closed_curve(&pt, &k, fr.as_ref(), 2).unwrap();
        let y = conjugates(&pt, &k, fr.as_ref(), 2).unwrap();
        let mut zs: Vec<C64> = (0..8).map(|t| C64::from_polar(1.3, 0.7 * t as f64)).collect();
        zs.push(C64::new(0.0, 0.0));
        zs.extend(pt.lambda.iter().copied());
        let (samples, skipped) = quotient_samples(&cv, &zs);
        assert_eq!(skipped, 1);
        assert_eq!(samples.len(), zs.len() - 1);
        for s in &samples {
            assert!(s.curve_residual(&cv) < 1e-9);
            assert!(s.surface_residual(3) < 1e-12);
        }
        for (kk, s) in samples[8..].iter().enumerate() {
            let gamma = pt.lambda[kk] * y[kk];
            assert!((s.c - gamma).norm() < 1e-8 * gamma.norm().max(1.0));
        }
        let mut buf = Vec::new();
        write_samples_csv(&samples, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("z_re,z_im,a_re,a_im,b_re,b_im,c_re,c_im"));
        assert_eq!(lines.count(), samples.len());
    }

    #[test]
    fn pole_is_reported() {
        let (pt, k, _) = random_case(2, 2, 2, 0);
        let cv = closed_curve(&pt, &k, None, 1).unwrap();
        let r = cv.q.roots(1e-14, 500).unwrap()[0];
        let z = r.sqrt();
        assert!(matches!(quotient_sample(&cv, z), Err(CmError::PoleAtZ { .. })));
    }
}
