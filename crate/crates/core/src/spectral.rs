//! The spectral functions `A`, `A′`, `C`, `D`, the closed-form resolvent of
//! `L̃`, and the single-vertex Lax matrix with spectral parameter.

use serde::{Deserialize, Serialize};

use crate::error::{CmError, Result};
use crate::kernel::{adjugate, char_poly, determinant, lagrange_interp, lu_solve, CMatrix, DensePoly};
use crate::model::{build_dual, Coupling, QModelPoint, Quadruple, SpectralPoint, SpinFraming};
use crate::tolerances::Tolerances;
use crate::C64;

const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// `A`, `A′`, `C`, `D` as polynomials in `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFnBundle {
    pub a: DensePoly,
    pub a_prime: DensePoly,
    pub c: DensePoly,
    pub d: DensePoly,
}

/// `∏_j (z^m − λ_j^m)`.
pub fn a_closed(point: &SpectralPoint, z: C64) -> C64 {
    let zm = z.powu(point.m as u32);
    point.lambda_pow_m().iter().map(|l| zm - l).product()
}

/// Derivative of [`a_closed`] in `z`.
pub fn a_prime_closed(point: &SpectralPoint, z: C64) -> C64 {
    let m = point.m as u32;
    let zm = z.powu(m);
    let lm = point.lambda_pow_m();
    let mut s = ZERO;
    for j in 0..lm.len() {
        let rest: C64 = lm
            .iter()
            .enumerate()
            .filter(|&(l, _)| l != j)
            .map(|(_, x)| zm - x)
            .product();
        s += rest;
    }
    s * z.powu(m - 1) * m as f64
}

/// `∏_j (z^m − λ_j^m)` expanded.
pub fn a_poly(point: &SpectralPoint) -> DensePoly {
    let m = point.m;
    let mut p = DensePoly::constant(ONE);
    for l in point.lambda_pow_m() {
        let mut f = vec![ZERO; m + 1];
        f[0] = -l;
        f[m] = ONE;
        p = p.mul(&DensePoly::new(f));
    }
    p
}

/// `det(z·1 − P)`.
pub fn a_det(quad: &Quadruple, z: C64, tol: &Tolerances) -> Result<C64> {
    determinant(&shifted(&quad.p, z), tol.pivot_rel)
}

fn shifted(p: &CMatrix, z: C64) -> CMatrix {
    &CMatrix::identity(p.rows()).scale(z) - p
}

/// `L̃` with blocks `(i, i+1) = diag(λ)`.
pub fn l_tilde(point: &SpectralPoint) -> CMatrix {
    let (m, n) = (point.m, point.n);
    let mut p = CMatrix::zeros(m * n, m * n);
    let lam = CMatrix::diag(&point.lambda);
    for i in 0..m {
        p.set_block(i, (i + 1) % m, &lam);
    }
    p
}

/// `(z·1 − L̃)⁻¹` blockwise: `z^{(m−(i−h+1)) mod m} (z^m − Λ^m)⁻¹ Λ^{(i−h) mod m}`.
pub fn resolvent_closed(point: &SpectralPoint, z: C64) -> Result<CMatrix> {
    let (m, n) = (point.m as i64, point.n);
    let zm = z.powu(m as u32);
    let lm = point.lambda_pow_m();
    let scale = lm.iter().map(|x| x.norm()).fold(zm.norm(), f64::max).max(1.0);
    if lm.iter().any(|l| (zm - l).norm() <= 1e-12 * scale) {
        return Err(CmError::PoleAtZ { z });
    }
    let mut r = CMatrix::zeros(point.m * n, point.m * n);
    for h in 0..m {
        for i in 0..m {
            let ze = (m - (i - h + 1)).rem_euclid(m) as u32;
            let le = (i - h).rem_euclid(m) as u32;
            let zp = z.powu(ze);
            for j in 0..n {
                r[(h as usize * n + j, i as usize * n + j)] =
                    zp * point.lambda[j].powu(le) / (zm - lm[j]);
            }
        }
    }
    Ok(r)
}

/// `(z·1 − L̃)⁻¹` by LU.
pub fn resolvent_lu(point: &SpectralPoint, z: C64, tol: &Tolerances) -> Result<CMatrix> {
    let a = shifted(&l_tilde(point), z);
    lu_solve(&a, &CMatrix::identity(a.rows()), tol.pivot_rel)
}

/// `D(z) = tr(X·adj(z·1 − P))`.
pub fn d_eval(quad: &Quadruple, z: C64, tol: &Tolerances) -> Result<C64> {
    let adj = adjugate(&shifted(&quad.p, z), tol.pivot_rel, tol.adj_det_rel)?;
    Ok(quad.x.matmul(&adj)?.trace())
}

/// `C(z) = tr(w·X·adj(z·1 − P)·v)`, summed over the framing directions.
pub fn c_eval(quad: &Quadruple, z: C64, tol: &Tolerances) -> Result<C64> {
    let adj = adjugate(&shifted(&quad.p, z), tol.pivot_rel, tol.adj_det_rel)?;
    let xv = quad.x.matmul(&adj.matmul(&quad.v)?)?;
    Ok(quad.w.matmul(&xv)?.trace())
}

/// Interpolation nodes: `mn` points on the circle whose radius is the geometric
/// mean of the `|λ_j|` (read off `|det P|`), rotated by half a step.
pub fn interp_nodes(quad: &Quadruple, tol: &Tolerances) -> Result<Vec<C64>> {
    let big_n = quad.dim();
    let det = determinant(&quad.p, tol.pivot_rel)?.norm();
    let radius = if det > 0.0 && det.is_finite() {
        det.powf(1.0 / big_n as f64)
    } else {
        1.0
    };
    Ok((0..big_n)
        .map(|k| {
            C64::from_polar(
                radius,
                std::f64::consts::TAU * (k as f64 + 0.5) / big_n as f64,
            )
        })
        .collect())
}

/// `C` and `D` reconstructed from pointwise values at the interpolation nodes.
pub fn interpolate_cd(quad: &Quadruple, tol: &Tolerances) -> Result<(DensePoly, DensePoly)> {
    let nodes = interp_nodes(quad, tol)?;
    let mut cv = Vec::with_capacity(nodes.len());
    let mut dv = Vec::with_capacity(nodes.len());
    for &z in &nodes {
        let adj = adjugate(&shifted(&quad.p, z), tol.pivot_rel, tol.adj_det_rel)?;
        let xadj = quad.x.matmul(&adj)?;
        dv.push(xadj.trace());
        cv.push(quad.w.matmul(&xadj.matmul(&quad.v)?)?.trace());
    }
    let c = lagrange_interp(&nodes, &cv, tol.node_gap_rel, tol.pivot_rel)?.trimmed(tol.trim_rel);
    let d = lagrange_interp(&nodes, &dv, tol.node_gap_rel, tol.pivot_rel)?.trimmed(tol.trim_rel);
    Ok((c, d))
}

/// Bundle for an arbitrary representative: `A` is the characteristic polynomial of `P`.
pub fn bundle_from_quad(quad: &Quadruple, tol: &Tolerances) -> Result<SpectralFnBundle> {
    let a = DensePoly::new(char_poly(&quad.p)?);
    let a_prime = a.derivative();
    let (c, d) = interpolate_cd(quad, tol)?;
    Ok(SpectralFnBundle { a, a_prime, c, d })
}

/// Bundle for a spectral point: `A`, `A′` in closed form, `C`, `D` interpolated.
pub fn bundle(
    point: &SpectralPoint,
    coupling: &Coupling,
    framing: Option<&SpinFraming>,
    tol: &Tolerances,
) -> Result<SpectralFnBundle> {
    let quad = build_dual(point, coupling, framing, tol.distinct_rel)?;
    let a = a_poly(point);
    let a_prime = a.derivative();
    let (c, d) = interpolate_cd(&quad, tol)?;
    Ok(SpectralFnBundle { a, a_prime, c, d })
}

/// `Σ_j y_j m λ_j z^{m−2} ∏_{ℓ≠j}(z^m − λ_ℓ^m)`, the polynomial of the shape of
/// `D` whose ratio with `A′` takes the value `y_k` at `λ_k`.
///
/// For `m = 1` this reads `Σ_j y_j ∏_{ℓ≠j}(z − λ_ℓ)`.
pub fn conjugate_poly(point: &SpectralPoint, y: &[C64]) -> DensePoly {
    let m = point.m;
    let n = point.n;
    let lm = point.lambda_pow_m();
    let mut total = DensePoly::zero();
    for j in 0..n {
        let mut prod = DensePoly::constant(ONE);
        for (l, &x) in lm.iter().enumerate() {
            if l != j {
                let mut f = vec![ZERO; m + 1];
                f[0] = -x;
                f[m] = ONE;
                prod = prod.mul(&DensePoly::new(f));
            }
        }
        let term = if m >= 2 {
            let mut shifted = vec![ZERO; m - 2];
            shifted.extend(prod.coeffs);
            DensePoly::new(shifted).scale(y[j] * point.lambda[j] * m as f64)
        } else {
            prod.scale(y[j])
        };
        total = total.add(&term);
    }
    total
}

/// `D` in closed form.
pub fn d_closed(point: &SpectralPoint) -> DensePoly {
    conjugate_poly(point, &point.phi)
}

/// Largest coefficient at an exponent not `≡ m−2 (mod m)`, relative to `max|coeff|`.
pub fn structure_residual(p: &DensePoly, m: usize) -> f64 {
    let scale = p.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let want = (m as i64 - 2).rem_euclid(m as i64) as usize;
    p.coeffs
        .iter()
        .enumerate()
        .filter(|(k, _)| k % m != want)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max)
        / scale
}

/// `L_{jk} = p_j δ_{jk} + i g (q_j − q_k)⁻¹ (1 − δ_{jk})`.
pub fn classic_l(qp: &QModelPoint, g: C64, distinct_rel: f64) -> Result<CMatrix> {
    if qp.m != 1 {
        return Err(CmError::InvalidInput("the spectral-parameter Lax matrix needs m = 1".into()));
    }
    let scale = qp.q.iter().map(|x| x.norm()).fold(1.0, f64::max);
    for j in 0..qp.n {
        for k in j + 1..qp.n {
            if (qp.q[j] - qp.q[k]).norm() <= distinct_rel * scale {
                return Err(CmError::DegeneratePoint(format!("q_{j} = q_{k}")));
            }
        }
    }
    let ig = C64::i() * g;
    Ok(CMatrix::from_fn(qp.n, qp.n, |j, k| {
        if j == k {
            qp.p[j]
        } else {
            ig / (qp.q[j] - qp.q[k])
        }
    }))
}

/// `L(z) = L + i g z⁻¹ e eᵀ`.
pub fn classic_lax(qp: &QModelPoint, g: C64, z: C64, distinct_rel: f64) -> Result<CMatrix> {
    if z.norm() == 0.0 {
        return Err(CmError::PoleAtZ { z });
    }
    let l = classic_l(qp, g, distinct_rel)?;
    let shift = C64::i() * g / z;
    Ok(CMatrix::from_fn(qp.n, qp.n, |j, k| l[(j, k)] + shift))
}

/// `P₀(Λ) = det(Λ − L)` and `P₁(Λ) = eᵀ adj(Λ − L) e`.
pub fn classic_curve(qp: &QModelPoint, g: C64, tol: &Tolerances) -> Result<(DensePoly, DensePoly)> {
    let l = classic_l(qp, g, tol.distinct_rel)?;
    let p0 = DensePoly::new(char_poly(&l)?);
    let n = qp.n;
    let scale = 1.0 + l.norm_max() * n as f64;
    let nodes: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(scale, std::f64::consts::TAU * (k as f64 + 0.5) / n as f64))
        .collect();
    let vals = nodes
        .iter()
        .map(|&x| classic_p1_eval(&l, x, tol))
        .collect::<Result<Vec<_>>>()?;
    let p1 = lagrange_interp(&nodes, &vals, tol.node_gap_rel, tol.pivot_rel)?.trimmed(tol.trim_rel);
    Ok((p0, p1))
}

/// `eᵀ adj(Λ − L) e`.
pub fn classic_p1_eval(l: &CMatrix, lam: C64, tol: &Tolerances) -> Result<C64> {
    let adj = adjugate(&shifted(l, lam), tol.pivot_rel, tol.adj_det_rel)?;
    Ok(adj.data().iter().sum())
}

/// `tr(adj(Λ − L) e eᵀ)`.
pub fn classic_p1_trace(l: &CMatrix, lam: C64, tol: &Tolerances) -> Result<C64> {
    let n = l.rows();
    let adj = adjugate(&shifted(l, lam), tol.pivot_rel, tol.adj_det_rel)?;
    let eet = CMatrix::from_fn(n, n, |_, _| ONE);
    Ok(adj.matmul(&eet)?.trace())
}
