use super::coupling::Coupling;
use super::point::{QModelPoint, SpectralPoint, SpinFraming};
use super::quadruple::{Convention, Quadruple};
use crate::error::{CmError, Result};
use crate::kernel::CMatrix;
use crate::C64;

/// Discriminating threshold for convention adoption, relative to `‖X‖‖P‖`.
const ADOPT_REL: f64 = 1e-6;

fn adopt_tol(x: &CMatrix, p: &CMatrix) -> f64 {
    ADOPT_REL * (1.0 + x.norm_fro() * p.norm_fro())
}

/// Places `ṽ_i` on the diagonal blocks of an `mn×dm` matrix and `w̃_i` of a `dm×mn` one.
pub fn embed_framing(framing: &SpinFraming) -> (CMatrix, CMatrix) {
    let (m, n, d) = (framing.m(), framing.n(), framing.d);
    let mut v = CMatrix::zeros(m * n, m * d);
    let mut w = CMatrix::zeros(m * d, m * n);
    for i in 0..m {
        v.set_block(i, i, &framing.v[i]);
        w.set_block(i, i, &framing.w[i]);
    }
    (v, w)
}

/// The `Q̃` blocks `X_i : V_i → V_{i+1}` of the dual model for any framing.
pub fn dual_x_blocks(point: &SpectralPoint, coupling: &Coupling, framing: &SpinFraming) -> Vec<CMatrix> {
    let (m, n) = (point.m, point.n);
    let lam = &point.lambda;
    let lam_m = point.lambda_pow_m();
    let mus = framing.mus();
    let mu = |i: isize| &mus[i.rem_euclid(m as isize) as usize];
    // K_j = Σ_s ((m−s)/m) μ_s,jj
    let shift: Vec<C64> = (0..n)
        .map(|j| {
            (0..m)
                .map(|s| mus[s][(j, j)] * ((m - s) as f64 / m as f64))
                .sum()
        })
        .collect();
    let mut partial = vec![C64::new(0.0, 0.0); n];
    (0..m)
        .map(|i| {
            for j in 0..n {
                partial[j] += mus[i][(j, j)];
            }
            CMatrix::from_fn(n, n, |j, k| {
                if j == k {
                    let t = coupling.c(i) - (partial[j] - shift[j]);
                    point.phi[j] + t / lam[j]
                } else {
                    let s: C64 = (0..m)
                        .map(|h| {
                            mu(i as isize - h as isize)[(j, k)]
                                * lam[j].powu((m - h - 1) as u32)
                                * lam[k].powu(h as u32)
                        })
                        .sum();
                    -s / (lam_m[j] - lam_m[k])
                }
            })
        })
        .collect()
}

/// Dual (P-diagonal) representative `(Q̃, L̃, ṽ, w̃)` of a spectral point.
pub fn build_dual(
    point: &SpectralPoint,
    coupling: &Coupling,
    framing: Option<&SpinFraming>,
    distinct_rel: f64,
) -> Result<Quadruple> {
    point.validate(distinct_rel)?;
    check_m(point.m, coupling)?;
    let (m, n) = (point.m, point.n);
    let spinless = SpinFraming::spinless(m, n, coupling.abs_g());
    let fr = match framing {
        Some(f) => {
            if f.m() != m || f.n() != n {
                return Err(CmError::Dimension("framing does not match the point".into()));
            }
            f
        }
        None => &spinless,
    };
    let blocks = dual_x_blocks(point, coupling, fr);
    let mut x = CMatrix::zeros(m * n, m * n);
    let mut p = CMatrix::zeros(m * n, m * n);
    let lam = CMatrix::diag(&point.lambda);
    for (i, b) in blocks.iter().enumerate() {
        x.set_block((i + 1) % m, i, b);
        p.set_block(i, (i + 1) % m, &lam);
    }
    let (v, w) = match framing {
        Some(f) => embed_framing(f),
        None => {
            let mut v = CMatrix::zeros(m * n, 1);
            let mut w = CMatrix::zeros(1, m * n);
            for j in 0..n {
                v[(j, 0)] = C64::new(1.0, 0.0);
                w[(0, j)] = coupling.abs_g();
            }
            (v, w)
        }
    };
    let tol = adopt_tol(&x, &p);
    Quadruple {
        m,
        n,
        x,
        p,
        v,
        w,
        convention: Convention::ADOPTED,
    }
    .adopt_convention(coupling, tol)
}

/// Position-diagonal representative `(X, L, v, w)` of a dual-model point.
pub fn build_qmodel(qp: &QModelPoint, coupling: &Coupling, distinct_rel: f64) -> Result<Quadruple> {
    qp.validate(distinct_rel)?;
    check_m(qp.m, coupling)?;
    let (m, n) = (qp.m, qp.n);
    let q = &qp.q;
    let q_m: Vec<C64> = q.iter().map(|z| z.powu(m as u32)).collect();
    let ag = coupling.abs_g();
    let mut x = CMatrix::zeros(m * n, m * n);
    let mut p = CMatrix::zeros(m * n, m * n);
    let qd = CMatrix::diag(q);
    for i in 0..m {
        x.set_block((i + 1) % m, i, &qd);
        let li = CMatrix::from_fn(n, n, |j, k| {
            if j == k {
                qp.p[j] + coupling.c(i) / q[j]
            } else {
                ag * q[j].powu(i as u32) * q[k].powu((m - i - 1) as u32) / (q_m[j] - q_m[k])
            }
        });
        p.set_block(i, (i + 1) % m, &li);
    }
    let mut v = CMatrix::zeros(m * n, 1);
    let mut w = CMatrix::zeros(1, m * n);
    for j in 0..n {
        v[(j, 0)] = C64::new(1.0, 0.0);
        w[(0, j)] = ag;
    }
    let tol = adopt_tol(&x, &p);
    Quadruple {
        m,
        n,
        x,
        p,
        v,
        w,
        convention: Convention::ADOPTED,
    }
    .adopt_convention(coupling, tol)
}

fn check_m(m: usize, coupling: &Coupling) -> Result<()> {
    if coupling.m() != m {
        return Err(CmError::Dimension(format!(
            "point has m = {m}, coupling has m = {}",
            coupling.m()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn one_by_one_dual() {
        let k = Coupling::from_real(&[1.0]).unwrap();
        let pt = SpectralPoint::new(1, vec![c(2.0)], vec![c(3.0)]).unwrap();
        let q = build_dual(&pt, &k, None, 1e-9).unwrap();
        assert_eq!(q.x[(0, 0)], c(3.0));
        assert_eq!(q.p[(0, 0)], c(2.0));
        assert_eq!(q.v[(0, 0)], c(1.0));
        assert_eq!(q.w[(0, 0)], c(1.0));
        assert_eq!(q.convention, Convention::ADOPTED);
    }

    #[test]
    fn two_vertex_dual_blocks() {
        let k = Coupling::from_real(&[1.0, 2.0]).unwrap();
        let pt = SpectralPoint::new(2, vec![c(1.0)], vec![c(0.0)]).unwrap();
        let q = build_dual(&pt, &k, None, 1e-9).unwrap();
        assert!((q.x_block(0)[(0, 0)] - c(-1.0)).norm() < 1e-14);
        assert!((q.x_block(1)[(0, 0)] - c(1.0)).norm() < 1e-14);
        assert!(q.moment_residual(&k) < 1e-12);
    }

    #[test]
    fn one_by_one_qmodel() {
        let k = Coupling::from_real(&[1.0]).unwrap();
        let qp = QModelPoint::new(1, vec![c(3.0)], vec![c(2.0)]).unwrap();
        let q = build_qmodel(&qp, &k, 1e-9).unwrap();
        assert_eq!(q.x[(0, 0)], c(2.0));
        assert_eq!(q.p[(0, 0)], c(3.0));
    }

    #[test]
    fn qmodel_rejects_zero_position() {
        let k = Coupling::from_real(&[1.0]).unwrap();
        let qp = QModelPoint::new(1, vec![c(0.0); 2], vec![c(0.0), c(1.0)]).unwrap();
        assert!(matches!(build_qmodel(&qp, &k, 1e-9), Err(CmError::DegeneratePoint(_))));
    }

    #[test]
    fn spinless_framing_reproduces_spinless_blocks() {
        let k = Coupling::from_real(&[0.7, -0.2, 1.1]).unwrap();
        let pt = SpectralPoint::new(
            3,
            vec![C64::new(0.9, 0.2), C64::new(-0.4, 1.3)],
            vec![C64::new(0.1, 0.5), C64::new(-0.7, 0.0)],
        )
        .unwrap();
        let fr = SpinFraming::spinless(3, 2, k.abs_g());
        let a = build_dual(&pt, &k, None, 1e-9).unwrap();
        let b = build_dual(&pt, &k, Some(&fr), 1e-9).unwrap();
        assert!((&a.x - &b.x).norm_max() < 1e-14);
        assert!(a.moment_residual(&k) < 1e-12);
        assert!(b.moment_residual(&k) < 1e-12);
    }
}
