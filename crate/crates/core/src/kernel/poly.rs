use serde::{Deserialize, Serialize};

use super::matrix::{char_poly, lu_solve, CMatrix};
use crate::error::{CmError, Result};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex polynomial, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensePoly {
    #[serde(with = "crate::serde_cx::vec")]
    pub coeffs: Vec<C64>,
}

impl DensePoly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        DensePoly { coeffs }
    }

    pub fn zero() -> Self {
        DensePoly { coeffs: vec![] }
    }

    pub fn constant(c: C64) -> Self {
        DensePoly { coeffs: vec![c] }
    }

    /// `∏ (z − r)`.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut p = DensePoly::constant(ONE);
        for &r in roots {
            p = p.mul(&DensePoly::new(vec![-r, ONE]));
        }
        p
    }

    /// Drops leading coefficients below `rel·max|coeff|`.
    pub fn trimmed(mut self, rel: f64) -> Self {
        let cut = rel * self.max_abs();
        while let Some(last) = self.coeffs.last() {
            if last.norm() <= cut {
                self.coeffs.pop();
            } else {
                break;
            }
        }
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    /// Degree of the stored coefficient vector; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| *c != ZERO)
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Horner evaluation of `Σ|c_k||z|^k`, the rounding scale of `eval`.
    pub fn eval_abs(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        DensePoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn add(&self, rhs: &DensePoly) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        DensePoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }

    pub fn sub(&self, rhs: &DensePoly) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        DensePoly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        DensePoly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, rhs: &DensePoly) -> Self {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return DensePoly::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        DensePoly::new(out)
    }

    /// Roots via Aberth–Ehrlich iteration.
    pub fn roots(&self, rel_tol: f64, max_iter: usize) -> Result<Vec<C64>> {
        poly_roots(self, rel_tol, max_iter)
    }
}

/// All roots of `p`, with multiplicity.
///
/// Iterates until the largest update is below `rel_tol` times the root scale,
/// or until every residual sits at the rounding level of the evaluation
/// (the only reachable stop for clustered roots).
pub fn poly_roots(p: &DensePoly, rel_tol: f64, max_iter: usize) -> Result<Vec<C64>> {
    let p = p.clone().trimmed(0.0);
    let deg = p
        .degree()
        .ok_or_else(|| CmError::InvalidInput("roots of the zero polynomial".into()))?;
    if deg == 0 {
        return Err(CmError::InvalidInput("roots of a constant polynomial".into()));
    }
    let lead = p.coeffs[deg];
    let monic = p.scale(ONE / lead);
    if deg == 1 {
        return Ok(vec![-monic.coeffs[0]]);
    }
    let dp = monic.derivative();
    let radius = 1.0 + monic.coeffs[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..deg)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4;
            C64::from_polar(radius, ang)
        })
        .collect();

    let eps = f64::EPSILON;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut max_step: f64 = 0.0;
        for k in 0..deg {
            let zk = z[k];
            let pv = monic.eval(zk);
            if pv == ZERO {
                continue;
            }
            let dv = dp.eval(zk);
            let ratio = pv / dv;
            let repulse: C64 = (0..deg)
                .filter(|&j| j != k)
                .map(|j| {
                    let d = zk - z[j];
                    if d == ZERO {
                        ZERO
                    } else {
                        ONE / d
                    }
                })
                .sum();
            let denom = ONE - ratio * repulse;
            let step = if denom.norm() == 0.0 || !denom.is_finite() {
                ratio
            } else {
                ratio / denom
            };
            if step.is_finite() {
                z[k] = zk - step;
                max_step = max_step.max(step.norm());
            }
        }
        let scale = z.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let mut at_rounding = true;
        residual = 0.0;
        for &zk in &z {
            let r = monic.eval(zk).norm();
            residual = residual.max(r);
            if r > 32.0 * deg as f64 * eps * monic.eval_abs(zk.norm()) {
                at_rounding = false;
            }
        }
        if max_step <= rel_tol * scale || at_rounding {
            return Ok(z);
        }
    }
    Err(CmError::NoConvergence {
        iterations: max_iter,
        residual,
        best: z,
    })
}

/// Interpolating polynomial of degree `< N` through `N` distinct nodes.
pub fn lagrange_interp(
    nodes: &[C64],
    values: &[C64],
    node_gap_rel: f64,
    pivot_rel: f64,
) -> Result<DensePoly> {
    if nodes.len() != values.len() {
        return Err(CmError::Dimension(format!(
            "{} nodes and {} values",
            nodes.len(),
            values.len()
        )));
    }
    let n = nodes.len();
    if n == 0 {
        return Ok(DensePoly::zero());
    }
    let scale = nodes.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            if (nodes[i] - nodes[j]).norm() <= node_gap_rel * scale {
                return Err(CmError::DuplicateNodes { first: i, second: j });
            }
        }
    }
    let vander = CMatrix::from_fn(n, n, |i, j| nodes[i].powu(j as u32));
    let rhs = CMatrix::from_fn(n, 1, |i, _| values[i]);
    let sol = lu_solve(&vander, &rhs, pivot_rel)?;
    Ok(DensePoly::new((0..n).map(|i| sol[(i, 0)]).collect()))
}

/// Eigenvalues of a square matrix: Aberth on the characteristic polynomial
/// followed by Newton polishing on `det(zI − A)`.
pub fn eigenvalues(a: &CMatrix, rel_tol: f64, max_iter: usize, pivot_rel: f64) -> Result<Vec<C64>> {
    let n = a.rows();
    if !a.is_square() {
        return Err(CmError::Dimension("eigenvalues of non-square matrix".into()));
    }
    if n == 0 {
        return Ok(vec![]);
    }
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    let cp = DensePoly::new(char_poly(a)?);
    let mut ev = poly_roots(&cp, rel_tol, max_iter)?;
    for z in ev.iter_mut() {
        *z = polish(a, *z, pivot_rel);
    }
    Ok(ev)
}

fn residual_norm(a: &CMatrix, z: C64, pivot_rel: f64) -> Option<f64> {
    let m = &CMatrix::identity(a.rows()).scale(z) - a;
    let lu = super::matrix::Lu::factor(&m, pivot_rel).ok()?;
    Some(lu.min_pivot)
}

/// Newton steps `z ← z − 1/tr((zI − A)⁻¹)`, kept only while the smallest LU
/// pivot of `zI − A` keeps shrinking.
fn polish(a: &CMatrix, mut z: C64, pivot_rel: f64) -> C64 {
    let n = a.rows();
    let Some(mut best) = residual_norm(a, z, pivot_rel) else {
        return z;
    };
    for _ in 0..3 {
        let m = &CMatrix::identity(n).scale(z) - a;
        let Ok(inv) = lu_solve(&m, &CMatrix::identity(n), pivot_rel) else {
            break;
        };
        let tr = inv.trace();
        if tr.norm() == 0.0 || !tr.is_finite() {
            break;
        }
        let cand = z - ONE / tr;
        match residual_norm(a, cand, pivot_rel) {
            Some(r) if r < best => {
                best = r;
                z = cand;
            }
            _ => break,
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sorted_re(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn roots_of_cubic() {
        // z^3 - 6z^2 + 11z - 6 = (z-1)(z-2)(z-3)
        let p = DensePoly::new(vec![c(-6.0, 0.0), c(11.0, 0.0), c(-6.0, 0.0), c(1.0, 0.0)]);
        let r = sorted_re(p.roots(1e-13, 500).unwrap());
        for (x, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - c(want, 0.0)).norm() < 1e-12, "{x}");
        }
    }

    #[test]
    fn roots_of_triple_root() {
        let p = DensePoly::from_roots(&[c(1.0, 0.0); 3]);
        let r = p.roots(1e-13, 500).unwrap();
        for x in r {
            assert!((x - c(1.0, 0.0)).norm() < 1e-4, "{x}");
        }
    }

    #[test]
    fn roots_of_unity() {
        let mut coeffs = vec![c(0.0, 0.0); 8];
        coeffs[0] = c(-1.0, 0.0);
        coeffs[7] = c(1.0, 0.0);
        let r = DensePoly::new(coeffs).roots(1e-13, 500).unwrap();
        for x in r {
            assert!((x.norm() - 1.0).abs() < 1e-13);
            assert!((x.powu(7) - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(DensePoly::constant(c(2.0, 0.0)).roots(1e-13, 500).is_err());
    }

    #[test]
    fn interp_constant() {
        let p = lagrange_interp(&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0); 2], 1e-10, 1e-13)
            .unwrap()
            .trimmed(1e-12);
        assert_eq!(p.degree(), Some(0));
        assert!((p.coeff(0) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn interp_recovers_poly() {
        let p = DensePoly::new(vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0), c(2.0, -1.0)]);
        let nodes: Vec<C64> = (0..4).map(|k| C64::from_polar(1.3, 0.7 + k as f64 * 1.5)).collect();
        let vals: Vec<C64> = nodes.iter().map(|&z| p.eval(z)).collect();
        let q = lagrange_interp(&nodes, &vals, 1e-10, 1e-13).unwrap();
        assert!(q.sub(&p).max_abs() < 1e-12);
    }

    #[test]
    fn interp_rejects_duplicates() {
        let r = lagrange_interp(&[c(1.0, 0.0), c(1.0, 0.0)], &[c(0.0, 0.0); 2], 1e-10, 1e-13);
        assert!(matches!(r, Err(CmError::DuplicateNodes { .. })));
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let a = CMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, 0.0), c(-1.0, 1.0), c(3.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
        ])
        .unwrap();
        let mut ev = eigenvalues(&a, 1e-13, 500, 1e-13).unwrap();
        for want in [c(2.0, 0.0), c(-1.0, 1.0), c(0.5, 0.0)] {
            let i = ev
                .iter()
                .enumerate()
                .min_by(|x, y| (x.1 - want).norm().partial_cmp(&(y.1 - want).norm()).unwrap())
                .unwrap()
                .0;
            assert!((ev[i] - want).norm() < 1e-12);
            ev.remove(i);
        }
    }

    #[test]
    fn trim_and_degree() {
        let p = DensePoly::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(1e-15, 0.0)]).trimmed(1e-12);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(DensePoly::zero().degree(), None);
    }
}
