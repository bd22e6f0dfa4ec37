use serde::{Deserialize, Serialize};

use crate::error::{CmError, Result};
use crate::kernel::CMatrix;
use crate::C64;

/// Canonical coordinates `(λ, φ)` of a point on the dense open subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub m: usize,
    pub n: usize,
    #[serde(with = "crate::serde_cx::vec")]
    pub lambda: Vec<C64>,
    #[serde(with = "crate::serde_cx::vec")]
    pub phi: Vec<C64>,
}

/// Spin framing blocks: `v[i]` is `n×d` and `w[i]` is `d×n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinFraming {
    pub d: usize,
    pub v: Vec<CMatrix>,
    pub w: Vec<CMatrix>,
}

/// Positions and momenta of the dual model: `q_j ≠ 0`, `q_j^m` distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QModelPoint {
    pub m: usize,
    pub n: usize,
    #[serde(with = "crate::serde_cx::vec")]
    pub p: Vec<C64>,
    #[serde(with = "crate::serde_cx::vec")]
    pub q: Vec<C64>,
}

/// Fails unless all `x_j` are nonzero and the `x_j^m` pairwise separated.
pub(crate) fn check_generic(x: &[C64], m: usize, distinct_rel: f64, what: &str) -> Result<()> {
    if let Some(j) = x.iter().position(|z| z.norm() == 0.0 || !z.is_finite()) {
        return Err(CmError::DegeneratePoint(format!("{what}_{j} = 0")));
    }
    let pw: Vec<C64> = x.iter().map(|z| z.powu(m as u32)).collect();
    let scale = pw.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for j in 0..pw.len() {
        for k in j + 1..pw.len() {
            if (pw[j] - pw[k]).norm() <= distinct_rel * scale {
                return Err(CmError::DegeneratePoint(format!(
                    "{what}_{j}^m and {what}_{k}^m coincide"
                )));
            }
        }
    }
    Ok(())
}

impl SpectralPoint {
    pub fn new(m: usize, lambda: Vec<C64>, phi: Vec<C64>) -> Result<Self> {
        if lambda.len() != phi.len() {
            return Err(CmError::Dimension(format!(
                "{} eigenvalues and {} conjugates",
                lambda.len(),
                phi.len()
            )));
        }
        let p = SpectralPoint {
            m,
            n: lambda.len(),
            lambda,
            phi,
        };
        Ok(p)
    }

    pub fn validate(&self, distinct_rel: f64) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(CmError::InvalidInput("m and n must be positive".into()));
        }
        if self.lambda.len() != self.n || self.phi.len() != self.n {
            return Err(CmError::Dimension("point arrays do not have length n".into()));
        }
        if self.phi.iter().any(|z| !z.is_finite()) {
            return Err(CmError::InvalidInput("non-finite φ".into()));
        }
        check_generic(&self.lambda, self.m, distinct_rel, "λ")
    }

    pub fn lambda_pow_m(&self) -> Vec<C64> {
        self.lambda.iter().map(|z| z.powu(self.m as u32)).collect()
    }
}

impl SpinFraming {
    pub fn new(d: usize, v: Vec<CMatrix>, w: Vec<CMatrix>) -> Result<Self> {
        if v.len() != w.len() || v.is_empty() {
            return Err(CmError::Dimension("framing needs m blocks of v and w".into()));
        }
        let n = v[0].rows();
        for (vi, wi) in v.iter().zip(&w) {
            if vi.rows() != n || vi.cols() != d || wi.rows() != d || wi.cols() != n {
                return Err(CmError::Dimension(format!(
                    "framing blocks must be {n}x{d} and {d}x{n}"
                )));
            }
        }
        Ok(SpinFraming { d, v, w })
    }

    /// The framing of the spinless model: `ṽ_0 = (1…1)ᵀ`, `w̃_0 = |g|(1…1)`, other blocks zero.
    pub fn spinless(m: usize, n: usize, abs_g: C64) -> Self {
        let one = C64::new(1.0, 0.0);
        let mut v = vec![CMatrix::zeros(n, 1); m];
        let mut w = vec![CMatrix::zeros(1, n); m];
        v[0] = CMatrix::from_fn(n, 1, |_, _| one);
        w[0] = CMatrix::from_fn(1, n, |_, _| abs_g);
        SpinFraming { d: 1, v, w }
    }

    pub fn m(&self) -> usize {
        self.v.len()
    }

    pub fn n(&self) -> usize {
        self.v[0].rows()
    }

    /// `ṽ_i w̃_i` with `i` taken mod `m`.
    pub fn mu(&self, i: isize) -> CMatrix {
        let m = self.m() as isize;
        let k = i.rem_euclid(m) as usize;
        &self.v[k] * &self.w[k]
    }

    /// All `ṽ_i w̃_i`, indexed by `i`.
    pub fn mus(&self) -> Vec<CMatrix> {
        (0..self.m()).map(|i| self.mu(i as isize)).collect()
    }

    /// `max_j |Σ_i [ṽ_i w̃_i]_{jj} − |g||`.
    pub fn constraint_residual(&self, abs_g: C64) -> f64 {
        let mus = self.mus();
        (0..self.n())
            .map(|j| {
                let s: C64 = mus.iter().map(|mu| mu[(j, j)]).sum();
                (s - abs_g).norm()
            })
            .fold(0.0, f64::max)
    }
}

impl QModelPoint {
    pub fn new(m: usize, p: Vec<C64>, q: Vec<C64>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(CmError::Dimension("p and q lengths differ".into()));
        }
        Ok(QModelPoint {
            m,
            n: q.len(),
            p,
            q,
        })
    }

    pub fn validate(&self, distinct_rel: f64) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(CmError::InvalidInput("m and n must be positive".into()));
        }
        check_generic(&self.q, self.m, distinct_rel, "q")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn rejects_zero_and_collisions() {
        let p = SpectralPoint::new(2, vec![c(1.0), c(-1.0)], vec![c(0.0); 2]).unwrap();
        assert!(matches!(p.validate(1e-9), Err(CmError::DegeneratePoint(_))));
        let p = SpectralPoint::new(1, vec![c(1.0), c(-1.0)], vec![c(0.0); 2]).unwrap();
        assert!(p.validate(1e-9).is_ok());
        let q = QModelPoint::new(1, vec![c(0.0); 2], vec![c(0.0), c(1.0)]).unwrap();
        assert!(matches!(q.validate(1e-9), Err(CmError::DegeneratePoint(_))));
    }

    #[test]
    fn spinless_framing_is_on_constraint() {
        let f = SpinFraming::spinless(3, 4, c(2.5));
        assert!(f.constraint_residual(c(2.5)) < 1e-15);
        assert_eq!(f.mu(-3), f.mu(0));
    }
}
