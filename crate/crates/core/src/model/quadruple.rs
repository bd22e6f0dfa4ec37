use serde::{Deserialize, Serialize};

use super::coupling::Coupling;
use crate::error::{CmError, Result};
use crate::kernel::{CMatrix, Lu};
use crate::C64;

/// Signs under which a quadruple satisfies `[X,P] = s_g·g·1_V + s_w·v·w`.
///
/// `coupling_sign` multiplies the vertex couplings; `framing_sign` records the
/// sign that had to be applied to the displayed framing row `w` (the stored
/// `w` already carries it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convention {
    pub coupling_sign: f64,
    pub framing_sign: f64,
}

impl Convention {
    /// The convention both builders settle on.
    pub const ADOPTED: Convention = Convention {
        coupling_sign: -1.0,
        framing_sign: 1.0,
    };

    /// Candidate order tried by the builders. The adopted convention goes first
    /// so that points satisfying several candidates at once (e.g. `n = 1`,
    /// `m = 1`, where `[X,P] = 0`) are labelled consistently.
    pub const CANDIDATES: [Convention; 4] = [
        Convention { coupling_sign: -1.0, framing_sign: 1.0 },
        Convention { coupling_sign: 1.0, framing_sign: 1.0 },
        Convention { coupling_sign: 1.0, framing_sign: -1.0 },
        Convention { coupling_sign: -1.0, framing_sign: -1.0 },
    ];
}

/// Gauge-orbit representative `(X, P, v, w)` on `V = ⊕_{i<m} V_i`, `dim V_i = n`.
///
/// `X` is nonzero only on blocks `(i+1, i)`, `P` only on blocks `(i, i+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadruple {
    pub m: usize,
    pub n: usize,
    pub x: CMatrix,
    pub p: CMatrix,
    pub v: CMatrix,
    pub w: CMatrix,
    pub convention: Convention,
}

impl Quadruple {
    pub fn dim(&self) -> usize {
        self.m * self.n
    }

    /// Framing width `f` (1 spinless, `d·m` spin).
    pub fn framing_width(&self) -> usize {
        self.v.cols()
    }

    /// `X_i : V_i → V_{i+1}`.
    pub fn x_block(&self, i: usize) -> CMatrix {
        let m = self.m;
        self.x.block((i + 1) % m, i % m, self.n, self.n)
    }

    /// `P_i : V_{i+1} → V_i`.
    pub fn p_block(&self, i: usize) -> CMatrix {
        let m = self.m;
        self.p.block(i % m, (i + 1) % m, self.n, self.n)
    }

    /// Largest entry of `X` or `P` outside the cyclic block pattern.
    pub fn off_pattern(&self) -> f64 {
        let (m, n) = (self.m, self.n);
        let mut worst: f64 = 0.0;
        for r in 0..m * n {
            for c in 0..m * n {
                let (bi, bj) = (r / n, c / n);
                if bi != (bj + 1) % m {
                    worst = worst.max(self.x[(r, c)].norm());
                }
                if bj != (bi + 1) % m {
                    worst = worst.max(self.p[(r, c)].norm());
                }
            }
        }
        worst
    }

    fn residual_with(&self, coupling: &Coupling, conv: Convention) -> Result<f64> {
        let n = self.n;
        let mut r = self.x.commutator(&self.p)?;
        let vw = self.v.matmul(&self.w)?;
        for a in 0..self.dim() {
            r[(a, a)] -= coupling.g()[(a / n) % coupling.m()] * conv.coupling_sign;
        }
        let r = &r - &vw.scale(C64::new(conv.framing_sign, 0.0));
        Ok(r.norm_fro())
    }

    /// `‖[X,P] − s_g·g·1_V − v·w‖_F` under the recorded convention.
    pub fn moment_residual(&self, coupling: &Coupling) -> f64 {
        let conv = Convention {
            coupling_sign: self.convention.coupling_sign,
            framing_sign: 1.0,
        };
        self.residual_with(coupling, conv).unwrap_or(f64::INFINITY)
    }

    /// `‖[X,P] − g·1_V − v·w‖_F` with the signs exactly as displayed.
    pub fn moment_residual_literal(&self, coupling: &Coupling) -> f64 {
        let conv = Convention {
            coupling_sign: 1.0,
            framing_sign: 1.0,
        };
        self.residual_with(coupling, conv).unwrap_or(f64::INFINITY)
    }

    /// Tries the candidate conventions in order and adopts the first within `tol`.
    ///
    /// A negative framing sign is folded into the stored `w`.
    pub(crate) fn adopt_convention(mut self, coupling: &Coupling, tol: f64) -> Result<Self> {
        let mut best = f64::INFINITY;
        for conv in Convention::CANDIDATES {
            let r = self.residual_with(coupling, conv)?;
            best = best.min(r);
            if r <= tol {
                if conv.framing_sign < 0.0 {
                    self.w = self.w.scale(C64::new(-1.0, 0.0));
                }
                self.convention = conv;
                return Ok(self);
            }
        }
        Err(CmError::ConstraintViolation { residual: best })
    }

    /// Copy with the sign of `w` flipped (negative control for the constraint).
    pub fn with_flipped_framing(&self) -> Self {
        let mut q = self.clone();
        q.w = q.w.scale(C64::new(-1.0, 0.0));
        q
    }

    /// `M·(X,P,v,w) = (MXM⁻¹, MPM⁻¹, Mv, wM⁻¹)`.
    pub fn gauge(&self, mat: &CMatrix, pivot_rel: f64) -> Result<Quadruple> {
        if mat.rows() != self.dim() || !mat.is_square() {
            return Err(CmError::Dimension("gauge matrix must be mn×mn".into()));
        }
        let lu = Lu::factor(mat, pivot_rel)?;
        let inv = lu.solve(&CMatrix::identity(self.dim()))?;
        let cond = mat.norm_fro() * inv.norm_fro();
        if !(cond <= 1e8) {
            return Err(CmError::SingularMatrix {
                pivot: 1.0 / cond,
                threshold: 1e-8,
            });
        }
        Ok(Quadruple {
            m: self.m,
            n: self.n,
            x: &(mat * &self.x) * &inv,
            p: &(mat * &self.p) * &inv,
            v: mat * &self.v,
            w: &self.w * &inv,
            convention: self.convention,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_quadruple_has_zero_residual() {
        let k = Coupling::from_real(&[0.0, 0.0]).unwrap();
        let q = Quadruple {
            m: 2,
            n: 2,
            x: CMatrix::zeros(4, 4),
            p: CMatrix::zeros(4, 4),
            v: CMatrix::zeros(4, 1),
            w: CMatrix::zeros(1, 4),
            convention: Convention::ADOPTED,
        };
        assert_eq!(q.moment_residual(&k), 0.0);
        assert_eq!(q.off_pattern(), 0.0);
    }
}
