use serde::{Deserialize, Serialize};

use crate::error::{CmError, Result};
use crate::C64;

/// Coupling constants `g_0..g_{m−1}` with the derived `c_i` and `|g|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CouplingRepr", into = "CouplingRepr")]
pub struct Coupling {
    m: usize,
    g: Vec<C64>,
    abs_g: C64,
    c: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct CouplingRepr {
    m: usize,
    #[serde(with = "crate::serde_cx::vec")]
    g: Vec<C64>,
    #[serde(with = "crate::serde_cx::scalar")]
    abs_g: C64,
    #[serde(with = "crate::serde_cx::vec")]
    c: Vec<C64>,
}

impl From<Coupling> for CouplingRepr {
    fn from(k: Coupling) -> Self {
        CouplingRepr {
            m: k.m,
            g: k.g,
            abs_g: k.abs_g,
            c: k.c,
        }
    }
}

impl TryFrom<CouplingRepr> for Coupling {
    type Error = CmError;
    fn try_from(r: CouplingRepr) -> Result<Self> {
        if r.g.len() != r.m {
            return Err(CmError::InvalidInput(format!(
                "coupling with m = {} and {} entries",
                r.m,
                r.g.len()
            )));
        }
        Coupling::new(r.g)
    }
}

/// Outcome of the regularity scan, with the offending relation if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub regular: bool,
    pub k_max: i64,
    /// `(k, h, i)` with `k·|g| = g_h + … + g_{i−1}`.
    pub witness: Option<(i64, usize, usize)>,
    pub reason: String,
}

impl Coupling {
    pub fn new(g: Vec<C64>) -> Result<Self> {
        if g.is_empty() {
            return Err(CmError::InvalidInput("coupling needs m >= 1 entries".into()));
        }
        let m = g.len();
        let abs_g: C64 = g.iter().sum();
        let shift: C64 = g
            .iter()
            .enumerate()
            .map(|(s, &gs)| gs * ((m - s) as f64 / m as f64))
            .sum();
        let mut c = Vec::with_capacity(m);
        let mut partial = C64::new(0.0, 0.0);
        for &gi in &g {
            partial += gi;
            c.push(partial - shift);
        }
        Ok(Coupling { m, g, abs_g, c })
    }

    pub fn from_real(g: &[f64]) -> Result<Self> {
        Self::new(g.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn g(&self) -> &[C64] {
        &self.g
    }

    pub fn abs_g(&self) -> C64 {
        self.abs_g
    }

    /// `c_i` for `i` taken mod `m`.
    pub fn c(&self, i: usize) -> C64 {
        self.c[i % self.m]
    }

    pub fn cs(&self) -> &[C64] {
        &self.c
    }

    /// `Σ_{r<i} g_r − Σ_s ((m−s)/m) g_s`, i.e. `c_{i−1}` read with an empty sum at `i = 0`.
    pub fn c_before(&self, i: usize) -> C64 {
        self.c[i] - self.g[i]
    }

    /// Scans `k·|g| ≠ g_h + … + g_{i−1}` for `1 ≤ h < i ≤ m−1`, `|k| ≤ K_max`.
    pub fn is_regular(&self, eq_tol: f64) -> Regularity {
        let ag = self.abs_g.norm();
        if ag <= eq_tol {
            return Regularity {
                regular: false,
                k_max: 0,
                witness: None,
                reason: "|g| = 0".into(),
            };
        }
        let mut sums = Vec::new();
        for h in 1..self.m {
            for i in h + 1..self.m {
                let s: C64 = self.g[h..i].iter().sum();
                sums.push((h, i, s));
            }
        }
        let max_partial = sums.iter().map(|t| t.2.norm()).fold(0.0, f64::max);
        let k_max = (max_partial / ag).ceil() as i64 + 1;
        let tol = eq_tol * ag.max(1.0);
        for &(h, i, s) in &sums {
            for k in -k_max..=k_max {
                if (self.abs_g * k as f64 - s).norm() <= tol {
                    return Regularity {
                        regular: false,
                        k_max,
                        witness: Some((k, h, i)),
                        reason: format!("{k}·|g| = g_{h} + … + g_{}", i - 1),
                    };
                }
            }
        }
        Regularity {
            regular: true,
            k_max,
            witness: None,
            reason: "no resonance".into(),
        }
    }
}

/// Builds the coupling for `g` after checking its length against `m`.
pub fn derived_constants(m: usize, g: &[C64]) -> Result<Coupling> {
    if g.len() != m {
        return Err(CmError::InvalidInput(format!(
            "expected {m} coupling constants, got {}",
            g.len()
        )));
    }
    Coupling::new(g.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: f64) -> bool {
        (a - C64::new(b, 0.0)).norm() < 1e-14
    }

    #[test]
    fn single_vertex() {
        let k = Coupling::from_real(&[7.0]).unwrap();
        assert!(close(k.c(0), 0.0));
        assert!(close(k.abs_g(), 7.0));
    }

    #[test]
    fn two_vertices() {
        // c_0 = 1 − (1 + 2/2) = −1, c_1 = 3 − 2 = 1
        let k = Coupling::from_real(&[1.0, 2.0]).unwrap();
        assert!(close(k.abs_g(), 3.0));
        assert!(close(k.c(0), -1.0));
        assert!(close(k.c(1), 1.0));
    }

    #[test]
    fn c_before_reads_empty_sum() {
        let k = Coupling::from_real(&[1.0, 2.0, -0.5]).unwrap();
        assert!((k.c_before(0) - (k.c(2) - k.abs_g())).norm() < 1e-14);
        assert!((k.c_before(2) - k.c(1)).norm() < 1e-14);
    }

    #[test]
    fn regularity_examples() {
        assert!(Coupling::from_real(&[1.0]).unwrap().is_regular(1e-10).regular);
        assert!(!Coupling::from_real(&[1.0, -1.0]).unwrap().is_regular(1e-10).regular);
        let r = Coupling::from_real(&[2.0, 1.0, 1.0]).unwrap().is_regular(1e-10);
        assert!(r.regular);
        assert_eq!(r.k_max, 2);
        // g_1 = 0 = 0·|g|
        let r = Coupling::from_real(&[1.0, 0.0, 1.0]).unwrap().is_regular(1e-10);
        assert!(!r.regular);
        assert_eq!(r.witness, Some((0, 1, 2)));
    }

    #[test]
    fn json_roundtrip() {
        let k = Coupling::new(vec![C64::new(1.0, 0.5), C64::new(-0.3, 0.0)]).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        let back: Coupling = serde_json::from_str(&s).unwrap();
        assert_eq!(k, back);
    }
}
