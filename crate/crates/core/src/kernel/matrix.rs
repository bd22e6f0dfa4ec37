use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{CmError, Result};
use crate::C64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl From<CMatrix> for MatrixRepr {
    fn from(m: CMatrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixRepr> for CMatrix {
    type Error = CmError;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        if r.data.len() != r.rows * r.cols {
            return Err(CmError::Dimension(format!(
                "{}x{} matrix with {} entries",
                r.rows,
                r.cols,
                r.data.len()
            )));
        }
        Ok(CMatrix {
            rows: r.rows,
            cols: r.cols,
            data: r.data.into_iter().map(|[a, b]| C64::new(a, b)).collect(),
        })
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(CmError::Dimension("ragged rows".into()));
        }
        Ok(CMatrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let v: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&v)
    }

    pub fn diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `n×n` block at block coordinates `(bi, bj)`.
    pub fn block(&self, bi: usize, bj: usize, br: usize, bc: usize) -> Self {
        Self::from_fn(br, bc, |i, j| self[(bi * br + i, bj * bc + j)])
    }

    pub fn set_block(&mut self, bi: usize, bj: usize, b: &CMatrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(bi * b.rows + i, bj * b.cols + j)] = b[(i, j)];
            }
        }
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(CmError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, rhs: &CMatrix) -> Result<CMatrix> {
        Ok(&self.matmul(rhs)? - &rhs.matmul(self)?)
    }

    fn zip_with(&self, rhs: &CMatrix, f: impl Fn(C64, C64) -> C64) -> CMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch in elementwise op"
        );
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn minor(&self, row: usize, col: usize) -> CMatrix {
        let n = self.rows;
        Self::from_fn(n - 1, self.cols - 1, |i, j| {
            let ii = if i < row { i } else { i + 1 };
            let jj = if j < col { j } else { j + 1 };
            self[(ii, jj)]
        })
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matrix shapes must agree")
    }
}

/// LU factorization `PA = LU` with partial pivoting, stored compactly.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    sign: f64,
    /// Smallest pivot magnitude encountered.
    pub min_pivot: f64,
    /// Threshold the pivots were compared against.
    pub threshold: f64,
}

impl Lu {
    pub fn factor(a: &CMatrix, pivot_rel: f64) -> Result<Lu> {
        if !a.is_square() {
            return Err(CmError::Dimension(format!(
                "LU of {}x{} matrix",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let threshold = pivot_rel * a.norm_max();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (p, mag) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            min_pivot = min_pivot.min(mag);
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[(k, k)];
            if mag == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        if n == 0 {
            min_pivot = 0.0;
        }
        Ok(Lu {
            lu,
            perm,
            sign,
            min_pivot,
            threshold,
        })
    }

    pub fn is_singular(&self) -> bool {
        self.lu.rows > 0 && !(self.min_pivot > self.threshold)
    }

    pub fn determinant(&self) -> C64 {
        if self.is_singular() {
            return C64::new(0.0, 0.0);
        }
        self.lu
            .diagonal()
            .into_iter()
            .fold(C64::new(self.sign, 0.0), |acc, d| acc * d)
    }

    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        let n = self.lu.rows;
        if b.rows != n {
            return Err(CmError::Dimension(format!(
                "solve with {n}x{n} system and {} rhs rows",
                b.rows
            )));
        }
        if self.is_singular() {
            return Err(CmError::SingularMatrix {
                pivot: self.min_pivot,
                threshold: self.threshold,
            });
        }
        let mut x = CMatrix::from_fn(n, b.cols, |i, j| b[(self.perm[i], j)]);
        for c in 0..b.cols {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        Ok(x)
    }
}

pub fn lu_solve(a: &CMatrix, b: &CMatrix, pivot_rel: f64) -> Result<CMatrix> {
    Lu::factor(a, pivot_rel)?.solve(b)
}

pub fn inverse(a: &CMatrix, pivot_rel: f64) -> Result<CMatrix> {
    lu_solve(a, &CMatrix::identity(a.rows()), pivot_rel)
}

/// Determinant via LU; returns zero when a pivot falls below the threshold.
pub fn determinant(a: &CMatrix, pivot_rel: f64) -> Result<C64> {
    if a.rows() == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    Ok(Lu::factor(a, pivot_rel)?.determinant())
}

/// Coefficients `c_0..c_n` (ascending) of `det(zI − A)` by Faddeev–LeVerrier.
pub fn char_poly(a: &CMatrix) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(CmError::Dimension("char_poly of non-square matrix".into()));
    }
    let n = a.rows();
    let mut c = vec![C64::new(0.0, 0.0); n + 1];
    c[n] = C64::new(1.0, 0.0);
    let mut m = CMatrix::zeros(n, n);
    for k in 1..=n {
        let mut am = a * &m;
        for i in 0..n {
            am[(i, i)] += c[n - k + 1];
        }
        m = am;
        let tr = (a * &m).trace();
        c[n - k] = -tr / k as f64;
    }
    Ok(c)
}

/// Classical adjugate, `A·adj(A) = det(A)·I`.
///
/// Uses `det(A)·A⁻¹` when the determinant is safely away from zero and falls
/// back to cofactor expansion otherwise.
pub fn adjugate(a: &CMatrix, pivot_rel: f64, adj_det_rel: f64) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(CmError::Dimension("adjugate of non-square matrix".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    if n == 1 {
        return Ok(CMatrix::identity(1));
    }
    let lu = Lu::factor(a, pivot_rel)?;
    let det = lu.determinant();
    let scale = a.norm_max().powi(n as i32);
    if det.norm() > adj_det_rel * scale {
        let inv = lu.solve(&CMatrix::identity(n))?;
        return Ok(inv.scale(det));
    }
    adjugate_cofactor(a, pivot_rel)
}

pub fn adjugate_cofactor(a: &CMatrix, pivot_rel: f64) -> Result<CMatrix> {
    let n = a.rows();
    let mut adj = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sgn = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(j, i)] = determinant_exact(&a.minor(i, j), pivot_rel)? * sgn;
        }
    }
    Ok(adj)
}

/// Determinant via LU without the singular cutoff, for cofactors of nearly singular matrices.
fn determinant_exact(a: &CMatrix, pivot_rel: f64) -> Result<C64> {
    if a.rows() == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let lu = Lu::factor(a, pivot_rel)?;
    Ok(lu
        .lu
        .diagonal()
        .into_iter()
        .fold(C64::new(lu.sign, 0.0), |acc, d| acc * d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample(n: usize, seed: u64) -> CMatrix {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        CMatrix::from_fn(n, n, |_, _| c(next(), next()))
    }

    #[test]
    fn det_of_small_real() {
        let a = CMatrix::from_real(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let d = determinant(&a, 1e-13).unwrap();
        assert!((d - c(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_det_is_zero() {
        let a = CMatrix::from_real(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert_eq!(determinant(&a, 1e-13).unwrap(), c(0.0, 0.0));
        assert!(matches!(
            lu_solve(&a, &CMatrix::identity(2), 1e-13),
            Err(CmError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn char_poly_of_companion() {
        let a = CMatrix::from_real(&[&[0.0, 1.0], &[-2.0, 3.0]]).unwrap();
        let p = char_poly(&a).unwrap();
        let want = [c(2.0, 0.0), c(-3.0, 0.0), c(1.0, 0.0)];
        for (x, y) in p.iter().zip(want) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn char_poly_matches_determinant() {
        let a = sample(5, 3);
        let p = char_poly(&a).unwrap();
        let z = c(0.3, -0.7);
        let direct = determinant(&(&CMatrix::identity(5).scale(z) - &a), 1e-13).unwrap();
        let horner = p.iter().rev().fold(c(0.0, 0.0), |acc, &k| acc * z + k);
        assert!((direct - horner).norm() < 1e-12);
    }

    #[test]
    fn adjugate_identity_both_routes() {
        let a = sample(4, 11);
        let det = determinant(&a, 1e-13).unwrap();
        for adj in [
            adjugate(&a, 1e-13, 1e-10).unwrap(),
            adjugate_cofactor(&a, 1e-13).unwrap(),
        ] {
            let prod = &a * &adj;
            let want = CMatrix::identity(4).scale(det);
            assert!((&prod - &want).norm_fro() < 1e-12);
        }
    }

    #[test]
    fn adjugate_of_singular() {
        let a = CMatrix::from_real(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        let adj = adjugate(&a, 1e-13, 1e-10).unwrap();
        let want = CMatrix::from_real(&[&[4.0, -2.0], &[-2.0, 1.0]]).unwrap();
        assert!((&adj - &want).norm_fro() < 1e-14);
    }

    #[test]
    fn solve_roundtrip() {
        let a = sample(6, 5);
        let b = sample(6, 9);
        let x = lu_solve(&a, &b, 1e-13).unwrap();
        assert!((&(&a * &x) - &b).norm_fro() < 1e-11);
    }

    #[test]
    fn serde_roundtrip() {
        let a = sample(3, 1);
        let s = serde_json::to_string(&a).unwrap();
        let b: CMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }
}
