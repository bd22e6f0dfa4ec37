//! Dense complex linear algebra and polynomial utilities.

mod matrix;
mod poly;

pub use matrix::{
    adjugate, adjugate_cofactor, char_poly, determinant, inverse, lu_solve, CMatrix, Lu,
};
pub use poly::{eigenvalues, lagrange_interp, poly_roots, DensePoly};
