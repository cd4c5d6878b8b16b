//! Generalized symmetric-definite eigenproblem A x = λ M x.
//!
//! All eigenvalue problems in this solver pair a real symmetric left-hand
//! side with a symmetric positive-definite metric, so the problem reduces
//! through a Cholesky factorization of M to a standard symmetric problem;
//! no generalized Schur (QZ) machinery is ever needed.

use super::{sym_eig, Cholesky, RealMat};
use crate::error::Result;

/// Result of a generalized symmetric-definite eigensolve.
///
/// `values` ascending; column j of `vectors` satisfies
/// A x_j = values[j] M x_j, and the columns are M-orthonormal.
#[derive(Clone, Debug)]
pub struct GenEigResult {
    pub values: Vec<f64>,
    pub vectors: RealMat,
}

impl GenEigResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Solve A x = λ M x with A symmetric and M SPD.
///
/// M = L Lᵀ, W = L⁻¹ A L⁻ᵀ, then the standard symmetric solve on W and the
/// back-transform x = L⁻ᵀ y. The columns come out M-orthonormal because the
/// y's are orthonormal.
pub fn gen_eig_spd(a: &RealMat, m: &RealMat) -> Result<GenEigResult> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "gen_eig_spd: A must be square");
    assert_eq!(n, m.nrows(), "gen_eig_spd: dimension mismatch");
    if n == 0 {
        return Ok(GenEigResult { values: Vec::new(), vectors: RealMat::zeros(0, 0) });
    }
    let chol = Cholesky::new(m)?;
    let x = chol.forward_solve_mat(a);
    let w = chol.right_solve_lt(&x);
    // Symmetrize to wash out roundoff skew before the symmetric solve.
    let mut ws = RealMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            ws[(i, j)] = 0.5 * (w[(i, j)] + w[(j, i)]);
        }
    }
    let (values, y) = sym_eig(&ws)?;
    let vectors = chol.backward_solve_mat(&y);
    Ok(GenEigResult { values, vectors })
}
