//! LDLᵀ factorization of complex symmetric matrices with Bunch–Kaufman
//! 1×1 / 2×2 pivoting.
//!
//! Symmetric here means Kᵀ = K (plain transpose), which is what the
//! saddle-point systems of the substructuring scheme produce. Pivoting is
//! magnitude-based; the working matrix is kept fully symmetric so swaps and
//! rank updates stay simple at subdomain scale.

use super::ComplexMat;
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

const ALPHA: f64 = 0.6403882032022076; // (1 + sqrt(17)) / 8

#[derive(Clone, Copy, Debug)]
enum Pivot {
    Single(usize),
    Double(usize),
}

/// P K Pᵀ = L D Lᵀ with unit lower-triangular L and block-diagonal D.
#[derive(Clone, Debug)]
pub struct LdltFactor {
    work: ComplexMat,
    perm: Vec<usize>,
    pivots: Vec<Pivot>,
}

impl LdltFactor {
    pub fn new(k: &ComplexMat) -> Result<Self> {
        let n = k.nrows();
        assert_eq!(n, k.ncols(), "ldlt requires a square matrix");
        let mut a = k.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::new();
        let floor = n.max(1) as f64 * f64::EPSILON * a.norm_max();

        let mut col = 0;
        while col < n {
            if col == n - 1 {
                let d = a[(col, col)];
                if d.norm() <= floor {
                    return Err(Error::Singular { context: format!("ldlt pivot {col}") });
                }
                pivots.push(Pivot::Single(col));
                col += 1;
                continue;
            }

            // Largest off-diagonal magnitude in column col below the diagonal.
            let mut lambda = 0.0;
            let mut r = col + 1;
            for i in col + 1..n {
                let v = a[(i, col)].norm();
                if v > lambda {
                    lambda = v;
                    r = i;
                }
            }
            let akk = a[(col, col)].norm();

            let use_two = if akk >= ALPHA * lambda {
                false
            } else {
                let mut sigma = 0.0f64;
                for i in col..n {
                    if i != r {
                        sigma = sigma.max(a[(i, r)].norm());
                    }
                }
                if akk * sigma >= ALPHA * lambda * lambda {
                    false
                } else if a[(r, r)].norm() >= ALPHA * sigma {
                    swap_sym(&mut a, &mut perm, col, r);
                    false
                } else {
                    swap_sym(&mut a, &mut perm, col + 1, r);
                    true
                }
            };

            if !use_two {
                let d = a[(col, col)];
                if d.norm() <= floor {
                    return Err(Error::Singular { context: format!("ldlt pivot {col}") });
                }
                let inv = C64::new(1.0, 0.0) / d;
                let w: Vec<C64> = (col + 1..n).map(|i| a[(i, col)]).collect();
                for (ii, i) in (col + 1..n).enumerate() {
                    let m = w[ii] * inv;
                    if m.norm_sqr() != 0.0 {
                        let row = a.row_mut(i);
                        for (jj, j) in (col + 1..n).enumerate() {
                            row[j] -= m * w[jj];
                        }
                    }
                    a[(i, col)] = m;
                    a[(col, i)] = m;
                }
                pivots.push(Pivot::Single(col));
                col += 1;
            } else {
                let d11 = a[(col, col)];
                let d21 = a[(col + 1, col)];
                let d22 = a[(col + 1, col + 1)];
                let det = d11 * d22 - d21 * d21;
                if det.norm() == 0.0 {
                    return Err(Error::Singular { context: format!("ldlt 2x2 pivot {col}") });
                }
                let inv_det = C64::new(1.0, 0.0) / det;
                let w1: Vec<C64> = (col + 2..n).map(|i| a[(i, col)]).collect();
                let w2: Vec<C64> = (col + 2..n).map(|i| a[(i, col + 1)]).collect();
                for (ii, i) in (col + 2..n).enumerate() {
                    let m1 = (d22 * w1[ii] - d21 * w2[ii]) * inv_det;
                    let m2 = (d11 * w2[ii] - d21 * w1[ii]) * inv_det;
                    let row = a.row_mut(i);
                    for (jj, j) in (col + 2..n).enumerate() {
                        row[j] -= m1 * w1[jj] + m2 * w2[jj];
                    }
                    a[(i, col)] = m1;
                    a[(col, i)] = m1;
                    a[(i, col + 1)] = m2;
                    a[(col + 1, i)] = m2;
                }
                pivots.push(Pivot::Double(col));
                col += 2;
            }
        }

        Ok(Self { work: a, perm, pivots })
    }

    pub fn dim(&self) -> usize {
        self.work.nrows()
    }

    /// Solve K x = b.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        // permute
        let mut y: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward: L z = y (unit diagonal, multipliers below pivot columns)
        for piv in &self.pivots {
            match *piv {
                Pivot::Single(k) => {
                    let yk = y[k];
                    for i in k + 1..n {
                        y[i] -= self.work[(i, k)] * yk;
                    }
                }
                Pivot::Double(k) => {
                    let yk = y[k];
                    let yk1 = y[k + 1];
                    for i in k + 2..n {
                        y[i] -= self.work[(i, k)] * yk + self.work[(i, k + 1)] * yk1;
                    }
                }
            }
        }
        // block-diagonal solve
        for piv in &self.pivots {
            match *piv {
                Pivot::Single(k) => {
                    y[k] /= self.work[(k, k)];
                }
                Pivot::Double(k) => {
                    let d11 = self.work[(k, k)];
                    let d21 = self.work[(k + 1, k)];
                    let d22 = self.work[(k + 1, k + 1)];
                    let det = d11 * d22 - d21 * d21;
                    let (b1, b2) = (y[k], y[k + 1]);
                    y[k] = (d22 * b1 - d21 * b2) / det;
                    y[k + 1] = (d11 * b2 - d21 * b1) / det;
                }
            }
        }
        // backward: Lᵀ v = w
        for piv in self.pivots.iter().rev() {
            match *piv {
                Pivot::Single(k) => {
                    let mut s = y[k];
                    for i in k + 1..n {
                        s -= self.work[(i, k)] * y[i];
                    }
                    y[k] = s;
                }
                Pivot::Double(k) => {
                    let mut s0 = y[k];
                    let mut s1 = y[k + 1];
                    for i in k + 2..n {
                        s0 -= self.work[(i, k)] * y[i];
                        s1 -= self.work[(i, k + 1)] * y[i];
                    }
                    y[k] = s0;
                    y[k + 1] = s1;
                }
            }
        }
        // unpermute
        let mut x = vec![C64::new(0.0, 0.0); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }
}

/// Solve K x = rhs for a complex symmetric K in one call.
pub fn ldlt_solve(k: &ComplexMat, rhs: &[C64]) -> Result<Vec<C64>> {
    Ok(LdltFactor::new(k)?.solve(rhs))
}

fn swap_sym(a: &mut ComplexMat, perm: &mut [usize], p: usize, q: usize) {
    if p == q {
        return;
    }
    let n = a.nrows();
    for j in 0..n {
        let t = a[(p, j)];
        a[(p, j)] = a[(q, j)];
        a[(q, j)] = t;
    }
    for i in 0..n {
        let t = a[(i, p)];
        a[(i, p)] = a[(i, q)];
        a[(i, q)] = t;
    }
    perm.swap(p, q);
}
