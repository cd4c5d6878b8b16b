//! Complex LU factorization with partial pivoting.
//!
//! Used for the coarse matrix at desk scale, for capacitance matrices of
//! low-rank updates, and as the dense oracle in tests. The trailing update
//! runs on rayon for the larger capacitance factorizations.

use super::ComplexMat;
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

const PAR_THRESHOLD: usize = 256;

#[derive(Clone, Debug)]
pub struct ComplexLu {
    lu: ComplexMat,
    perm: Vec<usize>,
}

impl ComplexLu {
    pub fn new(a: &ComplexMat) -> Result<Self> {
        Self::factor(a.clone())
    }

    /// Factor, consuming the matrix.
    pub fn factor(mut a: ComplexMat) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "lu requires a square matrix");
        let mut perm: Vec<usize> = (0..n).collect();
        let floor = n.max(1) as f64 * f64::EPSILON * a.norm_max();
        let parallel = n >= PAR_THRESHOLD;

        for k in 0..n {
            let mut pmax = a[(k, k)].norm();
            let mut prow = k;
            for i in k + 1..n {
                let v = a[(i, k)].norm();
                if v > pmax {
                    pmax = v;
                    prow = i;
                }
            }
            if pmax <= floor {
                return Err(Error::Singular { context: format!("lu pivot column {k}") });
            }
            if prow != k {
                let (rk, rp) = a.rows_mut2(k, prow);
                rk.swap_with_slice(rp);
                perm.swap(k, prow);
            }
            let inv = C64::new(1.0, 0.0) / a[(k, k)];
            let pivot_row: Vec<C64> = a.row(k)[k + 1..].to_vec();
            let ncols = a.ncols();
            let tail = &mut a.data[(k + 1) * ncols..];
            let update = |row: &mut [C64]| {
                let m = row[k] * inv;
                row[k] = m;
                if m.re != 0.0 || m.im != 0.0 {
                    for (x, &p) in row[k + 1..].iter_mut().zip(pivot_row.iter()) {
                        *x -= m * p;
                    }
                }
            };
            if parallel && n - k > 64 {
                tail.par_chunks_mut(ncols).for_each(update);
            } else {
                tail.chunks_mut(ncols).for_each(update);
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = x[i];
            for k in 0..i {
                s -= row[k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for k in i + 1..n {
                s -= row[k] * x[k];
            }
            x[i] = s / row[i];
        }
        x
    }

    /// Dense inverse applied column by column; test/oracle use.
    pub fn inverse(&self) -> ComplexMat {
        let n = self.dim();
        let mut inv = ComplexMat::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            let col = self.solve(&e);
            e[j] = C64::new(0.0, 0.0);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}
