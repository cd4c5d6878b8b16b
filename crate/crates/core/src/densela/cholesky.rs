//! Real Cholesky factorization M = L Lᵀ for symmetric positive-definite M.

use super::RealMat;
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a real SPD matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: RealMat,
}

impl Cholesky {
    /// Factor a symmetric positive-definite matrix. Fails on the first
    /// non-positive pivot, naming its index.
    pub fn new(m: &RealMat) -> Result<Self> {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "cholesky requires a square matrix");
        let mut l = RealMat::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotSpd { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            let inv = 1.0 / djj;
            for i in j + 1..n {
                let (li, lj) = l.rows_mut2(i, j);
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= li[k] * lj[k];
                }
                li[j] = s * inv;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &RealMat {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solve L Lᵀ x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        // forward: L y = b
        for i in 0..n {
            let row = self.l.row(i);
            let mut s = x[i];
            for k in 0..i {
                s -= row[k] * x[k];
            }
            x[i] = s / row[i];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
    }

    /// X = L⁻¹ A, row-oriented forward substitution on the block.
    pub fn forward_solve_mat(&self, a: &RealMat) -> RealMat {
        let n = self.dim();
        assert_eq!(a.nrows(), n);
        let m = a.ncols();
        let mut x = a.clone();
        for i in 0..n {
            let lrow: Vec<f64> = self.l.row(i)[..i].to_vec();
            let diag = self.l[(i, i)];
            for (k, &lik) in lrow.iter().enumerate() {
                if lik == 0.0 {
                    continue;
                }
                let (xi, xk) = x.rows_mut2(i, k);
                for (a, b) in xi.iter_mut().zip(xk.iter()) {
                    *a -= lik * *b;
                }
            }
            let xi = x.row_mut(i);
            for v in xi.iter_mut() {
                *v /= diag;
            }
            let _ = m;
        }
        x
    }

    /// X = L⁻ᵀ A (back substitution on the block).
    pub fn backward_solve_mat(&self, a: &RealMat) -> RealMat {
        let n = self.dim();
        assert_eq!(a.nrows(), n);
        let mut x = a.clone();
        for i in (0..n).rev() {
            let diag = self.l[(i, i)];
            {
                let xi = x.row_mut(i);
                for v in xi.iter_mut() {
                    *v /= diag;
                }
            }
            for k in 0..i {
                let lik = self.l[(i, k)];
                if lik == 0.0 {
                    continue;
                }
                let (xk, xi) = x.rows_mut2(k, i);
                for (a, b) in xk.iter_mut().zip(xi.iter()) {
                    *a -= lik * *b;
                }
            }
        }
        x
    }

    /// W = A L⁻ᵀ computed row-wise: for each row r, solve L wᵀ = aᵀ.
    pub fn right_solve_lt(&self, a: &RealMat) -> RealMat {
        let n = self.dim();
        assert_eq!(a.ncols(), n);
        let mut w = a.clone();
        for r in 0..a.nrows() {
            let row = w.row_mut(r);
            for k in 0..n {
                let lrow = self.l.row(k);
                let mut s = row[k];
                for j in 0..k {
                    s -= lrow[j] * row[j];
                }
                row[k] = s / lrow[k];
            }
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factors_to_identity() {
        let m = RealMat::identity(5);
        let c = Cholesky::new(&m).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((c.factor()[(i, j)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_by_two_hand_expansion() {
        let m = RealMat::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let c = Cholesky::new(&m).unwrap();
        assert!((c.factor()[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((c.factor()[(1, 0)] - 1.0).abs() < 1e-15);
        assert!((c.factor()[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.factor()[(0, 1)], 0.0);
    }

    #[test]
    fn random_spd_reconstruction() {
        // A = GᵀG + I is SPD; reconstruction must be at machine scale.
        let n = 40;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let g = RealMat::from_fn(n, n, |_, _| next());
        let mut m = g.t_matmul(&g);
        for i in 0..n {
            m[(i, i)] += 1.0;
        }
        let c = Cholesky::new(&m).unwrap();
        let l = c.factor();
        let rec = l.matmul(&l.transpose());
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                err = err.max((rec[(i, j)] - m[(i, j)]).abs());
            }
        }
        assert!(err <= 1e-12 * m.norm_max(), "reconstruction error {err}");
    }

    #[test]
    fn rejects_indefinite_naming_pivot() {
        let m = RealMat::from_rows(&[&[1.0, 0.0], &[0.0, -2.0]]);
        match Cholesky::new(&m) {
            Err(crate::error::Error::NotSpd { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected NotSpd, got {other:?}"),
        }
    }

    #[test]
    fn solve_roundtrip() {
        let m = RealMat::from_rows(&[&[4.0, 2.0, 0.0], &[2.0, 5.0, 1.0], &[0.0, 1.0, 3.0]]);
        let c = Cholesky::new(&m).unwrap();
        let b = vec![1.0, -2.0, 0.5];
        let x = c.solve(&b);
        let r = m.matvec(&x);
        for (ri, bi) in r.iter().zip(b.iter()) {
            assert!((ri - bi).abs() < 1e-13);
        }
    }
}
