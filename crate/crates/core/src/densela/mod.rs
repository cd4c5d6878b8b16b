//! Self-contained dense linear algebra kernels.
//!
//! Everything in the pipeline reduces to a handful of dense operations on
//! subdomain-sized matrices: real Cholesky, complex-symmetric LDLᵀ, complex
//! LU with partial pivoting, a symmetric eigensolver, the generalized
//! symmetric-definite eigensolver (reduced through Cholesky, never QZ), and
//! a two-block Sherman–Morrison–Woodbury applicator.
//!
//! Matrices are dense row-major. Sizes here are subdomain-scale (a few
//! thousand at most), so dense storage is the simple and correct choice.

mod cholesky;
mod geneig;
mod ldlt;
mod lu;
mod symeig;
mod woodbury;

pub use cholesky::Cholesky;
pub use geneig::{gen_eig_spd, GenEigResult};
pub use ldlt::{ldlt_solve, LdltFactor};
pub use lu::ComplexLu;
pub use symeig::sym_eig;
pub use woodbury::{BlockFactor, ComplexSolver, FactorBlock, WoodburyOperator};

use num_complex::Complex64 as C64;

/// Dense real matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMat {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMat {
    nrows: usize,
    ncols: usize,
    data: Vec<C64>,
}

impl RealMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { nrows, ncols, data }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Two disjoint mutable rows (i != j).
    #[inline]
    pub fn rows_mut2(&mut self, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
        assert!(i != j);
        let n = self.ncols;
        if i < j {
            let (a, b) = self.data.split_at_mut(j * n);
            (&mut a[i * n..i * n + n], &mut b[..n])
        } else {
            let (a, b) = self.data.split_at_mut(i * n);
            (&mut b[..n], &mut a[j * n..j * n + n])
        }
    }

    pub fn transpose(&self) -> RealMat {
        let mut t = RealMat::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// self * other, cache-friendly i-k-j loop order.
    pub fn matmul(&self, other: &RealMat) -> RealMat {
        assert_eq!(self.ncols, other.nrows, "matmul dimension mismatch");
        let mut out = RealMat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            let arow = self.row(i);
            let orow = out.row_mut(i);
            for (k, &aik) in arow.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                for (o, &b) in orow.iter_mut().zip(brow.iter()) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    /// selfᵀ * other without forming the transpose.
    pub fn t_matmul(&self, other: &RealMat) -> RealMat {
        assert_eq!(self.nrows, other.nrows, "t_matmul dimension mismatch");
        let mut out = RealMat::zeros(self.ncols, other.ncols);
        for k in 0..self.nrows {
            let arow = self.row(k);
            let brow = other.row(k);
            for (i, &aki) in arow.iter().enumerate() {
                if aki == 0.0 {
                    continue;
                }
                let orow = out.row_mut(i);
                for (o, &b) in orow.iter_mut().zip(brow.iter()) {
                    *o += aki * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).iter().zip(x.iter()).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// selfᵀ x without forming the transpose.
    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i).iter()) {
                *o += xi * a;
            }
        }
        out
    }

    /// Apply the real matrix to a complex vector.
    pub fn matvec_c(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x.iter())
                    .map(|(&a, &b)| b * a)
                    .sum()
            })
            .collect()
    }

    /// selfᵀ x for a complex vector.
    pub fn t_matvec_c(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.nrows);
        let mut out = vec![C64::new(0.0, 0.0); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i).iter()) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> RealMat {
        let mut s = RealMat::zeros(rows.len(), cols.len());
        for (si, &i) in rows.iter().enumerate() {
            for (sj, &j) in cols.iter().enumerate() {
                s[(si, sj)] = self[(i, j)];
            }
        }
        s
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.data {
            *v *= a;
        }
    }

    /// self += a * other
    pub fn add_scaled(&mut self, a: f64, other: &RealMat) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (s, o) in self.data.iter_mut().zip(other.data.iter()) {
            *s += a * o;
        }
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_complex(&self) -> ComplexMat {
        ComplexMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }

    pub fn sym_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..self.nrows {
            for j in 0..i {
                e = e.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        e
    }
}

impl std::ops::Index<(usize, usize)> for RealMat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RealMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

impl ComplexMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![C64::new(0.0, 0.0); nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Two disjoint mutable rows (i != j).
    #[inline]
    pub fn rows_mut2(&mut self, i: usize, j: usize) -> (&mut [C64], &mut [C64]) {
        assert!(i != j);
        let n = self.ncols;
        if i < j {
            let (a, b) = self.data.split_at_mut(j * n);
            (&mut a[i * n..i * n + n], &mut b[..n])
        } else {
            let (a, b) = self.data.split_at_mut(i * n);
            (&mut b[..n], &mut a[j * n..j * n + n])
        }
    }

    pub fn transpose(&self) -> ComplexMat {
        let mut t = ComplexMat::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &ComplexMat) -> ComplexMat {
        assert_eq!(self.ncols, other.nrows, "matmul dimension mismatch");
        let mut out = ComplexMat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            let arow = self.row(i);
            let orow = out.row_mut(i);
            for (k, &aik) in arow.iter().enumerate() {
                if aik.re == 0.0 && aik.im == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                for (o, &b) in orow.iter_mut().zip(brow.iter()) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).iter().zip(x.iter()).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// selfᵀ x (plain transpose, no conjugation).
    pub fn t_matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.nrows);
        let mut out = vec![C64::new(0.0, 0.0); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i).iter()) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> ComplexMat {
        let mut s = ComplexMat::zeros(rows.len(), cols.len());
        for (si, &i) in rows.iter().enumerate() {
            for (sj, &j) in cols.iter().enumerate() {
                s[(si, sj)] = self[(i, j)];
            }
        }
        s
    }

    pub fn real_part(&self) -> RealMat {
        RealMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|v| v.re).collect(),
        }
    }

    pub fn imag_part(&self) -> RealMat {
        RealMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|v| v.im).collect(),
        }
    }

    /// self += a * other
    pub fn add_scaled(&mut self, a: C64, other: &ComplexMat) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (s, o) in self.data.iter_mut().zip(other.data.iter()) {
            *s += a * o;
        }
    }

    /// self += a * other for a real matrix addend.
    pub fn add_scaled_real(&mut self, a: C64, other: &RealMat) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (s, o) in self.data.iter_mut().zip(other.data.iter()) {
            *s += a * o;
        }
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sym_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..self.nrows {
            for j in 0..i {
                e = e.max((self[(i, j)] - self[(j, i)]).norm());
            }
        }
        e
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.ncols + j]
    }
}

// Vector helpers used throughout.

/// Conjugate-linear in the first argument: sum conj(a_i) b_i.
#[inline]
pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn nrm2(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[inline]
pub fn nrm2_real(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// y += alpha * x
#[inline]
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b.iter()).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        let a = RealMat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = RealMat::from_rows(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let c = a.matmul(&b);
        assert_eq!(c[(0, 0)], 19.0);
        assert_eq!(c[(0, 1)], 22.0);
        assert_eq!(c[(1, 0)], 43.0);
        assert_eq!(c[(1, 1)], 50.0);
    }

    #[test]
    fn t_matmul_matches_explicit_transpose() {
        let a = RealMat::from_fn(4, 3, |i, j| (i * 3 + j) as f64);
        let b = RealMat::from_fn(4, 5, |i, j| (i + j) as f64 * 0.5);
        let lhs = a.t_matmul(&b);
        let rhs = a.transpose().matmul(&b);
        assert!((0..3).all(|i| (0..5).all(|j| (lhs[(i, j)] - rhs[(i, j)]).abs() < 1e-14)));
    }

    #[test]
    fn complex_matvec() {
        let m = ComplexMat::from_fn(2, 2, |i, j| C64::new(i as f64, j as f64));
        let x = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let y = m.matvec(&x);
        assert_eq!(y[0], C64::new(0.0, 0.0) + C64::new(0.0, 1.0) * C64::new(0.0, 1.0));
    }
}
