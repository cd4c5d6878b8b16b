//! Minimal complex CSR matrix: triplet assembly, matvec, dense export.
//!
//! Global operators (B, H, B₀) are assembled once from per-subdomain dense
//! blocks and then only multiplied, so this is all that is needed.

use crate::densela::ComplexMat;
use num_complex::Complex64 as C64;

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C64>,
}

impl CsrMatrix {
    /// Build from triplets, summing duplicates. Deterministic for any
    /// ordering of the input triplets.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, C64)],
    ) -> CsrMatrix {
        let mut per_row: Vec<Vec<(usize, C64)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            per_row[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = row[k].1;
                k += 1;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        for i in 0..self.nrows {
            let mut s = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
        y
    }

    pub fn to_dense(&self) -> ComplexMat {
        let mut d = ComplexMat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[(i, self.col_idx[k])] = self.values[k];
            }
        }
        d
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.col_idx[k] == j {
                return self.values[k];
            }
        }
        C64::new(0.0, 0.0)
    }

    /// max |a_ij - a_ji| over the stored pattern.
    pub fn symmetry_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                e = e.max((self.values[k] - self.get(j, i)).norm());
            }
        }
        e
    }

    pub fn norm_max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let t = vec![
            (0, 0, C64::new(1.0, 0.0)),
            (0, 0, C64::new(2.0, 1.0)),
            (1, 2, C64::new(-1.0, 0.0)),
        ];
        let m = CsrMatrix::from_triplets(2, 3, &t);
        assert_eq!(m.get(0, 0), C64::new(3.0, 1.0));
        assert_eq!(m.get(1, 2), C64::new(-1.0, 0.0));
        assert_eq!(m.get(1, 1), C64::new(0.0, 0.0));
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn matvec_matches_dense() {
        let t = vec![
            (0, 1, C64::new(2.0, 0.0)),
            (1, 0, C64::new(0.0, 1.0)),
            (1, 1, C64::new(1.0, -1.0)),
        ];
        let m = CsrMatrix::from_triplets(2, 2, &t);
        let x = vec![C64::new(1.0, 1.0), C64::new(2.0, 0.0)];
        let y = m.matvec(&x);
        let d = m.to_dense().matvec(&x);
        assert_eq!(y, d);
    }
}
