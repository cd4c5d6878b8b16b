//! Dense symmetric eigensolver: Householder tridiagonalization followed by
//! implicit-shift QL sweeps with eigenvector accumulation.
//!
//! Eigenvalues are returned ascending; each eigenvector is normalized so its
//! largest-magnitude entry is positive (first occurrence wins ties), which
//! makes repeated runs bitwise reproducible.

use super::RealMat;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 50;

/// Eigendecomposition of a real symmetric matrix.
///
/// Returns `(values, vectors)` with `values` ascending and the j-th column of
/// `vectors` the eigenvector for `values[j]`, orthonormal set.
pub fn sym_eig(s: &RealMat) -> Result<(Vec<f64>, RealMat)> {
    let n = s.nrows();
    assert_eq!(n, s.ncols(), "sym_eig requires a square matrix");
    if n == 0 {
        return Ok((Vec::new(), RealMat::zeros(0, 0)));
    }
    let mut a = s.clone();
    let (mut d, mut e) = tridiagonalize(&mut a);
    // Rotations act on rows of the transposed basis for contiguous access.
    let mut vz = a.transpose();
    ql_implicit(&mut d, &mut e, &mut vz)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = RealMat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let row = vz.row(src);
        let mut imax = 0;
        let mut vmax = 0.0f64;
        for (k, &v) in row.iter().enumerate() {
            if v.abs() > vmax {
                vmax = v.abs();
                imax = k;
            }
        }
        let flip = if row[imax] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors[(k, col)] = flip * row[k];
        }
    }
    Ok((values, vectors))
}

/// Reduce a symmetric matrix to tridiagonal form, accumulating the
/// orthogonal transform into `a` (columns form the basis). Returns the
/// diagonal and subdiagonal (`e[0] = 0`).
fn tridiagonalize(a: &mut RealMat) -> (Vec<f64>, Vec<f64>) {
    let n = a.nrows();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    for i in (1..n).rev() {
        let l = i;
        if l < 2 {
            e[i] = a[(i, 0)];
            d[i] = 0.0;
            continue;
        }
        let scale: f64 = (0..l).map(|k| a[(i, k)].abs()).sum();
        if scale == 0.0 {
            e[i] = a[(i, l - 1)];
            d[i] = 0.0;
            continue;
        }
        let mut h = 0.0;
        for k in 0..l {
            let v = a[(i, k)] / scale;
            a[(i, k)] = v;
            h += v * v;
        }
        let f = a[(i, l - 1)];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        a[(i, l - 1)] = f - g;
        let u: Vec<f64> = a.row(i)[..l].to_vec();

        // p = A u / h over the active block, full-symmetric storage.
        let mut p = vec![0.0; l];
        for (k, &uk) in u.iter().enumerate() {
            if uk != 0.0 {
                let row = &a.row(k)[..l];
                for (pj, &akj) in p.iter_mut().zip(row.iter()) {
                    *pj += uk * akj;
                }
            }
        }
        let inv_h = 1.0 / h;
        for v in &mut p {
            *v *= inv_h;
        }
        let kk: f64 = u.iter().zip(p.iter()).map(|(x, y)| x * y).sum::<f64>() * (0.5 * inv_h);
        let w: Vec<f64> = p.iter().zip(u.iter()).map(|(pk, uk)| pk - kk * uk).collect();

        // Rank-2 update A -= u wᵀ + w uᵀ on the active block.
        for r in 0..l {
            let ur = u[r];
            let wr = w[r];
            let row = &mut a.row_mut(r)[..l];
            for ((arc, &wc), &uc) in row.iter_mut().zip(w.iter()).zip(u.iter()) {
                *arc -= ur * wc + wr * uc;
            }
        }
        // Stash u/h in column i for the accumulation pass.
        for (k, &uk) in u.iter().enumerate() {
            a[(k, i)] = uk * inv_h;
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;

    // Accumulate the product of Householder transforms.
    for i in 0..n {
        if i > 0 && d[i] != 0.0 {
            let u: Vec<f64> = a.row(i)[..i].to_vec();
            let mut g = vec![0.0; i];
            for (k, &uk) in u.iter().enumerate() {
                if uk != 0.0 {
                    let row = &a.row(k)[..i];
                    for (gj, &akj) in g.iter_mut().zip(row.iter()) {
                        *gj += uk * akj;
                    }
                }
            }
            for k in 0..i {
                let c = a[(k, i)];
                if c != 0.0 {
                    let row = &mut a.row_mut(k)[..i];
                    for (akj, &gj) in row.iter_mut().zip(g.iter()) {
                        *akj -= gj * c;
                    }
                }
            }
        }
        d[i] = a[(i, i)];
        a[(i, i)] = 1.0;
        for j in 0..i {
            a[(i, j)] = 0.0;
            a[(j, i)] = 0.0;
        }
    }
    (d, e)
}

/// Implicit-shift QL on a tridiagonal matrix, rotating the rows of `vz`
/// (each row is one basis vector of the accumulated transform).
fn ql_implicit(d: &mut [f64], e: &mut [f64], vz: &mut RealMat) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::EigIterLimit { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            let mut i = m - 1;
            loop {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                let (ri, ri1) = vz.rows_mut2(i, i + 1);
                for (vi, vi1) in ri.iter_mut().zip(ri1.iter_mut()) {
                    let f = *vi1;
                    *vi1 = s * *vi + c * f;
                    *vi = c * *vi - s * f;
                }
                if i == l {
                    break;
                }
                i -= 1;
            }
            if !underflow {
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residuals(s: &RealMat, vals: &[f64], vecs: &RealMat) -> (f64, f64) {
        let n = s.nrows();
        let sv = s.matmul(vecs);
        let mut eig_res: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                eig_res = eig_res.max((sv[(i, j)] - vals[j] * vecs[(i, j)]).abs());
            }
        }
        let vtv = vecs.t_matmul(vecs);
        let mut orth_res: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                orth_res = orth_res.max((vtv[(i, j)] - expect).abs());
            }
        }
        (eig_res, orth_res)
    }

    #[test]
    fn diagonal_matrix_sorted() {
        let s = RealMat::from_rows(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let (vals, _) = sym_eig(&s).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 2.0).abs() < 1e-14);
        assert!((vals[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn exchange_matrix() {
        let s = RealMat::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let (vals, vecs) = sym_eig(&s).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        let (r, o) = residuals(&s, &vals, &vecs);
        assert!(r < 1e-14 && o < 1e-14);
    }

    #[test]
    fn random_symmetric_50() {
        let n = 50;
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let g = RealMat::from_fn(n, n, |_, _| next());
        let mut s = RealMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] = 0.5 * (g[(i, j)] + g[(j, i)]);
            }
        }
        let (vals, vecs) = sym_eig(&s).unwrap();
        let (r, o) = residuals(&s, &vals, &vecs);
        let scale = s.norm_fro();
        assert!(r <= 1e-10 * scale.max(1.0), "eig residual {r}");
        assert!(o <= 1e-10, "orthonormality residual {o}");
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn sign_convention_deterministic() {
        let s = RealMat::from_rows(&[&[2.0, -1.0, 0.0], &[-1.0, 2.0, -1.0], &[0.0, -1.0, 2.0]]);
        let (_, v1) = sym_eig(&s).unwrap();
        let (_, v2) = sym_eig(&s).unwrap();
        assert_eq!(v1, v2);
        for j in 0..3 {
            let col = v1.column(j);
            let mut imax = 0;
            for (k, &v) in col.iter().enumerate() {
                if v.abs() > col[imax].abs() {
                    imax = k;
                }
            }
            assert!(col[imax] > 0.0);
        }
    }
}
