//! Iterative substructuring: interior mode extraction, well-posed local
//! solvers, the coarse interface system B₀ on V₀ = V_h(Γ) ⊕ α_S, the
//! extension/restriction pair R₀ᵀ/R₀, the minimum-energy norm blocks H₀⁽ⁱ⁾,
//! and the exact decomposition solver.
//!
//! Interior eigenpairs B_II φ = μ H_II φ with |μ| below the threshold β are
//! moved into the coarse space; the remaining modes make B_L diagonal in
//! mode coordinates, so every local solve is a pair of thin products.

use crate::assemble::LocalOperators;
use crate::densela::{gen_eig_spd, ldlt_solve, ComplexLu, ComplexMat, RealMat};
use crate::error::{Error, Result};
use crate::mesh::Decomposition;
use crate::sparse::CsrMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::sync::atomic::{AtomicUsize, Ordering};

/// Machine floor below which a retained eigenvalue makes B_L singular.
const MU_FLOOR: f64 = 1e-300;

/// Interior eigenpairs split at threshold β into coarse (small) and local
/// (large) modes. Columns are H_II-orthonormal.
#[derive(Clone, Debug)]
pub struct ModeSplit {
    pub beta: f64,
    /// Small modes |μ| < β, promoted to the coarse space.
    pub q_s: RealMat,
    pub mu_s: Vec<f64>,
    /// Large modes, kept local; B restricted to them is diag(mu_l).
    pub q_l: RealMat,
    pub mu_l: Vec<f64>,
}

impl ModeSplit {
    pub fn k_small(&self) -> usize {
        self.mu_s.len()
    }

    pub fn n_interior(&self) -> usize {
        self.q_l.nrows()
    }

    /// B_L x = Q_L diag(1/μ) Q_Lᵀ x.
    pub fn apply_bl(&self, x: &[C64]) -> Vec<C64> {
        let mut c = self.q_l.t_matvec_c(x);
        for (ci, &mu) in c.iter_mut().zip(self.mu_l.iter()) {
            *ci /= mu;
        }
        self.q_l.matvec_c(&c)
    }

    /// H_L x = Q_L Q_Lᵀ x.
    pub fn apply_hl(&self, x: &[C64]) -> Vec<C64> {
        let c = self.q_l.t_matvec_c(x);
        self.q_l.matvec_c(&c)
    }
}

/// Solve the interior generalized eigenproblem and split at β (strict).
pub fn interior_modes(local: &LocalOperators, beta: f64) -> Result<ModeSplit> {
    let eig = gen_eig_spd(&local.b_ii, &local.h_ii)?;
    let n = eig.len();
    let small: Vec<usize> = (0..n).filter(|&j| eig.values[j].abs() < beta).collect();
    let large: Vec<usize> = (0..n).filter(|&j| eig.values[j].abs() >= beta).collect();
    let rows: Vec<usize> = (0..n).collect();
    let q_s = eig.vectors.submatrix(&rows, &small);
    let q_l = eig.vectors.submatrix(&rows, &large);
    Ok(ModeSplit {
        beta,
        mu_s: small.iter().map(|&j| eig.values[j]).collect(),
        mu_l: large.iter().map(|&j| eig.values[j]).collect(),
        q_s,
        q_l,
    })
}

/// Local solve u_i = B_L rhs with the retained-mode floor check.
pub fn local_solve(split: &ModeSplit, rhs: &[C64]) -> Result<Vec<C64>> {
    if let Some(&mu) = split.mu_l.iter().find(|m| m.abs() <= MU_FLOOR) {
        return Err(Error::Singular {
            context: format!("local solve retained eigenvalue {mu:e}"),
        });
    }
    Ok(split.apply_bl(rhs))
}

/// Cross-check path: the bordered saddle system
/// [[B_II, H_II Q_S], [Q_Sᵀ H_II, 0]] [u; λ] = [rhs; 0].
pub fn local_solve_saddle(
    local: &LocalOperators,
    split: &ModeSplit,
    rhs: &[C64],
) -> Result<Vec<C64>> {
    let n = local.n_i;
    let k = split.k_small();
    let hq = local.h_ii.matmul(&split.q_s);
    let mut m = ComplexMat::zeros(n + k, n + k);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = C64::new(local.b_ii[(i, j)], 0.0);
        }
        for j in 0..k {
            m[(i, n + j)] = C64::new(hq[(i, j)], 0.0);
            m[(n + j, i)] = C64::new(hq[(i, j)], 0.0);
        }
    }
    let mut b = vec![C64::new(0.0, 0.0); n + k];
    b[..n].copy_from_slice(rhs);
    let sol = ldlt_solve(&m, &b)?;
    Ok(sol[..n].to_vec())
}

/// W diag(scale) Wᵀ computed so the result is bitwise symmetric.
fn sym_outer_scaled(w: &RealMat, scale: Option<&[f64]>) -> RealMat {
    let n = w.nrows();
    let m = w.ncols();
    let mut s = RealMat::zeros(n, n);
    for r in 0..n {
        for c in 0..=r {
            let wr = w.row(r);
            let wc = w.row(c);
            let mut acc = 0.0;
            match scale {
                Some(sc) => {
                    for t in 0..m {
                        acc += wr[t] * wc[t] / sc[t];
                    }
                }
                None => {
                    for t in 0..m {
                        acc += wr[t] * wc[t];
                    }
                }
            }
            s[(r, c)] = acc;
            s[(c, r)] = acc;
        }
    }
    s
}

/// Mirror the lower triangle onto the upper one.
fn mirror_lower(m: &mut RealMat) {
    for r in 0..m.nrows() {
        for c in 0..r {
            let v = m[(r, c)];
            m[(c, r)] = v;
        }
    }
}

/// B̂_ΓΓ = B_ΓΓ − B_ΓI B_L B_IΓ, through the thin mode-space factors;
/// the correction is (B_ΓI Q_L) diag(1/μ) (B_ΓI Q_L)ᵀ, exactly symmetric.
pub fn schur_hat_b(local: &LocalOperators, split: &ModeSplit) -> ComplexMat {
    let g = local.b_gi.matmul(&split.q_l); // n_g × n_l
    let corr = sym_outer_scaled(&g, Some(&split.mu_l));
    let mut b_hat = local.b_gg.clone();
    b_hat.add_scaled_real(C64::new(-1.0, 0.0), &corr);
    b_hat
}

/// Ĥ_ΓΓ = H_ΓΓ − H_ΓI H_L H_IΓ = H_ΓΓ − (H_ΓI Q_L)(H_ΓI Q_L)ᵀ.
pub fn schur_hat_h(local: &LocalOperators, split: &ModeSplit) -> RealMat {
    let w = local.h_gi.matmul(&split.q_l);
    let corr = sym_outer_scaled(&w, None);
    let mut h_hat = local.h_gg.clone();
    h_hat.add_scaled(-1.0, &corr);
    h_hat
}

/// The coarse interface system on V₀ = V_h(Γ) ⊕ (α_S blocks by subdomain).
#[derive(Clone, Debug)]
pub struct CoarseSystem {
    pub n_gamma: usize,
    /// dim(V₀) = |Γ| + Σ k_i.
    pub dim: usize,
    /// Start of subdomain i's α_S slots in V₀.
    pub alpha_off: Vec<usize>,
    /// Assembled B₀ (complex symmetric).
    pub b0: CsrMatrix,
    /// Per-subdomain dense blocks B₀⁽ⁱ⁾ over [Γ_i; α_S⁽ⁱ⁾].
    pub b0_blocks: Vec<ComplexMat>,
    /// Per-subdomain H₀⁽ⁱ⁾ (SPD), same layout.
    pub h0_blocks: Vec<RealMat>,
    /// Local Γ_i position → global Γ position.
    pub gamma_maps: Vec<Vec<usize>>,
}

impl CoarseSystem {
    /// V₀ indices of subdomain i's block: Γ_i positions then α_S slots.
    pub fn v0_indices(&self, i: usize) -> Vec<usize> {
        let k_i = self.b0_blocks[i].nrows() - self.gamma_maps[i].len();
        let mut idx = self.gamma_maps[i].clone();
        idx.extend(self.alpha_off[i]..self.alpha_off[i] + k_i);
        idx
    }

    pub fn k_small(&self, i: usize) -> usize {
        self.b0_blocks[i].nrows() - self.gamma_maps[i].len()
    }
}

/// Assemble B₀ = Σ Rᵀ B₀⁽ⁱ⁾ R together with the H₀ blocks.
pub fn assemble_b0(
    decomp: &Decomposition,
    locals: &[LocalOperators],
    splits: &[ModeSplit],
) -> CoarseSystem {
    let n_sub = decomp.n_subdomains();
    let n_gamma = decomp.gamma.len();
    let mut alpha_off = Vec::with_capacity(n_sub);
    let mut off = n_gamma;
    for split in splits {
        alpha_off.push(off);
        off += split.k_small();
    }
    let dim = off;

    let blocks: Vec<(ComplexMat, RealMat)> = (0..n_sub)
        .into_par_iter()
        .map(|i| {
            let lo = &locals[i];
            let sp = &splits[i];
            let n_g = lo.n_g;
            let k = sp.k_small();

            let b_hat = schur_hat_b(lo, sp);
            let bq = lo.b_gi.matmul(&sp.q_s); // n_g × k
            let mut qbq = sp.q_s.t_matmul(&lo.b_ii.matmul(&sp.q_s)); // k × k (≈ diag μ_S)
            mirror_lower(&mut qbq);
            let mut b0i = ComplexMat::zeros(n_g + k, n_g + k);
            for r in 0..n_g {
                for c in 0..n_g {
                    b0i[(r, c)] = b_hat[(r, c)];
                }
                for c in 0..k {
                    b0i[(r, n_g + c)] = C64::new(bq[(r, c)], 0.0);
                    b0i[(n_g + c, r)] = C64::new(bq[(r, c)], 0.0);
                }
            }
            for r in 0..k {
                for c in 0..k {
                    b0i[(n_g + r, n_g + c)] = C64::new(qbq[(r, c)], 0.0);
                }
            }

            let h_hat = schur_hat_h(lo, sp);
            let hq = lo.h_gi.matmul(&sp.q_s);
            let mut qhq = sp.q_s.t_matmul(&lo.h_ii.matmul(&sp.q_s)); // ≈ I_k
            mirror_lower(&mut qhq);
            let mut h0i = RealMat::zeros(n_g + k, n_g + k);
            for r in 0..n_g {
                for c in 0..n_g {
                    h0i[(r, c)] = h_hat[(r, c)];
                }
                for c in 0..k {
                    h0i[(r, n_g + c)] = hq[(r, c)];
                    h0i[(n_g + c, r)] = hq[(r, c)];
                }
            }
            for r in 0..k {
                for c in 0..k {
                    h0i[(n_g + r, n_g + c)] = qhq[(r, c)];
                }
            }
            (b0i, h0i)
        })
        .collect();

    let gamma_maps: Vec<Vec<usize>> = (0..n_sub).map(|i| decomp.gamma_map(i)).collect();
    let mut triplets = Vec::new();
    for i in 0..n_sub {
        let (b0i, _) = &blocks[i];
        let mut idx = gamma_maps[i].clone();
        idx.extend(alpha_off[i]..alpha_off[i] + splits[i].k_small());
        for (lr, &gr) in idx.iter().enumerate() {
            for (lc, &gc) in idx.iter().enumerate() {
                let v = b0i[(lr, lc)];
                if v.re != 0.0 || v.im != 0.0 {
                    triplets.push((gr, gc, v));
                }
            }
        }
    }
    let b0 = CsrMatrix::from_triplets(dim, dim, &triplets);

    let (b0_blocks, h0_blocks): (Vec<_>, Vec<_>) = blocks.into_iter().unzip();
    CoarseSystem { n_gamma, dim, alpha_off, b0, b0_blocks, h0_blocks, gamma_maps }
}

/// All substructuring state for one configuration, plus the local-solve
/// counter that certifies the two-solves-per-subdomain contract.
pub struct Substructure {
    pub splits: Vec<ModeSplit>,
    pub coarse: CoarseSystem,
    /// Positions of each subdomain's Γ_i in the fine (Γ, I) vector.
    pub fine_gamma_idx: Vec<Vec<usize>>,
    /// Positions of each subdomain's I_i in the fine (Γ, I) vector.
    pub fine_interior_idx: Vec<Vec<usize>>,
    solve_count: AtomicUsize,
}

impl Substructure {
    pub fn build(
        decomp: &Decomposition,
        locals: &[LocalOperators],
        beta: f64,
    ) -> Result<Self> {
        let splits: Vec<ModeSplit> = locals
            .par_iter()
            .map(|lo| interior_modes(lo, beta))
            .collect::<Result<_>>()?;
        let coarse = assemble_b0(decomp, locals, &splits);
        let n_gamma = decomp.gamma.len();
        let fine_gamma_idx = (0..decomp.n_subdomains())
            .map(|i| decomp.gamma_map(i))
            .collect();
        let fine_interior_idx = (0..decomp.n_subdomains())
            .map(|i| {
                decomp
                    .interior_map(i)
                    .into_iter()
                    .map(|p| n_gamma + p)
                    .collect()
            })
            .collect();
        Ok(Self {
            splits,
            coarse,
            fine_gamma_idx,
            fine_interior_idx,
            solve_count: AtomicUsize::new(0),
        })
    }

    pub fn n_subdomains(&self) -> usize {
        self.splits.len()
    }

    pub fn reset_solve_count(&self) {
        self.solve_count.store(0, Ordering::Relaxed);
    }

    pub fn solve_count(&self) -> usize {
        self.solve_count.load(Ordering::Relaxed)
    }

    /// Counted local solve on subdomain i.
    pub fn local_solve_counted(&self, i: usize, rhs: &[C64]) -> Result<Vec<C64>> {
        self.solve_count.fetch_add(1, Ordering::Relaxed);
        local_solve(&self.splits[i], rhs)
    }

    /// R₀ᵀ u₀: keep u_Γ, extend into each interior as
    /// −B_L B_IΓ u_Γ|Γ_i + Q_S α_S⁽ⁱ⁾. One counted local solve per subdomain.
    pub fn apply_r0t(&self, locals: &[LocalOperators], u0: &[C64]) -> Vec<C64> {
        assert_eq!(u0.len(), self.coarse.dim);
        let n_gamma = self.coarse.n_gamma;
        let n_fine = n_gamma + self.fine_interior_idx.iter().map(|v| v.len()).sum::<usize>();
        let mut out = vec![C64::new(0.0, 0.0); n_fine];
        out[..n_gamma].copy_from_slice(&u0[..n_gamma]);
        let parts: Vec<Vec<C64>> = (0..self.n_subdomains())
            .into_par_iter()
            .map(|i| {
                let u_g: Vec<C64> = self.fine_gamma_idx[i].iter().map(|&p| u0[p]).collect();
                let t = locals[i].b_ig.matvec_c(&u_g);
                self.solve_count.fetch_add(1, Ordering::Relaxed);
                let mut w = self.splits[i].apply_bl(&t);
                for v in &mut w {
                    *v = -*v;
                }
                let k = self.splits[i].k_small();
                if k > 0 {
                    let alpha = &u0[self.coarse.alpha_off[i]..self.coarse.alpha_off[i] + k];
                    let qa = self.splits[i].q_s.matvec_c(alpha);
                    for (wv, av) in w.iter_mut().zip(qa.iter()) {
                        *wv += av;
                    }
                }
                w
            })
            .collect();
        for (i, part) in parts.iter().enumerate() {
            for (p, &v) in self.fine_interior_idx[i].iter().zip(part.iter()) {
                out[*p] = v;
            }
        }
        out
    }

    /// R₀ v: restrict a fine vector to V₀,
    /// (v_Γ − Σ scatter(B_ΓI B_L v_{I_i}),  Q_Sᵀ v_{I_i} per subdomain).
    pub fn apply_r0(&self, locals: &[LocalOperators], v: &[C64]) -> Vec<C64> {
        let n_gamma = self.coarse.n_gamma;
        let mut out = vec![C64::new(0.0, 0.0); self.coarse.dim];
        out[..n_gamma].copy_from_slice(&v[..n_gamma]);
        for i in 0..self.n_subdomains() {
            let v_i: Vec<C64> = self.fine_interior_idx[i].iter().map(|&p| v[p]).collect();
            let bl_v = self.splits[i].apply_bl(&v_i);
            let g = locals[i].b_gi.matvec_c(&bl_v);
            for (p, gv) in self.fine_gamma_idx[i].iter().zip(g.iter()) {
                out[*p] -= gv;
            }
            let k = self.splits[i].k_small();
            if k > 0 {
                let alpha = self.splits[i].q_s.t_matvec_c(&v_i);
                out[self.coarse.alpha_off[i]..self.coarse.alpha_off[i] + k]
                    .copy_from_slice(&alpha);
            }
        }
        out
    }

    /// Minimum-energy extension ℋ₀ᵀ u₀ (H_L in place of B_L).
    pub fn apply_h0t(&self, locals: &[LocalOperators], u0: &[C64]) -> Vec<C64> {
        assert_eq!(u0.len(), self.coarse.dim);
        let n_gamma = self.coarse.n_gamma;
        let n_fine = n_gamma + self.fine_interior_idx.iter().map(|v| v.len()).sum::<usize>();
        let mut out = vec![C64::new(0.0, 0.0); n_fine];
        out[..n_gamma].copy_from_slice(&u0[..n_gamma]);
        for i in 0..self.n_subdomains() {
            let u_g: Vec<C64> = self.fine_gamma_idx[i].iter().map(|&p| u0[p]).collect();
            let t = locals[i].h_ig.matvec_c(&u_g);
            let mut w = self.splits[i].apply_hl(&t);
            for v in &mut w {
                *v = -*v;
            }
            let k = self.splits[i].k_small();
            if k > 0 {
                let alpha = &u0[self.coarse.alpha_off[i]..self.coarse.alpha_off[i] + k];
                let qa = self.splits[i].q_s.matvec_c(alpha);
                for (wv, av) in w.iter_mut().zip(qa.iter()) {
                    *wv += av;
                }
            }
            for (p, &v) in self.fine_interior_idx[i].iter().zip(w.iter()) {
                out[*p] = v;
            }
        }
        out
    }

    /// Unique decomposition v = R₀ᵀ v₀ + Σ Rᵢᵀ v_i.
    pub fn decompose(
        &self,
        locals: &[LocalOperators],
        v: &[C64],
    ) -> (Vec<C64>, Vec<Vec<C64>>) {
        let n_gamma = self.coarse.n_gamma;
        let mut v0 = vec![C64::new(0.0, 0.0); self.coarse.dim];
        v0[..n_gamma].copy_from_slice(&v[..n_gamma]);
        let mut v_locals = Vec::with_capacity(self.n_subdomains());
        for i in 0..self.n_subdomains() {
            let v_g: Vec<C64> = self.fine_gamma_idx[i].iter().map(|&p| v[p]).collect();
            let v_i: Vec<C64> = self.fine_interior_idx[i].iter().map(|&p| v[p]).collect();
            // v_i-component: B_L (B_IΓ v_Γ + B_II v_I)
            let mut t = locals[i].b_ig.matvec_c(&v_g);
            let t2 = locals[i].b_ii.matvec_c(&v_i);
            for (a, b) in t.iter_mut().zip(t2.iter()) {
                *a += b;
            }
            v_locals.push(self.splits[i].apply_bl(&t));
            // α_S coefficients by H_II-orthonormality
            let k = self.splits[i].k_small();
            if k > 0 {
                let hv = locals[i].h_ii.matvec_c(&v_i);
                let alpha = self.splits[i].q_s.t_matvec_c(&hv);
                v0[self.coarse.alpha_off[i]..self.coarse.alpha_off[i] + k]
                    .copy_from_slice(&alpha);
            }
        }
        (v0, v_locals)
    }

    /// Exact solve B u = l through the substructure identity
    /// B⁻¹ = R₀ᵀ B₀⁻¹ R₀ + Σ Rᵢᵀ B_L Rᵢ. Dense LU of B₀ (desk scale).
    pub fn exact_solver(
        &self,
        locals: &[LocalOperators],
        l: &[C64],
    ) -> Result<Vec<C64>> {
        let b0_dense = self.coarse.b0.to_dense();
        let lu = ComplexLu::factor(b0_dense).map_err(|_| Error::Singular {
            context: "B0 is singular: discrete inf-sup lost at this (k, h)".to_string(),
        })?;
        let r0l = self.apply_r0(locals, l);
        let u0 = lu.solve(&r0l);
        let mut u = self.apply_r0t(locals, &u0);
        for i in 0..self.n_subdomains() {
            let l_i: Vec<C64> = self.fine_interior_idx[i].iter().map(|&p| l[p]).collect();
            let w = local_solve(&self.splits[i], &l_i)?;
            for (p, &wv) in self.fine_interior_idx[i].iter().zip(w.iter()) {
                u[*p] += wv;
            }
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::assemble_global;
    use crate::densela::nrm2;
    use crate::mesh::{build_decomposition, build_mesh};

    fn rng_vec(n: usize, seed: u64) -> Vec<C64> {
        let mut state = seed | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        (0..n).map(|_| C64::new(next(), next())).collect()
    }

    fn setup(inv_h: usize, inv_hc: usize, k: f64) -> (crate::mesh::Mesh, Decomposition, Vec<LocalOperators>, crate::assemble::GlobalSystem) {
        let mesh = build_mesh(inv_h).unwrap();
        let d = build_decomposition(&mesh, inv_hc).unwrap();
        let (locals, gs) = assemble_global(&mesh, &d, k);
        (mesh, d, locals, gs)
    }

    #[test]
    fn interior_eigenvalues_at_most_one() {
        // B_II = A − k²M and H_II = A + k²M force μ = (a−m)/(a+m) ≤ 1.
        let (_, d, locals, _) = setup(8, 2, 10.0);
        for i in 0..d.n_subdomains() {
            let sp = interior_modes(&locals[i], 0.01).unwrap();
            for &mu in sp.mu_s.iter().chain(sp.mu_l.iter()) {
                assert!(mu <= 1.0 + 1e-12, "eigenvalue {mu} above 1");
            }
        }
    }

    #[test]
    fn small_beta_selects_nothing_at_small_k() {
        let (_, d, locals, _) = setup(16, 4, 1.0);
        for i in 0..d.n_subdomains() {
            let sp = interior_modes(&locals[i], 0.01).unwrap();
            assert_eq!(sp.k_small(), 0);
            let min_mu = sp.mu_l.iter().fold(f64::MAX, |m, v| m.min(v.abs()));
            assert!(min_mu >= 0.01);
        }
    }

    #[test]
    fn local_solve_eigen_identity() {
        // rhs = B_II φ_j for a large mode gives back u_i = φ_j.
        let (_, d, locals, _) = setup(8, 2, 10.0);
        let sp = interior_modes(&locals[0], 0.01).unwrap();
        let j = sp.mu_l.len() / 2;
        let phi = sp.q_l.column(j);
        let phi_c: Vec<C64> = phi.iter().map(|&v| C64::new(v, 0.0)).collect();
        let rhs = locals[0].b_ii.matvec_c(&phi_c);
        let u = local_solve(&sp, &rhs).unwrap();
        for (ui, pi) in u.iter().zip(phi_c.iter()) {
            assert!((ui - pi).norm() < 1e-9);
        }
        let _ = d;
    }

    #[test]
    fn mode_space_and_saddle_paths_agree() {
        let (_, d, locals, _) = setup(8, 2, 12.0);
        for i in [0usize, 3] {
            // β high enough to make Q_S nonempty on occasion; either way the
            // paths must agree.
            let sp = interior_modes(&locals[i], 0.2).unwrap();
            let rhs = rng_vec(locals[i].n_i, 42 + i as u64);
            let a = local_solve(&sp, &rhs).unwrap();
            let b = local_solve_saddle(&locals[i], &sp, &rhs).unwrap();
            let scale = nrm2(&a).max(1e-30);
            let diff: f64 = a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff <= 1e-9 * scale, "paths differ by {diff} (rel {})", diff / scale);
            // orthogonality of the solution to the coarse modes
            let hu = locals[i].h_ii.matvec_c(&a);
            let proj = sp.q_s.t_matvec_c(&hu);
            for p in proj {
                assert!(p.norm() <= 1e-9 * scale);
            }
        }
        let _ = d;
    }

    #[test]
    fn schur_hat_limit_cases() {
        let (_, _, locals, _) = setup(8, 2, 10.0);
        let lo = &locals[0];
        // k_i = 0: classical Schur complement
        let sp0 = interior_modes(lo, 1e-12).unwrap();
        assert_eq!(sp0.k_small(), 0);
        let b_hat = schur_hat_b(lo, &sp0);
        // oracle: dense B_ΓΓ − B_ΓI B_II⁻¹ B_IΓ via complex LU column solves
        let b_ii_c = lo.b_ii.to_complex();
        let lu = ComplexLu::new(&b_ii_c).unwrap();
        let mut oracle = lo.b_gg.clone();
        for c in 0..lo.n_g {
            let col: Vec<C64> = (0..lo.n_i)
                .map(|r| C64::new(lo.b_ig[(r, c)], 0.0))
                .collect();
            let x = lu.solve(&col);
            for r in 0..lo.n_g {
                let dot: C64 = (0..lo.n_i)
                    .map(|t| C64::new(lo.b_gi[(r, t)], 0.0) * x[t])
                    .sum();
                oracle[(r, c)] -= dot;
            }
        }
        let mut err = 0.0f64;
        for i in 0..lo.n_g {
            for j in 0..lo.n_g {
                err = err.max((b_hat[(i, j)] - oracle[(i, j)]).norm());
            }
        }
        assert!(err <= 1e-9 * oracle.norm_max(), "err {err}");

        // k_i = n_i (all modes promoted): B̂ = B_ΓΓ
        let sp_all = interior_modes(lo, f64::MAX).unwrap();
        assert_eq!(sp_all.k_small(), lo.n_i);
        let b_hat_all = schur_hat_b(lo, &sp_all);
        let mut err2 = 0.0f64;
        for i in 0..lo.n_g {
            for j in 0..lo.n_g {
                err2 = err2.max((b_hat_all[(i, j)] - lo.b_gg[(i, j)]).norm());
            }
        }
        assert_eq!(err2, 0.0);
    }

    #[test]
    fn schur_hat_matches_bordered_saddle_oracle() {
        // Bordered-system elimination: apply the saddle solver to each
        // column of B_IΓ and contract with B_ΓI.
        let (_, d, locals, _) = setup(8, 2, 10.0);
        let lo = &locals[0];
        let sp = interior_modes(lo, 0.2).unwrap();
        let b_hat = schur_hat_b(lo, &sp);
        let mut oracle = lo.b_gg.clone();
        for c in 0..lo.n_g {
            let col: Vec<C64> = (0..lo.n_i)
                .map(|r| C64::new(lo.b_ig[(r, c)], 0.0))
                .collect();
            let x = local_solve_saddle(lo, &sp, &col).unwrap();
            for r in 0..lo.n_g {
                let dot: C64 = (0..lo.n_i)
                    .map(|t| C64::new(lo.b_gi[(r, t)], 0.0) * x[t])
                    .sum();
                oracle[(r, c)] -= dot;
            }
        }
        let mut err = 0.0f64;
        for i in 0..lo.n_g {
            for j in 0..lo.n_g {
                err = err.max((b_hat[(i, j)] - oracle[(i, j)]).norm());
            }
        }
        assert!(err <= 1e-9 * oracle.norm_max(), "err {err}");
        let _ = d;
    }

    #[test]
    fn b0_symmetry_and_dimension() {
        let (_, d, locals, _) = setup(8, 2, 10.0);
        let sub = Substructure::build(&d, &locals, 0.01).unwrap();
        assert_eq!(sub.coarse.b0.symmetry_error(), 0.0);
        let total_k: usize = sub.splits.iter().map(|s| s.k_small()).sum();
        assert_eq!(sub.coarse.dim, d.gamma.len() + total_k);
        // H0 blocks SPD
        for h in &sub.coarse.h0_blocks {
            assert!(crate::densela::Cholesky::new(h).is_ok());
        }
    }

    #[test]
    fn r0t_unit_alpha_recovers_qs_column() {
        // Force a nonempty Q_S with a generous β.
        let (_, d, locals, _) = setup(8, 2, 12.0);
        let sub = Substructure::build(&d, &locals, 0.5).unwrap();
        let i = sub.splits.iter().position(|s| s.k_small() > 0);
        let Some(i) = i else {
            panic!("expected at least one subdomain with small modes at this k");
        };
        let mut u0 = vec![C64::new(0.0, 0.0); sub.coarse.dim];
        u0[sub.coarse.alpha_off[i]] = C64::new(1.0, 0.0);
        let fine = sub.apply_r0t(&locals, &u0);
        for p in 0..sub.coarse.n_gamma {
            assert_eq!(fine[p].norm(), 0.0);
        }
        let col = sub.splits[i].q_s.column(0);
        for (p, &expect) in sub.fine_interior_idx[i].iter().zip(col.iter()) {
            assert!((fine[*p] - C64::new(expect, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn coarse_form_matches_fine_form() {
        // v0ᴴ B0 u0 = (R0ᵀ v0)ᴴ B (R0ᵀ u0)
        let (_, d, locals, gs) = setup(8, 2, 10.0);
        let sub = Substructure::build(&d, &locals, 0.3).unwrap();
        let u0 = rng_vec(sub.coarse.dim, 11);
        let v0 = rng_vec(sub.coarse.dim, 22);
        let b0u = sub.coarse.b0.matvec(&u0);
        let lhs: C64 = v0.iter().zip(b0u.iter()).map(|(a, b)| a.conj() * b).sum();
        let uf = sub.apply_r0t(&locals, &u0);
        let vf = sub.apply_r0t(&locals, &v0);
        let buf = gs.b.matvec(&uf);
        let rhs: C64 = vf.iter().zip(buf.iter()).map(|(a, b)| a.conj() * b).sum();
        assert!(
            (lhs - rhs).norm() <= 1e-10 * lhs.norm().max(rhs.norm()),
            "forms differ: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn h0_energy_identity() {
        // u0ᴴ (Σ Rᵀ H0⁽ⁱ⁾ R) u0 = ‖ℋ0ᵀ u0‖²_H
        let (_, d, locals, gs) = setup(8, 2, 10.0);
        let sub = Substructure::build(&d, &locals, 0.3).unwrap();
        let u0 = rng_vec(sub.coarse.dim, 33);
        let mut lhs = C64::new(0.0, 0.0);
        for i in 0..sub.n_subdomains() {
            let idx = sub.coarse.v0_indices(i);
            let ui: Vec<C64> = idx.iter().map(|&p| u0[p]).collect();
            let h0u = sub.coarse.h0_blocks[i].matvec_c(&ui);
            lhs += ui
                .iter()
                .zip(h0u.iter())
                .map(|(a, b)| a.conj() * b)
                .sum::<C64>();
        }
        let ext = sub.apply_h0t(&locals, &u0);
        let hx = gs.h.matvec(&ext);
        let rhs: C64 = ext.iter().zip(hx.iter()).map(|(a, b)| a.conj() * b).sum();
        assert!(
            (lhs - rhs).norm() <= 1e-10 * rhs.norm(),
            "energy identity off: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn decomposition_identity_and_uniqueness() {
        let (_, d, locals, _) = setup(8, 2, 10.0);
        let sub = Substructure::build(&d, &locals, 0.3).unwrap();
        let n_fine = sub.coarse.n_gamma
            + sub.fine_interior_idx.iter().map(|v| v.len()).sum::<usize>();
        let v = rng_vec(n_fine, 77);
        let (v0, v_locals) = sub.decompose(&locals, &v);
        let mut rec = sub.apply_r0t(&locals, &v0);
        for i in 0..sub.n_subdomains() {
            for (p, &w) in sub.fine_interior_idx[i].iter().zip(v_locals[i].iter()) {
                rec[*p] += w;
            }
        }
        let err: f64 = rec
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-11 * nrm2(&v), "reconstruction err {err}");

        // v = R0ᵀ u0 decomposes to (u0, 0)
        let u0 = rng_vec(sub.coarse.dim, 88);
        let vf = sub.apply_r0t(&locals, &u0);
        let (w0, w_loc) = sub.decompose(&locals, &vf);
        let d0: f64 = w0
            .iter()
            .zip(u0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(d0 <= 1e-10 * nrm2(&u0));
        for wl in &w_loc {
            assert!(nrm2(wl) <= 1e-9 * nrm2(&u0));
        }
    }

    #[test]
    fn local_residual_orthogonality() {
        // Q_Lᵀ R_i (B r) = 0 whenever r = R0ᵀ r0.
        let (_, d, locals, gs) = setup(8, 2, 10.0);
        let sub = Substructure::build(&d, &locals, 0.3).unwrap();
        let r0 = rng_vec(sub.coarse.dim, 55);
        let r = sub.apply_r0t(&locals, &r0);
        let br = gs.b.matvec(&r);
        for i in 0..sub.n_subdomains() {
            let br_i: Vec<C64> = sub.fine_interior_idx[i].iter().map(|&p| br[p]).collect();
            let proj = sub.splits[i].q_l.t_matvec_c(&br_i);
            let scale = nrm2(&br).max(1.0);
            for p in proj {
                assert!(p.norm() <= 1e-9 * scale, "orthogonality violated: {}", p.norm());
            }
        }
    }

    #[test]
    fn exact_solver_matches_dense_lu() {
        let (_, d, locals, gs) = setup(16, 4, 10.0);
        let sub = Substructure::build(&d, &locals, 0.01).unwrap();
        let l = rng_vec(gs.n_total, 4242);
        let u = sub.exact_solver(&locals, &l).unwrap();
        let dense = gs.b.to_dense();
        let lu = ComplexLu::factor(dense).unwrap();
        let u_ref = lu.solve(&l);
        let err: f64 = u
            .iter()
            .zip(u_ref.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-8 * nrm2(&u_ref), "exact solver err {}", err / nrm2(&u_ref));
    }
}
