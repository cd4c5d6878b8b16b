//! The four coarse preconditioners B_P1…B_P4 in core-plus-low-rank form,
//! and their wrapping with R₀/R₀ᵀ and the local mode solvers into the full
//! preconditioner.
//!
//! The core C = Σ Rᵀ(C₀⁽ⁱ⁾ + i·Im-part⁽ⁱ⁾)R assembles block-diagonally:
//! connected components of its pattern are factored independently, which is
//! what the Woodbury split buys. Corrections stay per-subdomain sparse;
//! the capacitance matrix is dense but only as large as the selection.

use crate::assemble::{CoarseAux, LocalOperators};
use crate::densela::{
    BlockFactor, ComplexLu, ComplexMat, ComplexSolver, FactorBlock, RealMat, WoodburyOperator,
};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::spectra::{c0_full, ImagChoice, RealChoice};
use crate::substructure::{CoarseSystem, Substructure};
use num_complex::Complex64 as C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecondKind {
    P1,
    P2,
    P3,
    P4,
    Exact,
}

impl std::fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PrecondKind::P1 => "p1",
            PrecondKind::P2 => "p2",
            PrecondKind::P3 => "p3",
            PrecondKind::P4 => "p4",
            PrecondKind::Exact => "exact",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for PrecondKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(PrecondKind::P1),
            "p2" => Ok(PrecondKind::P2),
            "p3" => Ok(PrecondKind::P3),
            "p4" => Ok(PrecondKind::P4),
            "exact" => Ok(PrecondKind::Exact),
            other => Err(Error::Config(format!("unknown preconditioner kind '{other}'"))),
        }
    }
}

/// Factorization of the block-diagonal core by connected components.
pub struct BlockDiagSolver {
    dim: usize,
    /// (sorted index set, dense LU of the gathered block)
    components: Vec<(Vec<usize>, ComplexLu)>,
}

impl BlockDiagSolver {
    pub fn build(c: &CsrMatrix) -> Result<Self> {
        let n = c.nrows;
        // union-find over the sparsity pattern
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for i in 0..n {
            for k in c.row_ptr[i]..c.row_ptr[i + 1] {
                let j = c.col_idx[k];
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    // deterministic: smaller root wins
                    let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                    parent[hi] = lo;
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let mut components = Vec::with_capacity(groups.len());
        for (_, idx) in groups {
            let m = idx.len();
            let mut dense = ComplexMat::zeros(m, m);
            let pos: std::collections::HashMap<usize, usize> =
                idx.iter().enumerate().map(|(p, &g)| (g, p)).collect();
            for (p, &g) in idx.iter().enumerate() {
                for k in c.row_ptr[g]..c.row_ptr[g + 1] {
                    let j = c.col_idx[k];
                    dense[(p, pos[&j])] = c.values[k];
                }
            }
            let lu = ComplexLu::factor(dense).map_err(|_| Error::Singular {
                context: format!("core block of size {m}"),
            })?;
            components.push((idx, lu));
        }
        Ok(Self { dim: n, components })
    }

    pub fn component_sets(&self) -> Vec<Vec<usize>> {
        self.components.iter().map(|(idx, _)| idx.clone()).collect()
    }
}

impl ComplexSolver for BlockDiagSolver {
    fn dim(&self) -> usize {
        self.dim
    }

    fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for (idx, lu) in &self.components {
            let local: Vec<C64> = idx.iter().map(|&g| rhs[g]).collect();
            if local.iter().all(|v| v.re == 0.0 && v.im == 0.0) {
                continue;
            }
            let x = lu.solve(&local);
            for (p, &g) in idx.iter().enumerate() {
                out[g] = x[p];
            }
        }
        out
    }
}

/// One coarse preconditioner B_P = C − Σ UⱼVⱼ held in applicable form.
pub struct CorePlusLowRank {
    pub kind: PrecondKind,
    /// Assembled core (kept for pattern checks and dense reconstruction).
    pub c: CsrMatrix,
    /// Connected components of the core pattern.
    pub components: Vec<Vec<usize>>,
    pub woodbury: WoodburyOperator,
    /// Selected counts per subdomain (real side, imaginary side).
    pub counts_re: Vec<usize>,
    pub counts_im: Vec<usize>,
}

impl CorePlusLowRank {
    /// B_P⁻¹ r₀ by the Woodbury identity.
    pub fn apply(&self, r0: &[C64]) -> Vec<C64> {
        self.woodbury.apply(r0)
    }

    /// Dense B_P = C + Σ (folded U)V; test-scale reconstruction.
    pub fn b_p_dense(&self) -> ComplexMat {
        let mut b = self.c.to_dense();
        let (u, v) = self.woodbury.factors();
        if u.ncols > 0 {
            let uv = u.to_dense().matmul(&v.to_dense());
            b.add_scaled(C64::new(1.0, 0.0), &uv);
        }
        b
    }
}

/// Assemble the core triplets for one kind.
fn core_triplets(
    kind: PrecondKind,
    coarse: &CoarseSystem,
    auxes: &[CoarseAux],
) -> Vec<(usize, usize, C64)> {
    let n_sub = coarse.b0_blocks.len();
    let mut trip = Vec::new();
    for i in 0..n_sub {
        let idx = coarse.v0_indices(i);
        let n_g = coarse.gamma_maps[i].len();
        let k = coarse.k_small(i);
        let aux = &auxes[i];
        // real block-diagonal part: Ĉ_ΓΓ and the α_S block of H0
        for r in 0..n_g {
            for c in 0..n_g {
                let v = aux.c0_gg[(r, c)];
                if v != 0.0 {
                    trip.push((idx[r], idx[c], C64::new(v, 0.0)));
                }
            }
        }
        let h0 = &coarse.h0_blocks[i];
        for r in 0..k {
            for c in 0..k {
                let v = h0[(n_g + r, n_g + c)];
                if v != 0.0 {
                    trip.push((idx[n_g + r], idx[n_g + c], C64::new(v, 0.0)));
                }
            }
        }
        // imaginary part
        match kind {
            PrecondKind::P1 | PrecondKind::P2 => {
                // full Im B0⁽ⁱ⁾, supported on the ΓΓ block
                let im = coarse.b0_blocks[i].imag_part();
                for r in 0..n_g {
                    for c in 0..n_g {
                        let v = im[(r, c)];
                        if v != 0.0 {
                            trip.push((idx[r], idx[c], C64::new(0.0, v)));
                        }
                    }
                }
            }
            PrecondKind::P3 | PrecondKind::P4 => {
                for (p, &lp) in aux.pi_local.iter().enumerate() {
                    let v = aux.c_diag[p];
                    if v != 0.0 {
                        trip.push((idx[lp], idx[lp], C64::new(0.0, v)));
                    }
                }
            }
            PrecondKind::Exact => unreachable!("exact kind has no core"),
        }
    }
    trip
}

fn real_to_c(m: &RealMat) -> ComplexMat {
    m.to_complex()
}

/// Build B_P for the requested kind from the per-subdomain selections.
pub fn build_bp(
    kind: PrecondKind,
    coarse: &CoarseSystem,
    auxes: &[CoarseAux],
    real: &[RealChoice],
    imag: &[Option<ImagChoice>],
    eta_re: f64,
    eta_im: f64,
) -> Result<CorePlusLowRank> {
    assert!(kind != PrecondKind::Exact, "exact kind bypasses build_bp");
    let n_sub = coarse.b0_blocks.len();
    assert_eq!(real.len(), n_sub);
    assert_eq!(imag.len(), n_sub);
    let dim = coarse.dim;

    let trip = core_triplets(kind, coarse, auxes);
    let c = CsrMatrix::from_triplets(dim, dim, &trip);
    let solver = BlockDiagSolver::build(&c)?;
    let components = solver.component_sets();

    // Per-pair column offsets, subdomain-major inside each pair.
    let counts_re: Vec<usize> = real.iter().map(|r| r.count()).collect();
    let counts_im: Vec<usize> = imag
        .iter()
        .map(|c| c.as_ref().map_or(0, |v| v.count()))
        .collect();
    let total_re: usize = counts_re.iter().sum();
    let total_im: usize = counts_im.iter().sum();
    let off_re: Vec<usize> = counts_re
        .iter()
        .scan(0usize, |acc, &c| {
            let o = *acc;
            *acc += c;
            Some(o)
        })
        .collect();
    let off_im: Vec<usize> = counts_im
        .iter()
        .scan(0usize, |acc, &c| {
            let o = *acc;
            *acc += c;
            Some(o)
        })
        .collect();

    let minus = C64::new(-1.0, 0.0);
    let minus_i = C64::new(0.0, -1.0);

    let mut pairs: Vec<(BlockFactor, BlockFactor)> = Vec::new();
    match kind {
        PrecondKind::P1 | PrecondKind::P3 => {
            // two correction pairs from the H0-orthonormal projector
            let mut u1 = BlockFactor::new(dim, total_re);
            let mut v1 = BlockFactor::new(total_re, dim);
            let mut u2 = BlockFactor::new(dim, total_re);
            let mut v2 = BlockFactor::new(total_re, dim);
            for i in 0..n_sub {
                let RealChoice::TwoStage(pair) = &real[i] else {
                    return Err(Error::Config(format!(
                        "{kind} needs two-stage real selections"
                    )));
                };
                let kq = pair.count();
                if kq == 0 {
                    continue;
                }
                let idx = coarse.v0_indices(i);
                let cols: Vec<usize> = (off_re[i]..off_re[i] + kq).collect();
                let q = pair.q_combined();
                let h0 = &coarse.h0_blocks[i];
                let c0 = c0_full(&auxes[i].c0_gg, h0);
                let mut d_re = c0;
                d_re.add_scaled(-1.0, &coarse.b0_blocks[i].real_part());

                let dq = d_re.matmul(&q);
                let qt_h0 = q.t_matmul(h0);
                let hq = h0.matmul(&q);
                // V2 = Qᵀ D (I − Q Qᵀ H0)
                let e = q.t_matmul(&d_re);
                let eq = e.matmul(&q);
                let mut v2m = e.clone();
                let corr = eq.matmul(&qt_h0);
                v2m.add_scaled(-1.0, &corr);

                let mut u1m = real_to_c(&dq);
                u1m.scale_by(minus);
                u1.push(FactorBlock { rows: idx.clone(), cols: cols.clone(), mat: u1m });
                v1.push(FactorBlock {
                    rows: cols.clone(),
                    cols: idx.clone(),
                    mat: real_to_c(&qt_h0),
                });
                let mut u2m = real_to_c(&hq);
                u2m.scale_by(minus);
                u2.push(FactorBlock { rows: idx.clone(), cols: cols.clone(), mat: u2m });
                v2.push(FactorBlock { rows: cols, cols: idx, mat: real_to_c(&v2m) });
            }
            pairs.push((u1, v1));
            pairs.push((u2, v2));
        }
        PrecondKind::P2 | PrecondKind::P4 => {
            let mut u = BlockFactor::new(dim, total_re);
            let mut v = BlockFactor::new(total_re, dim);
            for i in 0..n_sub {
                let RealChoice::OneStage(sel) = &real[i] else {
                    return Err(Error::Config(format!(
                        "{kind} needs one-stage real selections"
                    )));
                };
                let kq = sel.count();
                if kq == 0 {
                    continue;
                }
                let idx = coarse.v0_indices(i);
                let cols: Vec<usize> = (off_re[i]..off_re[i] + kq).collect();
                let c0 = c0_full(&auxes[i].c0_gg, &coarse.h0_blocks[i]);
                let cq = c0.matmul(&sel.q);
                // fold D = diag(1−λ) into U
                let mut cqd = cq.clone();
                for r in 0..cqd.nrows() {
                    let row = cqd.row_mut(r);
                    for (val, &lam) in row.iter_mut().zip(sel.lambdas.iter()) {
                        *val *= 1.0 - lam;
                    }
                }
                let qt_c0 = sel.q.t_matmul(&c0);
                let mut um = real_to_c(&cqd);
                um.scale_by(minus);
                u.push(FactorBlock { rows: idx.clone(), cols: cols.clone(), mat: um });
                v.push(FactorBlock { rows: cols, cols: idx, mat: real_to_c(&qt_c0) });
            }
            pairs.push((u, v));
        }
        PrecondKind::Exact => unreachable!(),
    }

    // imaginary-side corrections for P3/P4
    match kind {
        PrecondKind::P3 => {
            let mut u3 = BlockFactor::new(dim, total_im);
            let mut v3 = BlockFactor::new(total_im, dim);
            let mut u4 = BlockFactor::new(dim, total_im);
            let mut v4 = BlockFactor::new(total_im, dim);
            for i in 0..n_sub {
                let Some(ImagChoice::TwoStage(pair)) = &imag[i] else {
                    if counts_im[i] > 0 {
                        return Err(Error::Config("p3 needs two-stage imaginary selections".into()));
                    }
                    continue;
                };
                let kq = pair.count();
                if kq == 0 {
                    continue;
                }
                let aux = &auxes[i];
                let idx = coarse.v0_indices(i);
                let pi_idx: Vec<usize> = aux.pi_local.iter().map(|&p| idx[p]).collect();
                let cols: Vec<usize> = (off_im[i]..off_im[i] + kq).collect();
                let n_pi = aux.pi_local.len();
                let q = pair.q_combined();
                let im_b = coarse.b0_blocks[i].imag_part();
                let d_im = RealMat::from_fn(n_pi, n_pi, |r, c| {
                    let v = if r == c { aux.c_diag[r] } else { 0.0 };
                    v - im_b[(aux.pi_local[r], aux.pi_local[c])]
                });
                let s = &aux.s_pipi;

                let dq = d_im.matmul(&q);
                let qt_s = q.t_matmul(s);
                let sq = s.matmul(&q);
                let e = q.t_matmul(&d_im);
                let eq = e.matmul(&q);
                let mut v4m = e.clone();
                let corr = eq.matmul(&qt_s);
                v4m.add_scaled(-1.0, &corr);

                let mut u3m = real_to_c(&dq);
                u3m.scale_by(minus_i);
                u3.push(FactorBlock { rows: pi_idx.clone(), cols: cols.clone(), mat: u3m });
                v3.push(FactorBlock {
                    rows: cols.clone(),
                    cols: pi_idx.clone(),
                    mat: real_to_c(&qt_s),
                });
                let mut u4m = real_to_c(&sq);
                u4m.scale_by(minus_i);
                u4.push(FactorBlock { rows: pi_idx.clone(), cols: cols.clone(), mat: u4m });
                v4.push(FactorBlock { rows: cols, cols: pi_idx, mat: real_to_c(&v4m) });
            }
            pairs.push((u3, v3));
            pairs.push((u4, v4));
        }
        PrecondKind::P4 => {
            let mut u = BlockFactor::new(dim, total_im);
            let mut v = BlockFactor::new(total_im, dim);
            for i in 0..n_sub {
                let Some(ImagChoice::OneStage(sel)) = &imag[i] else {
                    if counts_im[i] > 0 {
                        return Err(Error::Config("p4 needs one-stage imaginary selections".into()));
                    }
                    continue;
                };
                let kq = sel.count();
                if kq == 0 {
                    continue;
                }
                let aux = &auxes[i];
                let idx = coarse.v0_indices(i);
                let pi_idx: Vec<usize> = aux.pi_local.iter().map(|&p| idx[p]).collect();
                let cols: Vec<usize> = (off_im[i]..off_im[i] + kq).collect();
                let n_pi = aux.pi_local.len();
                // C_Diag Q D_im and Qᵀ C_Diag
                let mut cqd = RealMat::zeros(n_pi, kq);
                let mut qt_c = RealMat::zeros(kq, n_pi);
                for r in 0..n_pi {
                    for cidx in 0..kq {
                        cqd[(r, cidx)] =
                            aux.c_diag[r] * sel.q[(r, cidx)] * (1.0 - sel.lambdas[cidx]);
                        qt_c[(cidx, r)] = sel.q[(r, cidx)] * aux.c_diag[r];
                    }
                }
                let mut um = real_to_c(&cqd);
                um.scale_by(minus_i);
                u.push(FactorBlock { rows: pi_idx.clone(), cols: cols.clone(), mat: um });
                v.push(FactorBlock { rows: cols, cols: pi_idx, mat: real_to_c(&qt_c) });
            }
            pairs.push((u, v));
        }
        PrecondKind::P1 | PrecondKind::P2 => {}
        PrecondKind::Exact => unreachable!(),
    }

    let woodbury =
        WoodburyOperator::from_pairs(Box::new(solver), pairs).map_err(|e| match e {
            Error::Singular { .. } => Error::SingularCapacitance {
                kind: kind.to_string(),
                eta: if matches!(kind, PrecondKind::P3 | PrecondKind::P4) {
                    eta_re.max(eta_im)
                } else {
                    eta_re
                },
            },
            other => other,
        })?;

    Ok(CorePlusLowRank { kind, c, components, woodbury, counts_re, counts_im })
}

/// Coarse-inverse action: spectral Woodbury or the exact B₀ LU.
pub enum CoarseInverse {
    Spectral(CorePlusLowRank),
    Exact(ComplexLu),
}

/// Full preconditioner: coarse inverse plus local mode solvers.
pub struct Preconditioner {
    pub kind: PrecondKind,
    pub coarse: CoarseInverse,
}

impl Preconditioner {
    pub fn exact(coarse: &CoarseSystem) -> Result<Self> {
        let lu = ComplexLu::factor(coarse.b0.to_dense()).map_err(|_| Error::Singular {
            context: "B0 is singular: discrete inf-sup lost at this (k, h)".to_string(),
        })?;
        Ok(Self { kind: PrecondKind::Exact, coarse: CoarseInverse::Exact(lu) })
    }

    pub fn spectral(bp: CorePlusLowRank) -> Self {
        Self { kind: bp.kind, coarse: CoarseInverse::Spectral(bp) }
    }

    /// B_P⁻¹ r₀ (or B₀⁻¹ r₀ for the exact kind).
    pub fn apply_coarse_inverse(&self, r0: &[C64]) -> Vec<C64> {
        match &self.coarse {
            CoarseInverse::Spectral(bp) => bp.apply(r0),
            CoarseInverse::Exact(lu) => lu.solve(r0),
        }
    }

    /// Validation path: P⁻¹v = R₀ᵀ B_P⁻¹ R₀ v + Σ Rᵢᵀ B_L v|_{I_i}.
    pub fn apply_full(
        &self,
        sub: &Substructure,
        locals: &[LocalOperators],
        v: &[C64],
    ) -> Vec<C64> {
        let r0 = sub.apply_r0(locals, v);
        let u0 = self.apply_coarse_inverse(&r0);
        let mut out = sub.apply_r0t(locals, &u0);
        for i in 0..sub.n_subdomains() {
            let v_i: Vec<C64> = sub.fine_interior_idx[i].iter().map(|&p| v[p]).collect();
            let w = sub.splits[i].apply_bl(&v_i);
            for (p, &wv) in sub.fine_interior_idx[i].iter().zip(w.iter()) {
                out[*p] += wv;
            }
        }
        out
    }
}

impl ComplexMat {
    fn scale_by(&mut self, a: C64) {
        for i in 0..self.nrows() {
            for v in self.row_mut(i) {
                *v *= a;
            }
        }
    }
}
