//! End-to-end driver: builds the pipeline for one configuration, runs the
//! three-step coarse iteration, sweeps experiment grids into tables, and
//! runs the cross-module verification suite.
//!
//! The solve does local work exactly twice: once before the Krylov loop to
//! form the interior solutions and the reduced right-hand side, and once
//! after it to extend the coarse solution. The loop itself touches only the
//! coarse operator and the spectral preconditioner.

use crate::assemble::{assemble_coarse_aux, assemble_global, CoarseAux, GlobalSystem, LocalOperators};
use crate::densela::{nrm2, RealMat};
use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresReport};
use crate::mesh::{build_decomposition, build_mesh, Decomposition, Mesh};
use crate::precond::{build_bp, CorePlusLowRank, Preconditioner, PrecondKind};
use crate::spectra::{
    c0_full, select_p1_real, select_p2_real, select_p3_imag, select_p4_imag, ImagChoice,
    RealChoice,
};
use crate::substructure::{schur_hat_h, Substructure};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub k: f64,
    pub inv_h: usize,
    /// 1/H; must divide inv_h.
    pub inv_hc: usize,
    pub beta: f64,
    pub eta_re: f64,
    pub eta_im: f64,
    pub kind: PrecondKind,
    pub tol: f64,
    pub max_it: usize,
    pub seed: u64,
    /// Move the upper selection gate from 1+η to 2 in the one-stage
    /// pipelines (fewer eigenfunctions, similar convergence).
    pub large_cutoff_2: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: 10.0,
            inv_h: 16,
            inv_hc: 4,
            beta: 0.01,
            eta_re: 0.4,
            eta_im: 0.9,
            kind: PrecondKind::P4,
            tol: 1e-6,
            max_it: 200,
            seed: 0,
            large_cutoff_2: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k <= 0.0 {
            return Err(Error::Config("wavenumber k must be positive".into()));
        }
        if self.tol <= 0.0 {
            return Err(Error::Config("tol must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.eta_re) || !(0.0..1.0).contains(&self.eta_im) {
            return Err(Error::Config("thresholds must lie in [0, 1)".into()));
        }
        if self.beta <= 0.0 || self.beta >= 1.0 {
            return Err(Error::Config("beta must lie in (0, 1)".into()));
        }
        if self.max_it == 0 {
            return Err(Error::Config("max_it must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything built once per configuration, reusable across kinds.
pub struct Pipeline {
    pub mesh: Mesh,
    pub decomp: Decomposition,
    pub locals: Vec<LocalOperators>,
    pub gs: GlobalSystem,
    pub sub: Substructure,
    pub auxes: Vec<CoarseAux>,
}

pub fn build_pipeline(cfg: &ExperimentConfig) -> Result<Pipeline> {
    cfg.validate()?;
    let mesh = build_mesh(cfg.inv_h)?;
    let decomp = build_decomposition(&mesh, cfg.inv_hc)?;
    let (locals, gs) = assemble_global(&mesh, &decomp, cfg.k);
    let sub = Substructure::build(&decomp, &locals, cfg.beta)?;
    let auxes: Vec<CoarseAux> = (0..decomp.n_subdomains())
        .into_par_iter()
        .map(|i| {
            let h_hat = schur_hat_h(&locals[i], &sub.splits[i]);
            assemble_coarse_aux(&locals[i], &decomp.subdomains[i], &h_hat)
        })
        .collect();
    Ok(Pipeline { mesh, decomp, locals, gs, sub, auxes })
}

/// Per-subdomain eigenvalue selections for the configured kind.
pub fn select_spectra(
    p: &Pipeline,
    cfg: &ExperimentConfig,
) -> Result<(Vec<RealChoice>, Vec<Option<ImagChoice>>)> {
    let h = p.mesh.h();
    let choices: Vec<(RealChoice, Option<ImagChoice>)> = (0..p.sub.n_subdomains())
        .into_par_iter()
        .map(|i| -> Result<(RealChoice, Option<ImagChoice>)> {
            let h0 = &p.sub.coarse.h0_blocks[i];
            let re_b0 = p.sub.coarse.b0_blocks[i].real_part();
            let c0 = c0_full(&p.auxes[i].c0_gg, h0);
            let real = match cfg.kind {
                PrecondKind::P1 | PrecondKind::P3 => {
                    RealChoice::TwoStage(select_p1_real(&re_b0, h0, &c0, cfg.eta_re)?)
                }
                PrecondKind::P2 | PrecondKind::P4 => RealChoice::OneStage(select_p2_real(
                    &re_b0,
                    &c0,
                    cfg.eta_re,
                    cfg.large_cutoff_2,
                )?),
                PrecondKind::Exact => unreachable!(),
            };
            let imag = match cfg.kind {
                PrecondKind::P3 | PrecondKind::P4 => {
                    let aux = &p.auxes[i];
                    let n_pi = aux.pi_local.len();
                    let im_full = p.sub.coarse.b0_blocks[i].imag_part();
                    let im_b_pi = RealMat::from_fn(n_pi, n_pi, |r, c| {
                        im_full[(aux.pi_local[r], aux.pi_local[c])]
                    });
                    Some(match cfg.kind {
                        PrecondKind::P3 => ImagChoice::TwoStage(select_p3_imag(
                            &im_b_pi,
                            &aux.s_pipi,
                            &aux.c_diag,
                            h,
                            cfg.k,
                            cfg.eta_im,
                        )?),
                        _ => ImagChoice::OneStage(select_p4_imag(
                            &im_b_pi,
                            &aux.c_diag,
                            cfg.eta_im,
                            cfg.large_cutoff_2,
                        )?),
                    })
                }
                _ => None,
            };
            Ok((real, imag))
        })
        .collect::<Result<_>>()?;
    Ok(choices.into_iter().unzip())
}

/// Build the configured preconditioner; returns per-subdomain selection
/// counts (real, imaginary).
pub fn build_preconditioner(
    p: &Pipeline,
    cfg: &ExperimentConfig,
) -> Result<(Preconditioner, Vec<usize>, Vec<usize>)> {
    if cfg.kind == PrecondKind::Exact {
        let n = p.sub.n_subdomains();
        return Ok((Preconditioner::exact(&p.sub.coarse)?, vec![0; n], vec![0; n]));
    }
    let (real, imag) = select_spectra(p, cfg)?;
    let bp = build_bp(
        cfg.kind,
        &p.sub.coarse,
        &p.auxes,
        &real,
        &imag,
        cfg.eta_re,
        cfg.eta_im,
    )?;
    let counts_re = bp.counts_re.clone();
    let counts_im = bp.counts_im.clone();
    Ok((Preconditioner::spectral(bp), counts_re, counts_im))
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub iterations: usize,
    pub converged: bool,
    pub coarse_dim: usize,
    pub eig_re_max: usize,
    pub eig_re_avg: f64,
    pub eig_im_max: usize,
    pub eig_im_avg: f64,
    /// True fine-level relative residual of B u_h = l.
    pub final_residual: f64,
    pub local_solves: usize,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub residual_history: Vec<f64>,
}

impl RunResult {
    /// Paper-style cell: iterations(selected eigenfunctions, max).
    pub fn cell(&self) -> String {
        if self.converged {
            format!("{}({})", self.iterations, self.eig_re_max + self.eig_im_max)
        } else {
            "DNF".to_string()
        }
    }
}

/// Full three-step solve on a prebuilt pipeline and preconditioner.
pub fn run_with(
    p: &Pipeline,
    pre: &Preconditioner,
    counts_re: &[usize],
    counts_im: &[usize],
    cfg: &ExperimentConfig,
    setup_seconds: f64,
) -> Result<RunResult> {
    let t_solve = Instant::now();
    let n_sub = p.sub.n_subdomains();
    let n_gamma = p.sub.coarse.n_gamma;
    p.sub.reset_solve_count();

    // Step 1: interior solves and the reduced right-hand side r0 = R0 l,
    // assembled from -B_ΓI u_i so no further local work is needed.
    let l_gamma = p.gs.rhs_gamma();
    let u_locals: Vec<Vec<C64>> = (0..n_sub)
        .into_par_iter()
        .map(|i| {
            let l_i: Vec<C64> = p.sub.fine_interior_idx[i]
                .iter()
                .map(|&pos| p.gs.rhs[pos])
                .collect();
            p.sub.local_solve_counted(i, &l_i)
        })
        .collect::<Result<_>>()?;

    let mut r0 = vec![C64::new(0.0, 0.0); p.sub.coarse.dim];
    r0[..n_gamma].copy_from_slice(l_gamma);
    for i in 0..n_sub {
        let g = p.locals[i].b_gi.matvec_c(&u_locals[i]);
        for (pos, gv) in p.sub.fine_gamma_idx[i].iter().zip(g.iter()) {
            r0[*pos] -= gv;
        }
        let k = p.sub.splits[i].k_small();
        if k > 0 {
            let l_i: Vec<C64> = p.sub.fine_interior_idx[i]
                .iter()
                .map(|&pos| p.gs.rhs[pos])
                .collect();
            let alpha = p.sub.splits[i].q_s.t_matvec_c(&l_i);
            r0[p.sub.coarse.alpha_off[i]..p.sub.coarse.alpha_off[i] + k]
                .copy_from_slice(&alpha);
        }
    }
    let _ = l_interior;

    // Step 2: preconditioned GMRES on the coarse system.
    let report: GmresReport = gmres(
        |x| p.sub.coarse.b0.matvec(x),
        |x| pre.apply_coarse_inverse(x),
        &r0,
        cfg.tol,
        cfg.max_it,
    );

    // Step 3: u_h = R0ᵀ u0 + Σ Rᵢᵀ u_i (one more local solve per subdomain).
    let mut u = p.sub.apply_r0t(&p.locals, &report.solution);
    for i in 0..n_sub {
        for (pos, &w) in p.sub.fine_interior_idx[i].iter().zip(u_locals[i].iter()) {
            u[*pos] += w;
        }
    }

    let bu = p.gs.b.matvec(&u);
    let mut resid = 0.0f64;
    let mut lnorm = 0.0f64;
    for (bv, lv) in bu.iter().zip(p.gs.rhs.iter()) {
        resid += (bv - lv).norm_sqr();
        lnorm += lv.norm_sqr();
    }
    let final_residual = resid.sqrt() / lnorm.sqrt();

    let eig_re_max = counts_re.iter().copied().max().unwrap_or(0);
    let eig_im_max = counts_im.iter().copied().max().unwrap_or(0);
    let avg = |c: &[usize]| c.iter().sum::<usize>() as f64 / c.len().max(1) as f64;

    Ok(RunResult {
        iterations: report.iterations,
        converged: report.converged,
        coarse_dim: p.sub.coarse.dim,
        eig_re_max,
        eig_re_avg: avg(counts_re),
        eig_im_max,
        eig_im_avg: avg(counts_im),
        final_residual,
        local_solves: p.sub.solve_count(),
        setup_seconds,
        solve_seconds: t_solve.elapsed().as_secs_f64(),
        residual_history: report.relative_residuals,
    })
}

/// Build everything and run one experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<RunResult> {
    let t0 = Instant::now();
    let p = build_pipeline(cfg)?;
    let (pre, counts_re, counts_im) = build_preconditioner(&p, cfg)?;
    let setup = t0.elapsed().as_secs_f64();
    run_with(&p, &pre, &counts_re, &counts_im, cfg, setup)
}

/// One experiment grid: h down the rows, H across the columns.
#[derive(Clone, Debug)]
pub struct TableSpec {
    pub inv_hs: Vec<usize>,
    pub inv_hcs: Vec<usize>,
    pub base: ExperimentConfig,
}

pub enum Cell {
    Done(RunResult),
    Failed(String),
}

impl Cell {
    pub fn text(&self) -> String {
        match self {
            Cell::Done(r) => r.cell(),
            Cell::Failed(_) => "DNF".to_string(),
        }
    }
}

pub struct TableArtifact {
    pub spec: TableSpec,
    pub cells: Vec<Vec<Cell>>,
}

/// Run the whole grid; failures stay in their cells.
pub fn run_table(spec: &TableSpec) -> TableArtifact {
    let mut cells = Vec::with_capacity(spec.inv_hs.len());
    for &inv_h in &spec.inv_hs {
        let mut row = Vec::with_capacity(spec.inv_hcs.len());
        for &inv_hc in &spec.inv_hcs {
            let cfg = ExperimentConfig { inv_h, inv_hc, ..spec.base.clone() };
            let cell = match run(&cfg) {
                Ok(r) => Cell::Done(r),
                Err(e) => Cell::Failed(e.to_string()),
            };
            row.push(cell);
        }
        cells.push(row);
    }
    TableArtifact { spec: spec.clone(), cells }
}

impl TableArtifact {
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "| k={} {} | {} |\n",
            self.spec.base.k,
            self.spec.base.kind,
            self.spec
                .inv_hcs
                .iter()
                .map(|c| format!("H=1/{c}"))
                .collect::<Vec<_>>()
                .join(" | ")
        ));
        out.push_str(&format!("|---{}|\n", "|---".repeat(self.spec.inv_hcs.len())));
        for (ri, row) in self.cells.iter().enumerate() {
            out.push_str(&format!(
                "| h=1/{} | {} |\n",
                self.spec.inv_hs[ri],
                row.iter().map(|c| c.text()).collect::<Vec<_>>().join(" | ")
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "k,inv_h,inv_H,kind,iterations,converged,eig_re_max,eig_re_avg,eig_im_max,eig_im_avg,coarse_dim,final_residual,setup_seconds,solve_seconds\n",
        );
        for (ri, row) in self.cells.iter().enumerate() {
            for (ci, cell) in row.iter().enumerate() {
                let (inv_h, inv_hc) = (self.spec.inv_hs[ri], self.spec.inv_hcs[ci]);
                match cell {
                    Cell::Done(r) => out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{:e},{:.3},{:.3}\n",
                        self.spec.base.k,
                        inv_h,
                        inv_hc,
                        self.spec.base.kind,
                        r.iterations,
                        r.converged,
                        r.eig_re_max,
                        r.eig_re_avg,
                        r.eig_im_max,
                        r.eig_im_avg,
                        r.coarse_dim,
                        r.final_residual,
                        r.setup_seconds,
                        r.solve_seconds
                    )),
                    Cell::Failed(msg) => out.push_str(&format!(
                        "{},{},{},{},DNF,false,,,,,,,,\"{}\"\n",
                        self.spec.base.k, inv_h, inv_hc, self.spec.base.kind, msg
                    )),
                }
            }
        }
        out
    }
}

/// One verification check: measured deviation against its tolerance.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Cross-module invariant suite at the configured desk-scale point.
pub fn verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    verify_inner(cfg, false)
}

/// Mutation hook: flips one coarse-matrix entry before checking; at least
/// one check must then fail.
pub fn verify_corrupted(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    verify_inner(cfg, true)
}

fn verify_inner(cfg: &ExperimentConfig, corrupt: bool) -> Result<VerifyReport> {
    let mut p = build_pipeline(cfg)?;
    if corrupt {
        // flip the first stored off-diagonal coarse entry
        let b0 = &mut p.sub.coarse.b0;
        let mut target = None;
        'outer: for i in 0..b0.nrows {
            for kidx in b0.row_ptr[i]..b0.row_ptr[i + 1] {
                if b0.col_idx[kidx] != i {
                    target = Some(kidx);
                    break 'outer;
                }
            }
        }
        if let Some(kidx) = target {
            b0.values[kidx] = -b0.values[kidx] + C64::new(0.37, -0.11);
        }
    }
    let p = p;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rand_vec = |n: usize| -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect()
    };
    let mut checks = Vec::new();
    let mut push = |name: &'static str, dev: f64, tol: f64, checks: &mut Vec<CheckResult>| {
        checks.push(CheckResult { name, deviation: dev, tolerance: tol, passed: dev <= tol });
    };

    // exact-solver identity vs dense LU of B
    {
        let l = rand_vec(p.gs.n_total);
        let u = p.sub.exact_solver(&p.locals, &l)?;
        let dense = p.gs.b.to_dense();
        let lu = crate::densela::ComplexLu::factor(dense)
            .map_err(|_| Error::Singular { context: "global B".into() })?;
        let u_ref = lu.solve(&l);
        let num: f64 = u
            .iter()
            .zip(u_ref.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        push("exact_solver_identity", num / nrm2(&u_ref), 1e-8, &mut checks);
    }

    // decomposition identity over 20 random vectors
    {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let v = rand_vec(p.gs.n_total);
            let (v0, v_loc) = p.sub.decompose(&p.locals, &v);
            let mut rec = p.sub.apply_r0t(&p.locals, &v0);
            for i in 0..p.sub.n_subdomains() {
                for (pos, &w) in p.sub.fine_interior_idx[i].iter().zip(v_loc[i].iter()) {
                    rec[*pos] += w;
                }
            }
            let err: f64 = rec
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(err / nrm2(&v));
        }
        push("decomposition_identity", worst, 1e-11, &mut checks);
    }

    // coarse form vs fine form
    {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let u0 = rand_vec(p.sub.coarse.dim);
            let v0 = rand_vec(p.sub.coarse.dim);
            let b0u = p.sub.coarse.b0.matvec(&u0);
            let lhs: C64 = v0.iter().zip(b0u.iter()).map(|(a, b)| a.conj() * b).sum();
            let uf = p.sub.apply_r0t(&p.locals, &u0);
            let vf = p.sub.apply_r0t(&p.locals, &v0);
            let buf = p.gs.b.matvec(&uf);
            let rhs: C64 = vf.iter().zip(buf.iter()).map(|(a, b)| a.conj() * b).sum();
            worst = worst.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()));
        }
        push("quadratic_form_consistency", worst, 1e-10, &mut checks);
    }

    // H0 norm identity
    {
        let u0 = rand_vec(p.sub.coarse.dim);
        let mut lhs = C64::new(0.0, 0.0);
        for i in 0..p.sub.n_subdomains() {
            let idx = p.sub.coarse.v0_indices(i);
            let ui: Vec<C64> = idx.iter().map(|&pos| u0[pos]).collect();
            let h0u = p.sub.coarse.h0_blocks[i].matvec_c(&ui);
            lhs += ui
                .iter()
                .zip(h0u.iter())
                .map(|(a, b)| a.conj() * b)
                .sum::<C64>();
        }
        let ext = p.sub.apply_h0t(&p.locals, &u0);
        let hx = p.gs.h.matvec(&ext);
        let rhs: C64 = ext.iter().zip(hx.iter()).map(|(a, b)| a.conj() * b).sum();
        push("h0_norm_identity", (lhs - rhs).norm() / rhs.norm(), 1e-10, &mut checks);
    }

    // spectral projector identities (two-stage selection at eta_re)
    {
        let mut orth = 0.0f64;
        let mut idem = 0.0f64;
        let mut prod = 0.0f64;
        let mut h0_orth = 0.0f64;
        let mut band = 0.0f64;
        for i in 0..p.sub.n_subdomains() {
            let h0 = &p.sub.coarse.h0_blocks[i];
            let re_b0 = p.sub.coarse.b0_blocks[i].real_part();
            let c0 = c0_full(&p.auxes[i].c0_gg, h0);
            let pair = select_p1_real(&re_b0, h0, &c0, cfg.eta_re)?;
            let q = pair.q_combined();
            let kq = q.ncols();
            let n = h0.nrows();
            let qthq = q.t_matmul(&h0.matmul(&q));
            for r in 0..kq {
                for c in 0..kq {
                    let expect = if r == c { 1.0 } else { 0.0 };
                    orth = orth.max((qthq[(r, c)] - expect).abs());
                }
            }
            let pi = q.matmul(&q.t_matmul(h0));
            let pi2 = pi.matmul(&pi);
            let scale = pi.norm_max().max(1.0);
            for r in 0..n {
                for c in 0..n {
                    idem = idem.max((pi2[(r, c)] - pi[(r, c)]).abs() / scale);
                }
            }
            let pi1 = pair.q1.matmul(&pair.q1.t_matmul(h0));
            let pi2b = pair.q2.matmul(&pair.q2.t_matmul(h0));
            let pp = pi1.matmul(&pi2b);
            prod = prod.max(pp.norm_max() / scale);
            // Πᵀ H0 (I − Π) = ΠᵀH0 − ΠᵀH0Π
            let pit_h0 = pi.t_matmul(h0);
            let pit_h0_pi = pit_h0.matmul(&pi);
            let hscale = h0.norm_max().max(1.0);
            for r in 0..n {
                for c in 0..n {
                    h0_orth = h0_orth.max((pit_h0[(r, c)] - pit_h0_pi[(r, c)]).abs() / hscale);
                }
            }
            for j in 0..pair.q1_perp.ncols() {
                let x = pair.q1_perp.column(j);
                let num: f64 = x.iter().zip(re_b0.matvec(&x)).map(|(a, b)| a * b).sum();
                let den: f64 = x.iter().zip(h0.matvec(&x)).map(|(a, b)| a * b).sum();
                let q = num / den;
                band = band.max((q - 1.0).abs() - cfg.eta_re);
            }
        }
        push("projector_orthonormality", orth, 1e-9, &mut checks);
        push("projector_idempotency", idem, 1e-9, &mut checks);
        push("projector_product_zero", prod, 1e-9, &mut checks);
        push("projector_h0_orthogonality", h0_orth, 1e-9, &mut checks);
        push("rayleigh_band_membership", band.max(0.0), 1e-9, &mut checks);
    }

    // Woodbury consistency for the configured kind (exact kind: B0 LU)
    if cfg.kind != PrecondKind::Exact {
        let (real, imag) = select_spectra(&p, cfg)?;
        let bp: CorePlusLowRank = build_bp(
            cfg.kind,
            &p.sub.coarse,
            &p.auxes,
            &real,
            &imag,
            cfg.eta_re,
            cfg.eta_im,
        )?;
        let r = rand_vec(p.sub.coarse.dim);
        let x = bp.apply(&r);
        let bx = bp.b_p_dense().matvec(&x);
        let err: f64 = bx
            .iter()
            .zip(r.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        push("woodbury_consistency", err / nrm2(&r), 1e-9, &mut checks);

        // direct-solver-limit check when the thresholds select everything
        if cfg.eta_re == 0.0
            && cfg.eta_im == 0.0
            && matches!(cfg.kind, PrecondKind::P2 | PrecondKind::P4)
        {
            let bpd = bp.b_p_dense();
            let b0d = p.sub.coarse.b0.to_dense();
            let mut dev = 0.0f64;
            for r in 0..p.sub.coarse.dim {
                for c in 0..p.sub.coarse.dim {
                    dev = dev.max((bpd[(r, c)] - b0d[(r, c)]).norm());
                }
            }
            push("direct_solver_limit", dev / b0d.norm_max(), 1e-9, &mut checks);
        }
    }

    Ok(VerifyReport { checks })
}
