//! Coarse-level eigenvalue selection: the real-part pipelines feeding the
//! P1/P2 preconditioners and the imaginary-part pipelines feeding P3/P4.
//!
//! Every problem here is a real generalized eigenproblem with an SPD
//! right-hand side. Selection keeps eigenvalues strictly outside
//! [1−η, 1+η]; with the optional large-cutoff variant the upper gate moves
//! to 2 for the single-stage pipelines.

use crate::densela::{gen_eig_spd, RealMat};
use crate::error::Result;

/// One-stage selection: basis Q (M-orthonormal) with its eigenvalues.
#[derive(Clone, Debug)]
pub struct Selection {
    pub q: RealMat,
    pub lambdas: Vec<f64>,
    pub eta: f64,
    /// Unselected eigenvalues, for band diagnostics.
    pub band_lambdas: Vec<f64>,
}

impl Selection {
    pub fn count(&self) -> usize {
        self.lambdas.len()
    }

    pub fn empty(n: usize, eta: f64) -> Self {
        Self { q: RealMat::zeros(n, 0), lambdas: Vec::new(), eta, band_lambdas: Vec::new() }
    }
}

/// Two-stage selection: Q1 from the exact-metric problem, Q2 from the
/// block-diagonal metric posed on the stage-1 complement.
#[derive(Clone, Debug)]
pub struct ProjectorPair {
    pub q1: RealMat,
    pub lambdas1: Vec<f64>,
    pub q2: RealMat,
    pub lambdas2: Vec<f64>,
    /// Stage-1 complement basis (all unselected directions), M-orthonormal.
    pub q1_perp: RealMat,
    pub perp_lambdas: Vec<f64>,
    pub eta: f64,
}

impl ProjectorPair {
    pub fn count(&self) -> usize {
        self.lambdas1.len() + self.lambdas2.len()
    }

    /// [Q1, Q2]; M-orthonormal as a set.
    pub fn q_combined(&self) -> RealMat {
        let n = self.q1.nrows();
        let k1 = self.q1.ncols();
        let k2 = self.q2.ncols();
        let mut q = RealMat::zeros(n, k1 + k2);
        for r in 0..n {
            for c in 0..k1 {
                q[(r, c)] = self.q1[(r, c)];
            }
            for c in 0..k2 {
                q[(r, k1 + c)] = self.q2[(r, c)];
            }
        }
        q
    }

    pub fn empty(n: usize, eta: f64) -> Self {
        Self {
            q1: RealMat::zeros(n, 0),
            lambdas1: Vec::new(),
            q2: RealMat::zeros(n, 0),
            lambdas2: Vec::new(),
            q1_perp: RealMat::zeros(n, 0),
            perp_lambdas: Vec::new(),
            eta,
        }
    }
}

#[inline]
fn outside_band(lambda: f64, eta: f64, large_cutoff_2: bool) -> bool {
    let hi = if large_cutoff_2 { 2.0 } else { 1.0 + eta };
    lambda < 1.0 - eta || lambda > hi
}

fn split_columns(
    values: &[f64],
    vectors: &RealMat,
    eta: f64,
    large_cutoff_2: bool,
) -> (RealMat, Vec<f64>, RealMat, Vec<f64>) {
    let n = vectors.nrows();
    let rows: Vec<usize> = (0..n).collect();
    let sel: Vec<usize> = (0..values.len())
        .filter(|&j| outside_band(values[j], eta, large_cutoff_2))
        .collect();
    let unsel: Vec<usize> = (0..values.len())
        .filter(|&j| !outside_band(values[j], eta, large_cutoff_2))
        .collect();
    (
        vectors.submatrix(&rows, &sel),
        sel.iter().map(|&j| values[j]).collect(),
        vectors.submatrix(&rows, &unsel),
        unsel.iter().map(|&j| values[j]).collect(),
    )
}

/// Two-stage real-part selection for P1/P3:
/// Re B₀⁽ⁱ⁾ ξ = λ H₀⁽ⁱ⁾ ξ, then C₀ against H₀ on the complement.
pub fn select_p1_real(
    re_b0: &RealMat,
    h0: &RealMat,
    c0: &RealMat,
    eta: f64,
) -> Result<ProjectorPair> {
    let eig = gen_eig_spd(re_b0, h0)?;
    let (q1, lambdas1, q1_perp, perp_lambdas) =
        split_columns(&eig.values, &eig.vectors, eta, false);

    let a2 = q1_perp.t_matmul(&c0.matmul(&q1_perp));
    let m2 = q1_perp.t_matmul(&h0.matmul(&q1_perp));
    let eig2 = gen_eig_spd(&sym_avg(&a2), &sym_avg(&m2))?;
    let (phi_sel, lambdas2, _, _) = split_columns(&eig2.values, &eig2.vectors, eta, false);
    let q2 = q1_perp.matmul(&phi_sel);

    Ok(ProjectorPair { q1, lambdas1, q2, lambdas2, q1_perp, perp_lambdas, eta })
}

/// One-stage real-part selection for P2/P4: Re B₀⁽ⁱ⁾ ξ = λ C₀⁽ⁱ⁾ ξ.
pub fn select_p2_real(
    re_b0: &RealMat,
    c0: &RealMat,
    eta: f64,
    large_cutoff_2: bool,
) -> Result<Selection> {
    let eig = gen_eig_spd(re_b0, c0)?;
    let (q, lambdas, _, band_lambdas) =
        split_columns(&eig.values, &eig.vectors, eta, large_cutoff_2);
    Ok(Selection { q, lambdas, eta, band_lambdas })
}

/// Two-stage imaginary-part selection for P3, posed on the Π_i block:
/// Im B_ΓΓ ξ = λ (hk S_ΠΠ) ξ, then C_Diag against hk S_ΠΠ on the
/// complement. Returned bases are S_ΠΠ-orthonormal.
pub fn select_p3_imag(
    im_b_pi: &RealMat,
    s_pipi: &RealMat,
    c_diag: &[f64],
    h: f64,
    k: f64,
    eta_im: f64,
) -> Result<ProjectorPair> {
    let n_pi = im_b_pi.nrows();
    if n_pi == 0 {
        return Ok(ProjectorPair::empty(0, eta_im));
    }
    let hk = h * k;
    let mut metric = s_pipi.clone();
    metric.scale(hk);
    let eig = gen_eig_spd(im_b_pi, &metric)?;
    // rescale to S-orthonormality
    let mut vectors = eig.vectors.clone();
    vectors.scale(hk.sqrt());
    let (q1, lambdas1, q1_perp, perp_lambdas) =
        split_columns(&eig.values, &vectors, eta_im, false);

    let c_diag_mat = RealMat::from_fn(n_pi, n_pi, |i, j| if i == j { c_diag[i] } else { 0.0 });
    let a2 = q1_perp.t_matmul(&c_diag_mat.matmul(&q1_perp));
    let m2 = q1_perp.t_matmul(&metric.matmul(&q1_perp));
    let eig2 = gen_eig_spd(&sym_avg(&a2), &sym_avg(&m2))?;
    let (phi_sel, lambdas2, _, _) = split_columns(&eig2.values, &eig2.vectors, eta_im, false);
    let mut q2 = q1_perp.matmul(&phi_sel);
    q2.scale(hk.sqrt());

    Ok(ProjectorPair { q1, lambdas1, q2, lambdas2, q1_perp, perp_lambdas, eta: eta_im })
}

/// One-stage imaginary-part selection for P4 on the Π_i block:
/// Im B₀ ξ = λ C_Diag ξ with the diagonal C_Diag as metric.
pub fn select_p4_imag(
    im_b_pi: &RealMat,
    c_diag: &[f64],
    eta_im: f64,
    large_cutoff_2: bool,
) -> Result<Selection> {
    let n_pi = im_b_pi.nrows();
    if n_pi == 0 {
        return Ok(Selection::empty(0, eta_im));
    }
    let metric = RealMat::from_fn(n_pi, n_pi, |i, j| if i == j { c_diag[i] } else { 0.0 });
    let eig = gen_eig_spd(im_b_pi, &metric)?;
    let (q, lambdas, _, band_lambdas) =
        split_columns(&eig.values, &eig.vectors, eta_im, large_cutoff_2);
    Ok(Selection { q, lambdas, eta: eta_im, band_lambdas })
}

fn sym_avg(m: &RealMat) -> RealMat {
    let n = m.nrows();
    RealMat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Per-subdomain real-side choice.
#[derive(Clone, Debug)]
pub enum RealChoice {
    /// gen_eig_R11 + gen_eig_R12 (P1/P3).
    TwoStage(ProjectorPair),
    /// gen_eig_R (P2/P4).
    OneStage(Selection),
}

impl RealChoice {
    pub fn count(&self) -> usize {
        match self {
            RealChoice::TwoStage(p) => p.count(),
            RealChoice::OneStage(s) => s.count(),
        }
    }
}

/// Per-subdomain imaginary-side choice (None for P1/P2).
#[derive(Clone, Debug)]
pub enum ImagChoice {
    TwoStage(ProjectorPair),
    OneStage(Selection),
}

impl ImagChoice {
    pub fn count(&self) -> usize {
        match self {
            ImagChoice::TwoStage(p) => p.count(),
            ImagChoice::OneStage(s) => s.count(),
        }
    }
}

/// Assemble the full C₀⁽ⁱ⁾ = diag(Ĉ_ΓΓ, Q_Sᵀ H_II Q_S) over [Γ_i; α_S].
pub fn c0_full(c0_gg: &RealMat, h0_block: &RealMat) -> RealMat {
    let n_g = c0_gg.nrows();
    let n = h0_block.nrows();
    let mut c0 = RealMat::zeros(n, n);
    for r in 0..n_g {
        for c in 0..n_g {
            c0[(r, c)] = c0_gg[(r, c)];
        }
    }
    for r in n_g..n {
        for c in n_g..n {
            c0[(r, c)] = h0_block[(r, c)];
        }
    }
    c0
}
