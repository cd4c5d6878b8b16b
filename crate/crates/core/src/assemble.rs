//! P1 finite element assembly: element integrals, per-subdomain Neumann
//! matrices, the global Helmholtz system with its plane-wave impedance data,
//! and the auxiliary matrices feeding the coarse preconditioners.
//!
//! Conventions: the sesquilinear form is
//!   b(u,v) = ∫ ∇u·∇v̄ − k² ∫ u v̄ + ik ∫_∂Ω u v̄,
//! so B⁽ⁱ⁾ = A⁽ⁱ⁾ − k²M⁽ⁱ⁾ + ik M_∂⁽ⁱ⁾ and the energy matrix is
//! H⁽ⁱ⁾ = A⁽ⁱ⁾ + k²M⁽ⁱ⁾. Local index order is [Γ_i; I_i], both inheriting
//! the global lexicographic order.

use crate::densela::{Cholesky, ComplexMat, RealMat};
use crate::error::{Error, Result};
use crate::mesh::{Decomposition, Mesh, Subdomain};
use crate::sparse::CsrMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Plane-wave direction for the impedance data, (cos π/8, sin π/8).
pub fn wave_direction() -> [f64; 2] {
    [(std::f64::consts::PI / 8.0).cos(), (std::f64::consts::PI / 8.0).sin()]
}

/// Exact P1 element integrals on a triangle: stiffness ∫∇λ_a·∇λ_b and
/// mass ∫λ_a λ_b, closed-form through the affine map.
pub fn element_matrices(coords: &[[f64; 2]; 3]) -> Result<(RealMat, RealMat)> {
    let [p0, p1, p2] = coords;
    let b = [p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]];
    let c = [p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]];
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    if det.abs() < 1e-300 {
        return Err(Error::Config("degenerate triangle".to_string()));
    }
    let area = 0.5 * det.abs();
    let mut stiff = RealMat::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            stiff[(i, j)] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    let mut mass = RealMat::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            mass[(i, j)] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    Ok((stiff, mass))
}

/// 1D P1 mass matrix on a boundary edge of length `len`: (len/6)·[[2,1],[1,2]].
pub fn edge_mass_matrix(len: f64) -> RealMat {
    RealMat::from_rows(&[&[len / 3.0, len / 6.0], &[len / 6.0, len / 3.0]])
}

/// Per-subdomain Neumann matrices in the [Γ_i; I_i] block split.
#[derive(Clone, Debug)]
pub struct LocalOperators {
    pub n_g: usize,
    pub n_i: usize,
    pub k: f64,
    /// Complex ΓΓ block of B⁽ⁱ⁾ (carries the impedance term on Π_i).
    pub b_gg: ComplexMat,
    pub b_gi: RealMat,
    pub b_ig: RealMat,
    pub b_ii: RealMat,
    pub h_gg: RealMat,
    pub h_gi: RealMat,
    pub h_ig: RealMat,
    pub h_ii: RealMat,
    pub a_gg: RealMat,
    pub a_gi: RealMat,
    pub a_ig: RealMat,
    pub a_ii: RealMat,
    /// Imaginary part of b_gg: k times the boundary mass on Π_i.
    pub im_b_gg: RealMat,
}

impl LocalOperators {
    /// Dense B⁽ⁱ⁾ over [Γ_i; I_i]; test and oracle use.
    pub fn b_full(&self) -> ComplexMat {
        let n = self.n_g + self.n_i;
        let mut b = ComplexMat::zeros(n, n);
        for i in 0..self.n_g {
            for j in 0..self.n_g {
                b[(i, j)] = self.b_gg[(i, j)];
            }
            for j in 0..self.n_i {
                b[(i, self.n_g + j)] = C64::new(self.b_gi[(i, j)], 0.0);
                b[(self.n_g + j, i)] = C64::new(self.b_ig[(j, i)], 0.0);
            }
        }
        for i in 0..self.n_i {
            for j in 0..self.n_i {
                b[(self.n_g + i, self.n_g + j)] = C64::new(self.b_ii[(i, j)], 0.0);
            }
        }
        b
    }

    /// Dense H⁽ⁱ⁾ over [Γ_i; I_i].
    pub fn h_full(&self) -> RealMat {
        let n = self.n_g + self.n_i;
        let mut h = RealMat::zeros(n, n);
        for i in 0..self.n_g {
            for j in 0..self.n_g {
                h[(i, j)] = self.h_gg[(i, j)];
            }
            for j in 0..self.n_i {
                h[(i, self.n_g + j)] = self.h_gi[(i, j)];
                h[(self.n_g + j, i)] = self.h_ig[(j, i)];
            }
        }
        for i in 0..self.n_i {
            for j in 0..self.n_i {
                h[(self.n_g + i, self.n_g + j)] = self.h_ii[(i, j)];
            }
        }
        h
    }
}

/// Assemble A, M and the Π_i boundary mass on a subdomain's local numbering
/// [gamma_i; interior_i].
fn assemble_amm(
    mesh: &Mesh,
    sub: &Subdomain,
) -> (RealMat, RealMat, RealMat, Vec<usize>) {
    let n_g = sub.gamma_i.len();
    let n = n_g + sub.interior_i.len();
    // global node -> local position
    let mut local = std::collections::HashMap::with_capacity(n);
    for (p, &g) in sub.gamma_i.iter().chain(sub.interior_i.iter()).enumerate() {
        local.insert(g, p);
    }

    let mut a = RealMat::zeros(n, n);
    let mut m = RealMat::zeros(n, n);
    for &t in &sub.triangles {
        let tri = mesh.triangles[t];
        let coords = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let (ke, me) = element_matrices(&coords).expect("mesh produced a degenerate triangle");
        let loc = [local[&tri[0]], local[&tri[1]], local[&tri[2]]];
        for r in 0..3 {
            for c in 0..3 {
                a[(loc[r], loc[c])] += ke[(r, c)];
                m[(loc[r], loc[c])] += me[(r, c)];
            }
        }
    }

    let mut m_bd = RealMat::zeros(n_g, n_g);
    let mut owned_edges = Vec::new();
    for (edge, _normal) in mesh.boundary_edges() {
        if let (Some(&la), Some(&lb)) = (local.get(&edge[0]), local.get(&edge[1])) {
            debug_assert!(la < n_g && lb < n_g, "boundary edge nodes must lie on Γ_i");
            let len = mesh.h();
            let em = edge_mass_matrix(len);
            let idx = [la, lb];
            for r in 0..2 {
                for c in 0..2 {
                    m_bd[(idx[r], idx[c])] += em[(r, c)];
                }
            }
            owned_edges.push(edge[0]);
        }
    }
    (a, m, m_bd, owned_edges)
}

/// Build the local Neumann matrices for subdomain `i` at wavenumber `k`.
pub fn assemble_local(
    mesh: &Mesh,
    decomp: &Decomposition,
    i: usize,
    k: f64,
) -> LocalOperators {
    let sub = &decomp.subdomains[i];
    let n_g = sub.gamma_i.len();
    let n_i = sub.interior_i.len();
    let (a, m, m_bd, _) = assemble_amm(mesh, sub);

    let gi: Vec<usize> = (0..n_g).collect();
    let ii: Vec<usize> = (n_g..n_g + n_i).collect();

    let a_gg = a.submatrix(&gi, &gi);
    let a_gi = a.submatrix(&gi, &ii);
    let a_ig = a.submatrix(&ii, &gi);
    let a_ii = a.submatrix(&ii, &ii);
    let m_gg = m.submatrix(&gi, &gi);
    let m_gi = m.submatrix(&gi, &ii);
    let m_ig = m.submatrix(&ii, &gi);
    let m_ii = m.submatrix(&ii, &ii);

    let k2 = k * k;
    let block = |a: &RealMat, m: &RealMat, sign: f64| {
        let mut out = a.clone();
        out.add_scaled(sign * k2, m);
        out
    };
    let b_gi = block(&a_gi, &m_gi, -1.0);
    let b_ig = block(&a_ig, &m_ig, -1.0);
    let b_ii = block(&a_ii, &m_ii, -1.0);
    let h_gg = block(&a_gg, &m_gg, 1.0);
    let h_gi = block(&a_gi, &m_gi, 1.0);
    let h_ig = block(&a_ig, &m_ig, 1.0);
    let h_ii = block(&a_ii, &m_ii, 1.0);

    let mut im_b_gg = m_bd;
    im_b_gg.scale(k);
    let re_b_gg = block(&a_gg, &m_gg, -1.0);
    let mut b_gg = ComplexMat::zeros(n_g, n_g);
    for r in 0..n_g {
        for c in 0..n_g {
            b_gg[(r, c)] = C64::new(re_b_gg[(r, c)], im_b_gg[(r, c)]);
        }
    }

    LocalOperators {
        n_g,
        n_i,
        k,
        b_gg,
        b_gi,
        b_ig,
        b_ii,
        h_gg,
        h_gi,
        h_ig,
        h_ii,
        a_gg,
        a_gi,
        a_ig,
        a_ii,
        im_b_gg,
    }
}

/// Global system over the (Γ, I) ordering.
#[derive(Clone, Debug)]
pub struct GlobalSystem {
    pub k: f64,
    pub n_gamma: usize,
    pub n_total: usize,
    /// B = Σ Rᵀ B⁽ⁱ⁾ R, complex symmetric.
    pub b: CsrMatrix,
    /// H = Σ Rᵀ H⁽ⁱ⁾ R, real SPD (stored complex for uniform matvec).
    pub h: CsrMatrix,
    /// Right-hand side in (Γ, I) order.
    pub rhs: Vec<C64>,
    /// node index -> position in the (Γ, I) ordering.
    pub node_pos: Vec<usize>,
}

impl GlobalSystem {
    pub fn rhs_gamma(&self) -> &[C64] {
        &self.rhs[..self.n_gamma]
    }

    pub fn rhs_interior(&self) -> &[C64] {
        &self.rhs[self.n_gamma..]
    }
}

/// Subassemble the global B, H and the plane-wave right-hand side.
pub fn assemble_global_from_locals(
    mesh: &Mesh,
    decomp: &Decomposition,
    locals: &[LocalOperators],
    k: f64,
) -> GlobalSystem {
    let n_gamma = decomp.gamma.len();
    let n_total = mesh.n_nodes();

    let mut node_pos = vec![usize::MAX; n_total];
    for (p, &g) in decomp.gamma.iter().enumerate() {
        node_pos[g] = p;
    }
    for (p, &g) in decomp.interior.iter().enumerate() {
        node_pos[g] = n_gamma + p;
    }

    let mut trip_b = Vec::new();
    let mut trip_h = Vec::new();
    for (i, lo) in locals.iter().enumerate() {
        let sub = &decomp.subdomains[i];
        let gpos: Vec<usize> = sub.gamma_i.iter().map(|&n| node_pos[n]).collect();
        let ipos: Vec<usize> = sub.interior_i.iter().map(|&n| node_pos[n]).collect();
        for r in 0..lo.n_g {
            for c in 0..lo.n_g {
                trip_b.push((gpos[r], gpos[c], lo.b_gg[(r, c)]));
                trip_h.push((gpos[r], gpos[c], C64::new(lo.h_gg[(r, c)], 0.0)));
            }
            for c in 0..lo.n_i {
                trip_b.push((gpos[r], ipos[c], C64::new(lo.b_gi[(r, c)], 0.0)));
                trip_b.push((ipos[c], gpos[r], C64::new(lo.b_ig[(c, r)], 0.0)));
                trip_h.push((gpos[r], ipos[c], C64::new(lo.h_gi[(r, c)], 0.0)));
                trip_h.push((ipos[c], gpos[r], C64::new(lo.h_ig[(c, r)], 0.0)));
            }
        }
        for r in 0..lo.n_i {
            for c in 0..lo.n_i {
                trip_b.push((ipos[r], ipos[c], C64::new(lo.b_ii[(r, c)], 0.0)));
                trip_h.push((ipos[r], ipos[c], C64::new(lo.h_ii[(r, c)], 0.0)));
            }
        }
    }
    let b = CsrMatrix::from_triplets(n_total, n_total, &trip_b);
    let h = CsrMatrix::from_triplets(n_total, n_total, &trip_h);

    let l_nodes = plane_wave_rhs(mesh, k);
    let mut rhs = vec![C64::new(0.0, 0.0); n_total];
    for (node, &v) in l_nodes.iter().enumerate() {
        rhs[node_pos[node]] = v;
    }

    GlobalSystem { k, n_gamma, n_total, b, h, rhs, node_pos }
}

/// Assemble locals in parallel, then the global system.
pub fn assemble_global(mesh: &Mesh, decomp: &Decomposition, k: f64) -> (Vec<LocalOperators>, GlobalSystem) {
    assert!(k > 0.0, "wavenumber must be positive");
    let locals: Vec<LocalOperators> = (0..decomp.n_subdomains())
        .into_par_iter()
        .map(|i| assemble_local(mesh, decomp, i, k))
        .collect();
    let gs = assemble_global_from_locals(mesh, decomp, &locals, k);
    (locals, gs)
}

/// Right-hand side from the plane-wave impedance data, in node order:
/// f = 0 and g(x) = ik (V·n + 1) e^{ikV·x} integrated exactly against the
/// P1 trace basis edge by edge.
pub fn plane_wave_rhs(mesh: &Mesh, k: f64) -> Vec<C64> {
    let v = wave_direction();
    let mut l = vec![C64::new(0.0, 0.0); mesh.n_nodes()];
    for (edge, normal) in mesh.boundary_edges() {
        let xa = mesh.nodes[edge[0]];
        let xb = mesh.nodes[edge[1]];
        let len = ((xb[0] - xa[0]).powi(2) + (xb[1] - xa[1]).powi(2)).sqrt();
        let alpha = v[0] * xa[0] + v[1] * xa[1];
        let beta = v[0] * (xb[0] - xa[0]) + v[1] * (xb[1] - xa[1]);
        let vdotn = v[0] * normal[0] + v[1] * normal[1];
        // g restricted to the edge: c · e^{ik(α + βt)}, t ∈ [0,1]
        let c = C64::new(0.0, k * (vdotn + 1.0)) * C64::new(0.0, k * alpha).exp();
        let z = C64::new(0.0, k * beta);
        let (j0, j1) = edge_basis_integrals(z);
        l[edge[0]] += c * j0 * len;
        l[edge[1]] += c * j1 * len;
    }
    l
}

/// (∫₀¹ (1−t) e^{zt} dt, ∫₀¹ t e^{zt} dt), series branch near z = 0.
fn edge_basis_integrals(z: C64) -> (C64, C64) {
    if z.norm() < 1e-3 {
        let half = C64::new(0.5, 0.0);
        let z2 = z * z;
        let z3 = z2 * z;
        let z4 = z3 * z;
        let j0 = half + z / 6.0 + z2 / 24.0 + z3 / 120.0 + z4 / 720.0;
        let j1 = half + z / 3.0 + z2 / 8.0 + z3 / 30.0 + z4 / 144.0;
        (j0, j1)
    } else {
        let ez = z.exp();
        let one = C64::new(1.0, 0.0);
        let j0 = (ez - one - z) / (z * z);
        let j1 = (ez * (z - one) + one) / (z * z);
        (j0, j1)
    }
}

/// Auxiliary matrices for the block-diagonal coarse cores.
#[derive(Clone, Debug)]
pub struct CoarseAux {
    /// Block-diagonal filter of Ĥ_ΓΓ⁽ⁱ⁾: couplings survive inside one edge
    /// segment; cross points keep only their diagonal.
    pub c0_gg: RealMat,
    /// Positions of Π_i inside gamma_i's local ordering.
    pub pi_local: Vec<usize>,
    /// diag(Im B_ΓΓ) on Π_i.
    pub c_diag: Vec<f64>,
    /// Schur complement of H⁽ⁱ⁾ to Π_i (empty when Π_i = ∅).
    pub s_pipi: RealMat,
}

/// Build C₀, C_Diag and S_ΠΠ for one subdomain. `h_hat_gg` is the
/// energy Schur complement Ĥ_ΓΓ⁽ⁱ⁾ supplied by the substructuring layer.
pub fn assemble_coarse_aux(
    local: &LocalOperators,
    sub: &Subdomain,
    h_hat_gg: &RealMat,
) -> CoarseAux {
    let n_g = local.n_g;
    assert_eq!(h_hat_gg.nrows(), n_g);

    // Tag every Γ_i node: segment id 0..3, cross points usize::MAX.
    let mut tag = vec![usize::MAX; n_g];
    let pos_of = |node: usize, gamma: &[usize]| gamma.binary_search(&node).unwrap();
    for (s, seg) in sub.edge_segments.iter().enumerate() {
        for &node in seg {
            tag[pos_of(node, &sub.gamma_i)] = s;
        }
    }
    let mut c0_gg = RealMat::zeros(n_g, n_g);
    for r in 0..n_g {
        for c in 0..n_g {
            let keep = if r == c {
                true
            } else {
                tag[r] != usize::MAX && tag[r] == tag[c]
            };
            if keep {
                c0_gg[(r, c)] = h_hat_gg[(r, c)];
            }
        }
    }

    let pi_local: Vec<usize> = sub
        .pi_i
        .iter()
        .map(|&node| pos_of(node, &sub.gamma_i))
        .collect();
    let c_diag: Vec<f64> = pi_local.iter().map(|&p| local.im_b_gg[(p, p)]).collect();

    let s_pipi = if pi_local.is_empty() {
        RealMat::zeros(0, 0)
    } else {
        // R_i = I_i ∪ (Γ_i \ Π_i); eliminate it from the full local H.
        let h = local.h_full();
        let n = n_g + local.n_i;
        let pi_set: std::collections::HashSet<usize> = pi_local.iter().copied().collect();
        let r_idx: Vec<usize> = (0..n).filter(|p| !pi_set.contains(p)).collect();
        let h_pp = h.submatrix(&pi_local, &pi_local);
        let h_rp = h.submatrix(&r_idx, &pi_local);
        let h_rr = h.submatrix(&r_idx, &r_idx);
        let chol = Cholesky::new(&h_rr).expect("H_RR must be SPD");
        let x = chol.forward_solve_mat(&h_rp);
        let mut s = h_pp;
        let xtx = x.t_matmul(&x);
        s.add_scaled(-1.0, &xtx);
        s
    };

    CoarseAux { c0_gg, pi_local, c_diag, s_pipi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_decomposition, build_mesh};

    #[test]
    fn unit_right_triangle_stiffness_and_mass() {
        let coords = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let (k, m) = element_matrices(&coords).unwrap();
        let k_expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[(i, j)] - k_expect[i][j]).abs() < 1e-14);
                let me = if i == j { 2.0 / 24.0 } else { 1.0 / 24.0 };
                assert!((m[(i, j)] - me).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn quadrature_oracle_for_element_integrals() {
        // Independent check: 7-point Gauss rule on a skewed triangle.
        let coords = [[0.2, 0.1], [0.9, 0.3], [0.4, 0.8]];
        let (k, m) = element_matrices(&coords).unwrap();
        let (ko, mo) = quadrature_element_matrices(&coords);
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[(i, j)] - ko[(i, j)]).abs() < 1e-12);
                assert!((m[(i, j)] - mo[(i, j)]).abs() < 1e-12);
            }
        }
    }

    /// Quadrature-based oracle independent of the closed-form path.
    fn quadrature_element_matrices(coords: &[[f64; 2]; 3]) -> (RealMat, RealMat) {
        // degree-5 rule on the reference triangle
        let w1 = 0.225;
        let (a2, w2) = (0.059715871789770, 0.132394152788506);
        let (a3, w3) = (0.797426985353087, 0.125939180544827);
        let mut pts = vec![([1.0 / 3.0, 1.0 / 3.0], w1)];
        let b2 = (1.0 - a2) / 2.0;
        let b3 = (1.0 - a3) / 2.0;
        pts.extend([([a2, b2], w2), ([b2, a2], w2), ([b2, b2], w2)]);
        pts.extend([([a3, b3], w3), ([b3, a3], w3), ([b3, b3], w3)]);

        let [p0, p1, p2] = coords;
        let j = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inv_t = [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ];
        // reference gradients
        let gref = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let grad: Vec<[f64; 2]> = gref
            .iter()
            .map(|g| {
                [
                    inv_t[0][0] * g[0] + inv_t[0][1] * g[1],
                    inv_t[1][0] * g[0] + inv_t[1][1] * g[1],
                ]
            })
            .collect();
        let area = det.abs() / 2.0;
        let mut kq = RealMat::zeros(3, 3);
        let mut mq = RealMat::zeros(3, 3);
        for i in 0..3 {
            for jj in 0..3 {
                kq[(i, jj)] = area * (grad[i][0] * grad[jj][0] + grad[i][1] * grad[jj][1]);
                let mut s = 0.0;
                for &(xi, w) in &pts {
                    let lam = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
                    s += w * lam[i] * lam[jj];
                }
                mq[(i, jj)] = area * s;
            }
        }
        (kq, mq)
    }

    #[test]
    fn edge_mass_closed_form() {
        let h = 0.125;
        let em = edge_mass_matrix(h);
        assert!((em[(0, 0)] - 2.0 * h / 6.0).abs() < 1e-16);
        assert!((em[(0, 1)] - h / 6.0).abs() < 1e-16);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let coords = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        assert!(element_matrices(&coords).is_err());
    }

    #[test]
    fn interior_subdomain_has_zero_impedance_part() {
        let mesh = build_mesh(12).unwrap();
        let d = build_decomposition(&mesh, 3).unwrap();
        // middle subdomain (1,1) touches no part of the boundary
        let id = 1 * 3 + 1;
        assert!(d.subdomains[id].pi_i.is_empty());
        let lo = assemble_local(&mesh, &d, id, 8.0);
        assert_eq!(lo.im_b_gg.norm_max(), 0.0);
    }

    #[test]
    fn real_part_recovers_stiffness() {
        let mesh = build_mesh(8).unwrap();
        let d = build_decomposition(&mesh, 2).unwrap();
        let k = 5.0;
        let lo = assemble_local(&mesh, &d, 0, k);
        // Re B + k²M = A entrywise, with M = (H − A)/k²  =>  Re B = 2A − H
        let mut expect = lo.a_gg.clone();
        expect.scale(2.0);
        expect.add_scaled(-1.0, &lo.h_gg);
        let re = lo.b_gg.real_part();
        let mut err = 0.0f64;
        for i in 0..lo.n_g {
            for j in 0..lo.n_g {
                err = err.max((re[(i, j)] - expect[(i, j)]).abs());
            }
        }
        assert!(err < 1e-12);
    }

    /// One-shot element-loop assembly over the whole mesh; the oracle for
    /// subassembly checks.
    fn one_shot_global(mesh: &Mesh, k: f64) -> (Vec<Vec<C64>>, Vec<Vec<f64>>) {
        let n = mesh.n_nodes();
        let mut b = vec![vec![C64::new(0.0, 0.0); n]; n];
        let mut h = vec![vec![0.0; n]; n];
        for t in &mesh.triangles {
            let coords = [mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]];
            let (ke, me) = element_matrices(&coords).unwrap();
            for r in 0..3 {
                for c in 0..3 {
                    b[t[r]][t[c]] += C64::new(ke[(r, c)] - k * k * me[(r, c)], 0.0);
                    h[t[r]][t[c]] += ke[(r, c)] + k * k * me[(r, c)];
                }
            }
        }
        for (edge, _) in mesh.boundary_edges() {
            let em = edge_mass_matrix(mesh.h());
            for r in 0..2 {
                for c in 0..2 {
                    b[edge[r]][edge[c]] += C64::new(0.0, k * em[(r, c)]);
                }
            }
        }
        (b, h)
    }

    #[test]
    fn local_matches_one_shot_global_restriction() {
        let mesh = build_mesh(4).unwrap();
        let d = build_decomposition(&mesh, 2).unwrap();
        let k = 5.0;
        let lo = assemble_local(&mesh, &d, 0, k);
        // Oracle: one-shot assembly restricted to subdomain 0's elements.
        let n = mesh.n_nodes();
        let mut b = vec![vec![C64::new(0.0, 0.0); n]; n];
        let sub = &d.subdomains[0];
        for &t in &sub.triangles {
            let tri = mesh.triangles[t];
            let coords = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
            let (ke, me) = element_matrices(&coords).unwrap();
            for r in 0..3 {
                for c in 0..3 {
                    b[tri[r]][tri[c]] += C64::new(ke[(r, c)] - k * k * me[(r, c)], 0.0);
                }
            }
        }
        for (edge, _) in mesh.boundary_edges() {
            let both_in = sub.gamma_i.binary_search(&edge[0]).is_ok()
                && sub.gamma_i.binary_search(&edge[1]).is_ok();
            if both_in {
                let em = edge_mass_matrix(mesh.h());
                for r in 0..2 {
                    for c in 0..2 {
                        b[edge[r]][edge[c]] += C64::new(0.0, k * em[(r, c)]);
                    }
                }
            }
        }
        let full = lo.b_full();
        let order: Vec<usize> = sub.gamma_i.iter().chain(sub.interior_i.iter()).copied().collect();
        for (li, &gi) in order.iter().enumerate() {
            for (lj, &gj) in order.iter().enumerate() {
                assert!(
                    (full[(li, lj)] - b[gi][gj]).norm() < 1e-13,
                    "mismatch at ({li},{lj})"
                );
            }
        }
    }

    #[test]
    fn subassembly_identity_and_symmetry() {
        let mesh = build_mesh(8).unwrap();
        let d = build_decomposition(&mesh, 2).unwrap();
        let k = 5.0;
        let (_, gs) = assemble_global(&mesh, &d, k);
        let (b_oracle, h_oracle) = one_shot_global(&mesh, k);
        let bmax = gs.b.norm_max();
        for node_r in 0..gs.n_total {
            for node_c in 0..gs.n_total {
                let r = gs.node_pos[node_r];
                let c = gs.node_pos[node_c];
                let dv = (gs.b.get(r, c) - b_oracle[node_r][node_c]).norm();
                assert!(dv <= 1e-13 * bmax, "B deviates by {dv}");
                let dh = (gs.h.get(r, c).re - h_oracle[node_r][node_c]).abs();
                assert!(dh <= 1e-13 * bmax);
            }
        }
        assert_eq!(gs.b.symmetry_error(), 0.0);
    }

    #[test]
    fn h_is_spd_by_cholesky() {
        let mesh = build_mesh(8).unwrap();
        let d = build_decomposition(&mesh, 4).unwrap();
        let (_, gs) = assemble_global(&mesh, &d, 10.0);
        let h = gs.h.to_dense().real_part();
        assert!(Cholesky::new(&h).is_ok());
    }

    #[test]
    fn energy_identity_random_vector() {
        let mesh = build_mesh(8).unwrap();
        let d = build_decomposition(&mesh, 2).unwrap();
        let k = 7.0;
        let lo = assemble_local(&mesh, &d, 0, k);
        let n = lo.n_g + lo.n_i;
        let h = lo.h_full();
        let mut a = RealMat::zeros(n, n);
        for i in 0..lo.n_g {
            for j in 0..lo.n_g {
                a[(i, j)] = lo.a_gg[(i, j)];
            }
            for j in 0..lo.n_i {
                a[(i, lo.n_g + j)] = lo.a_gi[(i, j)];
                a[(lo.n_g + j, i)] = lo.a_ig[(j, i)];
            }
        }
        for i in 0..lo.n_i {
            for j in 0..lo.n_i {
                a[(lo.n_g + i, lo.n_g + j)] = lo.a_ii[(i, j)];
            }
        }
        let mut state = 0x12345u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let v: Vec<f64> = (0..n).map(|_| next()).collect();
        let vhv: f64 = v.iter().zip(h.matvec(&v)).map(|(a, b)| a * b).sum();
        let vav: f64 = v.iter().zip(a.matvec(&v)).map(|(a, b)| a * b).sum();
        // M recovered as (H − A)/k²
        let mut mm = h.clone();
        mm.add_scaled(-1.0, &a);
        mm.scale(1.0 / (k * k));
        let vmv: f64 = v.iter().zip(mm.matvec(&v)).map(|(a, b)| a * b).sum();
        assert!((vhv - (vav + k * k * vmv)).abs() <= 1e-12 * vhv.abs());
    }

    #[test]
    fn rhs_zero_on_interior_nodes_and_edge_weight() {
        let mesh = build_mesh(8).unwrap();
        let k = 5.0;
        let l = plane_wave_rhs(&mesh, k);
        for (node, v) in l.iter().enumerate() {
            if !mesh.boundary_nodes.contains(&node) {
                assert_eq!(v.norm(), 0.0);
            }
        }
        // Quadrature oracle on one bottom edge: n = (0,-1), weight
        // ik(1 - sin(pi/8)) e^{ikV·x}; 64-panel Simpson on the two basis fns.
        let vdir = wave_direction();
        let c = C64::new(0.0, k * (1.0 - vdir[1]));
        let h = mesh.h();
        let (a, b) = (2, 3); // nodes (2h,0) and (3h,0)
        let xa = mesh.nodes[a];
        let simpson = |f: &dyn Fn(f64) -> C64| {
            let n = 64;
            let dt = 1.0 / n as f64;
            let mut s = f(0.0) + f(1.0);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += f(i as f64 * dt) * w;
            }
            s * (dt / 3.0)
        };
        let phase = |t: f64| {
            let x = xa[0] + t * h;
            C64::new(0.0, k * (vdir[0] * x + vdir[1] * 0.0)).exp()
        };
        let ia = simpson(&|t| phase(t) * (1.0 - t)) * h * c;
        let ib = simpson(&|t| phase(t) * t) * h * c;
        // node a also receives the t-weighted part of edge (1,2)
        let xa_prev = mesh.nodes[1];
        let phase_prev = |t: f64| {
            let x = xa_prev[0] + t * h;
            C64::new(0.0, k * (vdir[0] * x)).exp()
        };
        let ia_prev = simpson(&|t| phase_prev(t) * t) * h * c;
        assert!((l[a] - (ia + ia_prev)).norm() < 1e-10);
        let xb_next = mesh.nodes[3];
        let phase_next = |t: f64| {
            let x = xb_next[0] + t * h;
            C64::new(0.0, k * (vdir[0] * x)).exp()
        };
        let ib_next = simpson(&|t| phase_next(t) * (1.0 - t)) * h * c;
        assert!((l[b] - (ib + ib_next)).norm() < 1e-10);
    }
}
