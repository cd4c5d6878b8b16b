//! Structured P1 triangulation of the unit square and its decomposition
//! into congruent square subdomains.
//!
//! Nodes are numbered lexicographically by (y, x); every grid cell is split
//! along the lower-left to upper-right diagonal so all elements are
//! congruent, and local index lists inherit the global order. Everything is
//! immutable after construction.

use crate::error::{Error, Result};

/// Uniform triangulation of Ω = (0,1)² with mesh width h = 1/inv_h.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub inv_h: usize,
    /// Node coordinates, lexicographic by (y, x).
    pub nodes: Vec<[f64; 2]>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    /// Sorted indices of nodes on ∂Ω.
    pub boundary_nodes: Vec<usize>,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn node_index(&self, ix: usize, iy: usize) -> usize {
        iy * (self.inv_h + 1) + ix
    }

    pub fn h(&self) -> f64 {
        1.0 / self.inv_h as f64
    }

    /// Boundary edges (a, b, outward normal), each owned by its side of ∂Ω.
    pub fn boundary_edges(&self) -> Vec<([usize; 2], [f64; 2])> {
        let n = self.inv_h;
        let mut edges = Vec::with_capacity(4 * n);
        for i in 0..n {
            // bottom y = 0, left-to-right
            edges.push(([self.node_index(i, 0), self.node_index(i + 1, 0)], [0.0, -1.0]));
            // right x = 1, bottom-to-top
            edges.push(([self.node_index(n, i), self.node_index(n, i + 1)], [1.0, 0.0]));
            // top y = 1
            edges.push(([self.node_index(i, n), self.node_index(i + 1, n)], [0.0, 1.0]));
            // left x = 0
            edges.push(([self.node_index(0, i), self.node_index(0, i + 1)], [-1.0, 0.0]));
        }
        edges
    }
}

/// Build the structured mesh. Deterministic ordering throughout.
pub fn build_mesh(inv_h: usize) -> Result<Mesh> {
    if inv_h < 2 {
        return Err(Error::Config(format!("inv_h must be >= 2, got {inv_h}")));
    }
    let np = inv_h + 1;
    let h = 1.0 / inv_h as f64;
    let mut nodes = Vec::with_capacity(np * np);
    for iy in 0..np {
        for ix in 0..np {
            nodes.push([ix as f64 * h, iy as f64 * h]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * inv_h * inv_h);
    for iy in 0..inv_h {
        for ix in 0..inv_h {
            let ll = iy * np + ix;
            let lr = ll + 1;
            let ul = ll + np;
            let ur = ul + 1;
            // diagonal ll -> ur, both triangles counterclockwise
            triangles.push([ll, lr, ur]);
            triangles.push([ll, ur, ul]);
        }
    }
    let mut boundary_nodes = Vec::new();
    for iy in 0..np {
        for ix in 0..np {
            if ix == 0 || iy == 0 || ix == inv_h || iy == inv_h {
                boundary_nodes.push(iy * np + ix);
            }
        }
    }
    Ok(Mesh { inv_h, nodes, triangles, boundary_nodes })
}

/// One square subdomain with its index sets.
#[derive(Clone, Debug)]
pub struct Subdomain {
    pub id: usize,
    /// Element indices owned by this subdomain.
    pub triangles: Vec<usize>,
    /// Γ_i = ∂Ω_i, sorted by global node index.
    pub gamma_i: Vec<usize>,
    /// I_i, sorted by global node index.
    pub interior_i: Vec<usize>,
    /// Π_i = Γ_i ∩ ∂Ω (global node indices, sorted).
    pub pi_i: Vec<usize>,
    /// The four corner nodes of the subdomain square.
    pub cross_points: Vec<usize>,
    /// gamma_i \ cross_points split into the four open edge runs,
    /// each sorted; order: bottom, top, left, right.
    pub edge_segments: Vec<Vec<usize>>,
}

/// Nonoverlapping partition into inv_H × inv_H squares with the global
/// interface/interior classification.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub inv_H: usize,
    pub subdomains: Vec<Subdomain>,
    /// Global interface Γ (sorted node indices).
    pub gamma: Vec<usize>,
    /// Global interior I = Ω_h \ Γ (sorted node indices).
    pub interior: Vec<usize>,
    /// node index -> position in `gamma`, or usize::MAX.
    gamma_pos: Vec<usize>,
    /// node index -> position in `interior`, or usize::MAX.
    interior_pos: Vec<usize>,
}

impl Decomposition {
    pub fn n_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    #[inline]
    pub fn gamma_position(&self, node: usize) -> Option<usize> {
        let p = self.gamma_pos[node];
        (p != usize::MAX).then_some(p)
    }

    #[inline]
    pub fn interior_position(&self, node: usize) -> Option<usize> {
        let p = self.interior_pos[node];
        (p != usize::MAX).then_some(p)
    }

    /// Positions in the global Γ ordering of subdomain i's Γ_i nodes.
    pub fn gamma_map(&self, i: usize) -> Vec<usize> {
        self.subdomains[i]
            .gamma_i
            .iter()
            .map(|&n| self.gamma_pos[n])
            .collect()
    }

    /// Positions in the global I ordering of subdomain i's I_i nodes.
    pub fn interior_map(&self, i: usize) -> Vec<usize> {
        self.subdomains[i]
            .interior_i
            .iter()
            .map(|&n| self.interior_pos[n])
            .collect()
    }
}

/// Partition the mesh into inv_H × inv_H square subdomains.
pub fn build_decomposition(mesh: &Mesh, inv_h_coarse: usize) -> Result<Decomposition> {
    let inv_h = mesh.inv_h;
    if inv_h_coarse < 2 {
        return Err(Error::Config(format!(
            "inv_H must be >= 2 (at least four subdomains), got {inv_h_coarse}"
        )));
    }
    if inv_h % inv_h_coarse != 0 {
        return Err(Error::Config(format!(
            "inv_H = {inv_h_coarse} must divide inv_h = {inv_h}"
        )));
    }
    let m = inv_h / inv_h_coarse;
    if m < 2 {
        return Err(Error::Config(format!(
            "inv_h/inv_H = {m} leaves no interior nodes; need at least 2"
        )));
    }
    let np = inv_h + 1;
    let n_nodes = np * np;

    let mut subdomains = Vec::with_capacity(inv_h_coarse * inv_h_coarse);
    let mut on_gamma = vec![false; n_nodes];

    for sy in 0..inv_h_coarse {
        for sx in 0..inv_h_coarse {
            let id = sy * inv_h_coarse + sx;
            let (x0, y0) = (sx * m, sy * m);
            let (x1, y1) = (x0 + m, y0 + m);

            let mut triangles = Vec::with_capacity(2 * m * m);
            for cy in y0..y1 {
                for cx in x0..x1 {
                    let cell = cy * inv_h + cx;
                    triangles.push(2 * cell);
                    triangles.push(2 * cell + 1);
                }
            }

            let mut gamma_i = Vec::with_capacity(4 * m);
            let mut interior_i = Vec::with_capacity((m - 1) * (m - 1));
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    let n = iy * np + ix;
                    if ix == x0 || ix == x1 || iy == y0 || iy == y1 {
                        gamma_i.push(n);
                        on_gamma[n] = true;
                    } else {
                        interior_i.push(n);
                    }
                }
            }

            let pi_i: Vec<usize> = gamma_i
                .iter()
                .copied()
                .filter(|&n| {
                    let ix = n % np;
                    let iy = n / np;
                    ix == 0 || iy == 0 || ix == inv_h || iy == inv_h
                })
                .collect();

            let corner = |ix: usize, iy: usize| iy * np + ix;
            let mut cross_points =
                vec![corner(x0, y0), corner(x1, y0), corner(x0, y1), corner(x1, y1)];
            cross_points.sort_unstable();

            let bottom: Vec<usize> = (x0 + 1..x1).map(|ix| corner(ix, y0)).collect();
            let top: Vec<usize> = (x0 + 1..x1).map(|ix| corner(ix, y1)).collect();
            let left: Vec<usize> = (y0 + 1..y1).map(|iy| corner(x0, iy)).collect();
            let right: Vec<usize> = (y0 + 1..y1).map(|iy| corner(x1, iy)).collect();
            let edge_segments = vec![bottom, top, left, right];

            subdomains.push(Subdomain {
                id,
                triangles,
                gamma_i,
                interior_i,
                pi_i,
                cross_points,
                edge_segments,
            });
        }
    }

    let gamma: Vec<usize> = (0..n_nodes).filter(|&n| on_gamma[n]).collect();
    let interior: Vec<usize> = (0..n_nodes).filter(|&n| !on_gamma[n]).collect();
    let mut gamma_pos = vec![usize::MAX; n_nodes];
    for (p, &n) in gamma.iter().enumerate() {
        gamma_pos[n] = p;
    }
    let mut interior_pos = vec![usize::MAX; n_nodes];
    for (p, &n) in interior.iter().enumerate() {
        interior_pos[n] = p;
    }

    Ok(Decomposition {
        inv_H: inv_h_coarse,
        subdomains,
        gamma,
        interior,
        gamma_pos,
        interior_pos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn counts_for_small_meshes() {
        let m = build_mesh(2).unwrap();
        assert_eq!(m.nodes.len(), 9);
        assert_eq!(m.triangles.len(), 8);
        let m = build_mesh(32).unwrap();
        assert_eq!(m.nodes.len(), 1089);
        assert_eq!(m.triangles.len(), 2048);
    }

    #[test]
    fn rejects_tiny_mesh() {
        assert!(build_mesh(1).is_err());
        assert!(build_mesh(0).is_err());
    }

    #[test]
    fn triangles_are_ccw_right_with_legs_h() {
        let mesh = build_mesh(4).unwrap();
        let h = mesh.h();
        for t in &mesh.triangles {
            let p = [mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]];
            let ax = p[1][0] - p[0][0];
            let ay = p[1][1] - p[0][1];
            let bx = p[2][0] - p[0][0];
            let by = p[2][1] - p[0][1];
            let cross = ax * by - ay * bx;
            assert!(cross > 0.0, "triangle not counterclockwise");
            assert!((cross - h * h).abs() < 1e-15, "area != h^2/2");
        }
    }

    #[test]
    fn interior_node_incidence_by_brute_force() {
        // Brute-force incidence scan: every interior node belongs to exactly
        // 6 triangles on this split; check the spec'd node explicitly.
        let mesh = build_mesh(4).unwrap();
        let mut incidence: HashMap<usize, usize> = HashMap::new();
        for t in &mesh.triangles {
            for &v in t {
                *incidence.entry(v).or_insert(0) += 1;
            }
        }
        let target = mesh
            .nodes
            .iter()
            .position(|p| (p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12)
            .unwrap();
        assert!(!mesh.boundary_nodes.contains(&target));
        assert_eq!(incidence[&target], 6);
        for iy in 1..4 {
            for ix in 1..4 {
                assert_eq!(incidence[&mesh.node_index(ix, iy)], 6);
            }
        }
        // domain corners: the diagonal direction makes two of them single
        assert_eq!(incidence[&mesh.node_index(0, 0)], 2);
        assert_eq!(incidence[&mesh.node_index(4, 0)], 1);
        assert_eq!(incidence[&mesh.node_index(0, 4)], 1);
        assert_eq!(incidence[&mesh.node_index(4, 4)], 2);
    }

    #[test]
    fn decomposition_4x2() {
        let mesh = build_mesh(4).unwrap();
        let d = build_decomposition(&mesh, 2).unwrap();
        assert_eq!(d.n_subdomains(), 4);
        for s in &d.subdomains {
            assert_eq!(s.gamma_i.len(), 8);
            assert_eq!(s.interior_i.len(), 1);
        }
    }

    #[test]
    fn gamma_size_by_brute_force_classification() {
        // 81 nodes at inv_h=8; classify each node independently of the
        // builder: a node is on Γ iff its coordinates hit a subdomain line.
        let mesh = build_mesh(8).unwrap();
        let d = build_decomposition(&mesh, 2).unwrap();
        let mut oracle = 0;
        for n in 0..mesh.n_nodes() {
            let ix = n % 9;
            let iy = n / 9;
            if ix % 4 == 0 || iy % 4 == 0 {
                oracle += 1;
            }
        }
        assert_eq!(oracle, 45);
        assert_eq!(d.gamma.len(), 45);
        for s in &d.subdomains {
            assert_eq!(s.interior_i.len(), 9);
        }
    }

    #[test]
    fn pi_sets_and_partition_property() {
        let mesh = build_mesh(32).unwrap();
        let d = build_decomposition(&mesh, 2).unwrap();
        assert!(!d.subdomains[0].pi_i.is_empty());
        let total: usize = d.subdomains.iter().map(|s| s.interior_i.len()).sum();
        assert_eq!(total + d.gamma.len(), mesh.n_nodes());
        // interior nodes appear in exactly one subdomain
        let mut seen = vec![0usize; mesh.n_nodes()];
        for s in &d.subdomains {
            for &n in &s.interior_i {
                seen[n] += 1;
            }
        }
        for &n in &d.interior {
            assert_eq!(seen[n], 1);
        }
        for &n in &d.gamma {
            assert_eq!(seen[n], 0);
        }
    }

    #[test]
    fn interior_cross_points_shared_by_four() {
        let mesh = build_mesh(16).unwrap();
        let d = build_decomposition(&mesh, 4).unwrap();
        let np = mesh.inv_h + 1;
        let mut count: HashMap<usize, usize> = HashMap::new();
        for s in &d.subdomains {
            for &c in &s.cross_points {
                *count.entry(c).or_insert(0) += 1;
            }
        }
        for (&node, &c) in &count {
            let ix = node % np;
            let iy = node / np;
            let on_bd = ix == 0 || iy == 0 || ix == mesh.inv_h || iy == mesh.inv_h;
            if !on_bd {
                assert_eq!(c, 4, "interior cross point {node} shared by {c}");
            }
        }
        // (inv_H+1)^2 distinct cross points in total
        assert_eq!(count.len(), (d.inv_H + 1) * (d.inv_H + 1));
    }

    #[test]
    fn edge_segments_partition_gamma() {
        let mesh = build_mesh(12).unwrap();
        let d = build_decomposition(&mesh, 3).unwrap();
        for s in &d.subdomains {
            let mut collected: Vec<usize> = s.cross_points.clone();
            for seg in &s.edge_segments {
                collected.extend_from_slice(seg);
            }
            collected.sort_unstable();
            let mut gamma = s.gamma_i.clone();
            gamma.sort_unstable();
            assert_eq!(collected, gamma);
            assert_eq!(s.gamma_i.len(), 4 * (mesh.inv_h / d.inv_H));
        }
    }

    #[test]
    fn rejects_bad_partitions() {
        let mesh = build_mesh(8).unwrap();
        assert!(build_decomposition(&mesh, 3).is_err()); // not divisible
        assert!(build_decomposition(&mesh, 8).is_err()); // no interior
        assert!(build_decomposition(&mesh, 1).is_err()); // single subdomain
    }

    #[test]
    fn rebuild_is_bitwise_identical() {
        let m1 = build_mesh(16).unwrap();
        let m2 = build_mesh(16).unwrap();
        assert_eq!(m1.nodes, m2.nodes);
        assert_eq!(m1.triangles, m2.triangles);
        let d1 = build_decomposition(&m1, 4).unwrap();
        let d2 = build_decomposition(&m2, 4).unwrap();
        assert_eq!(d1.gamma, d2.gamma);
        for (a, b) in d1.subdomains.iter().zip(d2.subdomains.iter()) {
            assert_eq!(a.gamma_i, b.gamma_i);
            assert_eq!(a.interior_i, b.interior_i);
        }
    }
}
