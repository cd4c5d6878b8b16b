//! Two-block Sherman–Morrison–Woodbury applicator.
//!
//! Represents (A + U₁V₁ + U₂V₂)⁻¹ through a factorization of A and an LU of
//! the capacitance matrix M = I + V A⁻¹ U over the concatenated factors,
//! so one apply costs two core solves plus small dense products. Factors
//! may be dense or block-scattered; the block form keeps per-subdomain
//! corrections local and is what makes the update scale.

use super::{ComplexLu, ComplexMat};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Anything that can solve the core system A x = b.
pub trait ComplexSolver: Send + Sync {
    fn dim(&self) -> usize;
    fn solve(&self, rhs: &[C64]) -> Vec<C64>;
}

impl ComplexSolver for ComplexLu {
    fn dim(&self) -> usize {
        self.dim()
    }
    fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        self.solve(rhs)
    }
}

/// One dense block of a tall (or wide) low-rank factor, scattered into
/// global coordinates through explicit index lists.
#[derive(Clone, Debug)]
pub struct FactorBlock {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub mat: ComplexMat,
}

/// Sum of scattered blocks forming an nrows × ncols matrix.
#[derive(Clone, Debug, Default)]
pub struct BlockFactor {
    pub nrows: usize,
    pub ncols: usize,
    pub blocks: Vec<FactorBlock>,
}

impl BlockFactor {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, blocks: Vec::new() }
    }

    pub fn from_dense(mat: ComplexMat) -> Self {
        let nrows = mat.nrows();
        let ncols = mat.ncols();
        let block = FactorBlock {
            rows: (0..nrows).collect(),
            cols: (0..ncols).collect(),
            mat,
        };
        Self { nrows, ncols, blocks: vec![block] }
    }

    pub fn push(&mut self, block: FactorBlock) {
        assert_eq!(block.rows.len(), block.mat.nrows());
        assert_eq!(block.cols.len(), block.mat.ncols());
        self.blocks.push(block);
    }

    /// y = F x
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        for b in &self.blocks {
            for (li, &gi) in b.rows.iter().enumerate() {
                let mut s = C64::new(0.0, 0.0);
                for (lj, &gj) in b.cols.iter().enumerate() {
                    s += b.mat[(li, lj)] * x[gj];
                }
                y[gi] += s;
            }
        }
        y
    }

    /// Scatter one column into a dense vector.
    pub fn column_dense(&self, j: usize, out: &mut [C64]) {
        assert_eq!(out.len(), self.nrows);
        for v in out.iter_mut() {
            *v = C64::new(0.0, 0.0);
        }
        for b in &self.blocks {
            if let Some(lj) = b.cols.iter().position(|&c| c == j) {
                for (li, &gi) in b.rows.iter().enumerate() {
                    out[gi] += b.mat[(li, lj)];
                }
            }
        }
    }

    pub fn to_dense(&self) -> ComplexMat {
        let mut d = ComplexMat::zeros(self.nrows, self.ncols);
        for b in &self.blocks {
            for (li, &gi) in b.rows.iter().enumerate() {
                for (lj, &gj) in b.cols.iter().enumerate() {
                    d[(gi, gj)] += b.mat[(li, lj)];
                }
            }
        }
        d
    }

    /// Offset every column index; used when concatenating factor pairs.
    fn shift_cols(mut self, off: usize, total: usize) -> Self {
        for b in &mut self.blocks {
            for c in &mut b.cols {
                *c += off;
            }
        }
        self.ncols = total;
        self
    }

    fn shift_rows(mut self, off: usize, total: usize) -> Self {
        for b in &mut self.blocks {
            for r in &mut b.rows {
                *r += off;
            }
        }
        self.nrows = total;
        self
    }
}

/// Applies (A + Σⱼ UⱼVⱼ)⁻¹ by the Woodbury identity.
pub struct WoodburyOperator {
    core: Box<dyn ComplexSolver>,
    u: BlockFactor,
    v: BlockFactor,
    m_lu: Option<ComplexLu>,
    rank: usize,
}

impl WoodburyOperator {
    /// Two-pair constructor: (A + U₁V₁ + U₂V₂)⁻¹, scalar pair blocks already
    /// folded into the factors.
    pub fn new(
        core: Box<dyn ComplexSolver>,
        u1: ComplexMat,
        v1: ComplexMat,
        u2: ComplexMat,
        v2: ComplexMat,
    ) -> Result<Self> {
        Self::from_pairs(
            core,
            vec![
                (BlockFactor::from_dense(u1), BlockFactor::from_dense(v1)),
                (BlockFactor::from_dense(u2), BlockFactor::from_dense(v2)),
            ],
        )
    }

    /// General constructor over any number of (U, V) pairs; the capacitance
    /// matrix is formed over the concatenation [U₁, U₂, …], [V₁; V₂; …].
    pub fn from_pairs(
        core: Box<dyn ComplexSolver>,
        pairs: Vec<(BlockFactor, BlockFactor)>,
    ) -> Result<Self> {
        let n = core.dim();
        let rank: usize = pairs.iter().map(|(u, _)| u.ncols).sum();
        let mut u = BlockFactor::new(n, rank);
        let mut v = BlockFactor::new(rank, n);
        let mut off = 0;
        for (ui, vi) in pairs {
            assert_eq!(ui.nrows, n, "U row dimension mismatch");
            assert_eq!(vi.ncols, n, "V column dimension mismatch");
            assert_eq!(ui.ncols, vi.nrows, "U/V rank mismatch");
            let k = ui.ncols;
            let ui = ui.shift_cols(off, rank);
            let vi = vi.shift_rows(off, rank);
            u.blocks.extend(ui.blocks);
            v.blocks.extend(vi.blocks);
            off += k;
        }

        if rank == 0 {
            return Ok(Self { core, u, v, m_lu: None, rank });
        }

        // M = I + V A⁻¹ U, one column per selected direction.
        let cols: Vec<Vec<C64>> = (0..rank)
            .into_par_iter()
            .map(|j| {
                let mut uj = vec![C64::new(0.0, 0.0); n];
                u.column_dense(j, &mut uj);
                let w = core.solve(&uj);
                let mut col = v.matvec(&w);
                col[j] += C64::new(1.0, 0.0);
                col
            })
            .collect();
        let mut m = ComplexMat::zeros(rank, rank);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..rank {
                m[(i, j)] = col[i];
            }
        }
        let m_lu = ComplexLu::factor(m).map_err(|_| Error::Singular {
            context: "woodbury capacitance matrix".to_string(),
        })?;
        Ok(Self { core, u, v, m_lu: Some(m_lu), rank })
    }

    pub fn dim(&self) -> usize {
        self.core.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// x = (A + Σ UⱼVⱼ)⁻¹ b
    pub fn apply(&self, b: &[C64]) -> Vec<C64> {
        let y0 = self.core.solve(b);
        let m_lu = match &self.m_lu {
            None => return y0,
            Some(m) => m,
        };
        let t = self.v.matvec(&y0);
        let s = m_lu.solve(&t);
        let w = self.u.matvec(&s);
        let y1 = self.core.solve(&w);
        y0.iter().zip(y1.iter()).map(|(a, b)| a - b).collect()
    }

    pub fn factors(&self) -> (&BlockFactor, &BlockFactor) {
        (&self.u, &self.v)
    }
}
