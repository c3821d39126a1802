//! Benchmark instances: grid cut energies split into row and column chains,
//! region functions, a synthetic generator, a text format and a PGM reader.

mod format;
mod pgm;
mod synthetic;

use crate::error::{Result, SfmError};
use crate::mask::SubsetMask;
use crate::prox::{Block, ConcaveGroup, Path};
use crate::solvers::DecomposableProblem;

pub use format::InstanceFile;
pub use pgm::{grid_from_pixels, ingest_pgm, parse_pgm, write_pgm, PgmImage};
pub use synthetic::{gen_synthetic, SynthParams};

/// Pairwise energy on an `h × w` 4-neighborhood grid, pixels in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct GridInstance {
    pub h: usize,
    pub w: usize,
    pub unary: Vec<f64>,
    /// Weight between `(r, c)` and `(r, c+1)` at `r·(w−1) + c`.
    pub w_h: Vec<f64>,
    /// Weight between `(r, c)` and `(r+1, c)` at `r·w + c`.
    pub w_v: Vec<f64>,
}

impl GridInstance {
    pub fn new(h: usize, w: usize, unary: Vec<f64>, w_h: Vec<f64>, w_v: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(SfmError::Config(format!("grid dimensions must be positive, got {h}x{w}")));
        }
        let expect = [(h * w, unary.len(), "unary"), (h * (w - 1), w_h.len(), "horizontal weights"), ((h - 1) * w, w_v.len(), "vertical weights")];
        for (want, got, what) in expect {
            if want != got {
                return Err(SfmError::Config(format!("{what}: expected {want} values, got {got}")));
            }
        }
        if let Some(x) = w_h.iter().chain(&w_v).find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(SfmError::InvalidBlock(format!("grid weight {x} is negative or not finite")));
        }
        if unary.iter().any(|u| !u.is_finite()) {
            return Err(SfmError::InvalidBlock("unary potentials must be finite".into()));
        }
        Ok(Self { h, w, unary, w_h, w_v })
    }

    /// Uniform coupling `weight` on every edge.
    pub fn uniform(h: usize, w: usize, unary: Vec<f64>, weight: f64) -> Result<Self> {
        Self::new(h, w, unary, vec![weight; h * w.saturating_sub(1)], vec![weight; h.saturating_sub(1) * w])
    }

    pub fn n(&self) -> usize {
        self.h * self.w
    }

    pub fn index(&self, r: usize, c: usize) -> usize {
        r * self.w + c
    }

    /// `u(S) + Σ_{edges} w_ij |1_S(i) − 1_S(j)|`.
    pub fn energy(&self, set: &SubsetMask) -> f64 {
        let mut e = set.sum_of(&self.unary);
        for r in 0..self.h {
            for c in 0..self.w {
                let i = self.index(r, c);
                if c + 1 < self.w && set.contains(i) != set.contains(i + 1) {
                    e += self.w_h[r * (self.w - 1) + c];
                }
                if r + 1 < self.h && set.contains(i) != set.contains(i + self.w) {
                    e += self.w_v[i];
                }
            }
        }
        e
    }

    /// Row chains and column chains, each carrying half of the unary potentials.
    pub fn blocks(&self) -> Result<[Block; 2]> {
        let n = self.n();
        let half: Vec<(usize, f64)> = self.unary.iter().map(|u| 0.5 * u).enumerate().collect();
        let rows = if self.w > 1 {
            (0..self.h)
                .map(|r| Path {
                    indices: (0..self.w).map(|c| self.index(r, c)).collect(),
                    weights: self.w_h[r * (self.w - 1)..(r + 1) * (self.w - 1)].to_vec(),
                })
                .collect()
        } else {
            Vec::new()
        };
        let cols = if self.h > 1 {
            (0..self.w)
                .map(|c| Path {
                    indices: (0..self.h).map(|r| self.index(r, c)).collect(),
                    weights: (0..self.h - 1).map(|r| self.w_v[self.index(r, c)]).collect(),
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok([Block::chain(n, rows, half.clone())?, Block::chain(n, cols, half)?])
    }
}

/// Splits a grid energy into `r = 2` chain blocks (see [`GridInstance::blocks`]).
pub fn decompose_grid(grid: &GridInstance) -> Result<DecomposableProblem> {
    DecomposableProblem::new(grid.n(), grid.blocks()?.into())
}

/// Regions `R_j` with `F_j(S) = scale · |S ∩ R_j| · |R_j ∖ S|`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionFunctionSpec {
    pub regions: Vec<Vec<usize>>,
    pub scale: f64,
}

impl RegionFunctionSpec {
    pub fn new(regions: Vec<Vec<usize>>) -> Self {
        Self { regions, scale: 1.0 }
    }
}

/// One concave-of-cardinality block per region, with gains `scale·(|R| + 1 − 2k)`.
pub fn make_region_blocks(n: usize, spec: &RegionFunctionSpec) -> Result<Vec<Block>> {
    if !(spec.scale >= 0.0) || !spec.scale.is_finite() {
        return Err(SfmError::InvalidBlock(format!("region scale {} is negative or not finite", spec.scale)));
    }
    spec.regions
        .iter()
        .enumerate()
        .map(|(j, r)| {
            if r.is_empty() {
                return Err(SfmError::InvalidBlock(format!("region {j} is empty")));
            }
            let mut group = ConcaveGroup::region(r.clone());
            for g in &mut group.gains {
                *g *= spec.scale;
            }
            Block::concave(n, vec![group], Vec::new())
        })
        .collect()
}
