//! Decomposition blocks `F_j` with exact base-polytope projections.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Result, SfmError};
use crate::functions::TableFunction;
use crate::mask::SubsetMask;
use crate::oracle::{brute_force_sfm, SetFunction, SubmodularOracle, BRUTE_FORCE_CAP};

use super::concave::project_concave_unchecked;
use super::dnc::project_generic_small_support;
use super::tv::prox_tv1d_unchecked;

/// Family tag of a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockFamily {
    Modular,
    Chain,
    Concave,
    Generic,
}

impl BlockFamily {
    pub fn name(self) -> &'static str {
        match self {
            BlockFamily::Modular => "modular",
            BlockFamily::Chain => "chain",
            BlockFamily::Concave => "concave",
            BlockFamily::Generic => "generic",
        }
    }
}

/// A weighted path `indices[0] - indices[1] - ...`; `weights[k]` joins `k` and `k+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

/// `h(|S ∩ R|)` on `R = indices` with `h(0) = 0` and gains `g_k = h(k) − h(k−1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcaveGroup {
    pub indices: Vec<usize>,
    pub gains: Vec<f64>,
}

impl ConcaveGroup {
    /// `h(k) = k(|R| − k)`, the region function `|S ∩ R| · |R ∖ S|`.
    pub fn region(indices: Vec<usize>) -> Self {
        let m = indices.len() as f64;
        let gains = (1..=indices.len()).map(|k| m + 1.0 - 2.0 * k as f64).collect();
        Self { indices, gains }
    }

    fn value_at(&self, k: usize) -> f64 {
        self.gains[..k].iter().sum()
    }
}

/// Explicit value table over a small support; see [`TableFunction`].
#[derive(Clone, Debug)]
pub struct Table {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    oracle: SubmodularOracle,
}

impl PartialEq for Table {
    fn eq(&self, other: &Self) -> bool {
        self.indices == other.indices && self.values == other.values
    }
}

impl Table {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let k = indices.len();
        if k > BRUTE_FORCE_CAP {
            return Err(SfmError::InvalidBlock(format!(
                "generic support of {k} exceeds the cap of {BRUTE_FORCE_CAP}"
            )));
        }
        if values.len() != 1 << k {
            return Err(SfmError::InvalidBlock(format!(
                "table over {k} elements needs {} values, got {}",
                1usize << k,
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(SfmError::InvalidBlock("table value of the empty set must be 0".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SfmError::InvalidBlock("table values must be finite".into()));
        }
        check_table_submodular(k, &values)?;
        let oracle = SubmodularOracle::new(Arc::new(TableFunction::new(k, (0..k).collect(), values.clone())));
        Ok(Self {
            indices,
            values,
            oracle,
        })
    }
}

/// Local test `F(S+i) + F(S+j) ≥ F(S+i+j) + F(S)`, equivalent to submodularity.
fn check_table_submodular(k: usize, values: &[f64]) -> Result<()> {
    let scale = 1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for s in 0..values.len() {
        for i in 0..k {
            if s >> i & 1 == 1 {
                continue;
            }
            for j in i + 1..k {
                if s >> j & 1 == 1 {
                    continue;
                }
                let lhs = values[s | 1 << i] + values[s | 1 << j];
                let rhs = values[s | 1 << i | 1 << j] + values[s];
                if lhs < rhs - 1e-12 * scale {
                    return Err(SfmError::InvalidBlock(format!(
                        "table is not submodular at set bits {s:#b} with elements {i}, {j}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Structured part of a block: a list of components with pairwise disjoint supports.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockKind {
    Modular,
    Chain(Vec<Path>),
    Concave(Vec<ConcaveGroup>),
    Generic(Vec<Table>),
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    element: usize,
    /// Component index, or `NONE` for offset-only elements.
    component: u32,
    position: u32,
    offset: f64,
}

const NONE: u32 = u32::MAX;

/// One summand `F_j` of a decomposable function: a structured part plus a modular
/// offset, both restricted to the block's support. Elements outside the support
/// do not affect `F_j` and receive `y_i = 0` in every projection.
#[derive(Clone, Debug)]
pub struct Block {
    n: usize,
    kind: BlockKind,
    offset: Vec<(usize, f64)>,
    slots: Vec<Slot>,
}

impl PartialEq for Block {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.kind == other.kind && self.offset == other.offset
    }
}

impl Block {
    pub fn new(n: usize, kind: BlockKind, offset: Vec<(usize, f64)>) -> Result<Self> {
        let mut offset = offset;
        offset.sort_by_key(|p| p.0);
        if offset.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(SfmError::InvalidBlock("duplicate offset index".into()));
        }
        if let Some(&(i, v)) = offset.iter().find(|(i, v)| *i >= n || !v.is_finite()) {
            return Err(SfmError::InvalidBlock(format!("bad offset entry {i} -> {v}")));
        }
        let components: Vec<&[usize]> = match &kind {
            BlockKind::Modular => Vec::new(),
            BlockKind::Chain(paths) => {
                for p in paths {
                    if p.indices.is_empty() || p.weights.len() + 1 != p.indices.len() {
                        return Err(SfmError::InvalidBlock(format!(
                            "path of {} elements with {} weights",
                            p.indices.len(),
                            p.weights.len()
                        )));
                    }
                    if let Some(w) = p.weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
                        return Err(SfmError::InvalidBlock(format!("chain weight {w} is negative or not finite")));
                    }
                }
                paths.iter().map(|p| p.indices.as_slice()).collect()
            }
            BlockKind::Concave(groups) => {
                for g in groups {
                    if g.indices.is_empty() || g.gains.len() != g.indices.len() {
                        return Err(SfmError::InvalidBlock("concave group needs one gain per element".into()));
                    }
                    if g.gains.iter().any(|v| !v.is_finite()) || g.gains.windows(2).any(|w| w[1] > w[0]) {
                        return Err(SfmError::InvalidBlock("concave gains must be finite and nonincreasing".into()));
                    }
                }
                groups.iter().map(|g| g.indices.as_slice()).collect()
            }
            BlockKind::Generic(tables) => tables.iter().map(|t| t.indices.as_slice()).collect(),
        };

        let mut slots = Vec::new();
        for (c, idx) in components.iter().enumerate() {
            for (p, &i) in idx.iter().enumerate() {
                if i >= n {
                    return Err(SfmError::InvalidBlock(format!("index {i} out of range for n = {n}")));
                }
                slots.push(Slot {
                    element: i,
                    component: c as u32,
                    position: p as u32,
                    offset: 0.0,
                });
            }
        }
        slots.sort_by_key(|s| s.element);
        if slots.windows(2).any(|w| w[0].element == w[1].element) {
            return Err(SfmError::InvalidBlock("components of a block must have disjoint supports".into()));
        }
        for &(i, v) in &offset {
            match slots.binary_search_by_key(&i, |s| s.element) {
                Ok(pos) => slots[pos].offset = v,
                Err(pos) => slots.insert(
                    pos,
                    Slot {
                        element: i,
                        component: NONE,
                        position: 0,
                        offset: v,
                    },
                ),
            }
        }
        Ok(Self { n, kind, offset, slots })
    }

    pub fn modular(n: usize, offset: Vec<(usize, f64)>) -> Result<Self> {
        Self::new(n, BlockKind::Modular, offset)
    }

    /// Dense modular block `a(S)`.
    pub fn modular_dense(a: &[f64]) -> Result<Self> {
        Self::modular(a.len(), a.iter().copied().enumerate().collect())
    }

    pub fn chain(n: usize, paths: Vec<Path>, offset: Vec<(usize, f64)>) -> Result<Self> {
        Self::new(n, BlockKind::Chain(paths), offset)
    }

    pub fn concave(n: usize, groups: Vec<ConcaveGroup>, offset: Vec<(usize, f64)>) -> Result<Self> {
        Self::new(n, BlockKind::Concave(groups), offset)
    }

    pub fn generic(n: usize, tables: Vec<Table>, offset: Vec<(usize, f64)>) -> Result<Self> {
        Self::new(n, BlockKind::Generic(tables), offset)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> BlockFamily {
        match self.kind {
            BlockKind::Modular => BlockFamily::Modular,
            BlockKind::Chain(_) => BlockFamily::Chain,
            BlockKind::Concave(_) => BlockFamily::Concave,
            BlockKind::Generic(_) => BlockFamily::Generic,
        }
    }

    pub fn kind(&self) -> &BlockKind {
        &self.kind
    }

    /// Sparse modular offset, sorted by index.
    pub fn offset(&self) -> &[(usize, f64)] {
        &self.offset
    }

    /// Elements on which the block can be nonzero, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.slots.iter().map(|s| s.element)
    }

    pub fn support_mask(&self) -> SubsetMask {
        SubsetMask::from_indices(self.n, self.support())
    }

    fn components(&self) -> usize {
        match &self.kind {
            BlockKind::Modular => 0,
            BlockKind::Chain(p) => p.len(),
            BlockKind::Concave(g) => g.len(),
            BlockKind::Generic(t) => t.len(),
        }
    }

    fn component_indices(&self, c: usize) -> &[usize] {
        match &self.kind {
            BlockKind::Modular => &[],
            BlockKind::Chain(p) => &p[c].indices,
            BlockKind::Concave(g) => &g[c].indices,
            BlockKind::Generic(t) => &t[c].indices,
        }
    }

    fn offset_at(&self, i: usize) -> f64 {
        self.offset
            .binary_search_by_key(&i, |p| p.0)
            .map(|pos| self.offset[pos].1)
            .unwrap_or(0.0)
    }

    fn slot(&self, i: usize) -> Option<&Slot> {
        self.slots.binary_search_by_key(&i, |s| s.element).ok().map(|p| &self.slots[p])
    }

    /// Projection of the component's shifted local vector `u = z − a` onto its base
    /// polytope.
    fn project_component(&self, c: usize, u: &[f64]) -> Vec<f64> {
        match &self.kind {
            BlockKind::Modular => unreachable!(),
            BlockKind::Chain(paths) => {
                let x = prox_tv1d_unchecked(u, &paths[c].weights);
                u.iter().zip(&x).map(|(a, b)| a - b).collect()
            }
            BlockKind::Concave(groups) => project_concave_unchecked(&groups[c].gains, u),
            BlockKind::Generic(tables) => {
                project_generic_small_support(&tables[c].oracle, u).expect("validated table within cap")
            }
        }
    }

    /// Writes `Π_{B(F_j)}(z)` into `out` on the support of the block.
    ///
    /// Entries of `out` outside the support are left untouched; callers keep them
    /// at zero.
    pub fn project_into(&self, z: &[f64], out: &mut [f64]) {
        assert_eq!(z.len(), self.n);
        assert_eq!(out.len(), self.n);
        let shifted = |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| z[i] - self.offset_at(i)).collect() };
        let parts = self.components();
        let results: Vec<Vec<f64>> = if parts > 1 {
            (0..parts)
                .into_par_iter()
                .map(|c| self.project_component(c, &shifted(self.component_indices(c))))
                .collect()
        } else {
            (0..parts)
                .map(|c| self.project_component(c, &shifted(self.component_indices(c))))
                .collect()
        };
        for (c, y) in results.iter().enumerate() {
            for (&i, v) in self.component_indices(c).iter().zip(y) {
                out[i] = v + self.offset_at(i);
            }
        }
        for s in self.slots.iter().filter(|s| s.component == NONE) {
            out[s.element] = s.offset;
        }
    }

    /// Dense `Π_{B(F_j)}(z)`, zero outside the support.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.project_into(z, &mut out);
        out
    }

    /// `prox_{f_j}(z) = z − Π_{B(F_j)}(z)`.
    pub fn prox(&self, z: &[f64]) -> Vec<f64> {
        let y = self.project(z);
        z.iter().zip(&y).map(|(a, b)| a - b).collect()
    }

    /// Exact `min_S F_j(S) − λ(S)` over all subsets of the ground set, returning the
    /// minimum and a minimizer.
    pub fn minimize_shifted(&self, lambda: &[f64]) -> (f64, SubsetMask) {
        assert_eq!(lambda.len(), self.n);
        let cost = |i: usize| self.offset_at(i) - lambda[i];
        let mut set = SubsetMask::empty(self.n);
        let mut value = 0.0;
        // Elements the block ignores join whenever that lowers the objective.
        let mut in_support = SubsetMask::empty(self.n);
        for s in &self.slots {
            in_support.insert(s.element);
        }
        for i in 0..self.n {
            if !in_support.contains(i) && lambda[i] > 0.0 {
                set.insert(i);
                value -= lambda[i];
            }
        }
        for s in self.slots.iter().filter(|s| s.component == NONE) {
            let c = cost(s.element);
            if c < 0.0 {
                set.insert(s.element);
                value += c;
            }
        }
        for c in 0..self.components() {
            let idx = self.component_indices(c);
            let unary: Vec<f64> = idx.iter().map(|&i| cost(i)).collect();
            let (v, chosen) = match &self.kind {
                BlockKind::Modular => unreachable!(),
                BlockKind::Chain(paths) => min_cut_path(&unary, &paths[c].weights),
                BlockKind::Concave(groups) => min_concave(&unary, &groups[c].gains),
                BlockKind::Generic(tables) => {
                    let sol = brute_force_sfm(&tables[c].oracle.with_shift(unary), BRUTE_FORCE_CAP)
                        .expect("validated table within cap");
                    (sol.min_value, sol.minimal.to_bools())
                }
            };
            value += v;
            for (&i, &b) in idx.iter().zip(&chosen) {
                if b {
                    set.insert(i);
                }
            }
        }
        (value, set)
    }
}

/// Two-label dynamic program on a path: `min Σ u_k 1[k∈S] + Σ w_k |1_S(k) − 1_S(k+1)|`.
fn min_cut_path(unary: &[f64], weights: &[f64]) -> (f64, Vec<bool>) {
    let m = unary.len();
    // best[k][l]: cheapest labeling of 0..=k with label l at k.
    let mut best = vec![[0.0f64; 2]; m];
    let mut from = vec![[0u8; 2]; m];
    best[0] = [0.0, unary[0]];
    for k in 1..m {
        let w = weights[k - 1];
        for l in 0..2 {
            let stay = best[k - 1][l];
            let switch = best[k - 1][1 - l] + w;
            let (v, p) = if stay <= switch { (stay, l) } else { (switch, 1 - l) };
            best[k][l] = v + if l == 1 { unary[k] } else { 0.0 };
            from[k][l] = p as u8;
        }
    }
    let mut label = if best[m - 1][0] <= best[m - 1][1] { 0 } else { 1 };
    let value = best[m - 1][label];
    let mut chosen = vec![false; m];
    for k in (0..m).rev() {
        chosen[k] = label == 1;
        label = from[k][label] as usize;
    }
    (value, chosen)
}

/// `min_S h(|S|) + Σ_{i∈S} u_i`: the best set of each size takes the smallest costs.
fn min_concave(unary: &[f64], gains: &[f64]) -> (f64, Vec<bool>) {
    let mut order: Vec<usize> = (0..unary.len()).collect();
    order.sort_by(|&a, &b| unary[a].total_cmp(&unary[b]).then(a.cmp(&b)));
    let mut acc = 0.0;
    let mut best = (0.0, 0);
    for (k, &i) in order.iter().enumerate() {
        acc += gains[k] + unary[i];
        if acc < best.0 {
            best = (acc, k + 1);
        }
    }
    let mut chosen = vec![false; unary.len()];
    for &i in &order[..best.1] {
        chosen[i] = true;
    }
    (best.0, chosen)
}

impl SetFunction for Block {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, set: &SubsetMask) -> f64 {
        let mut v: f64 = self.offset.iter().filter(|(i, _)| set.contains(*i)).map(|(_, a)| a).sum();
        match &self.kind {
            BlockKind::Modular => {}
            BlockKind::Chain(paths) => {
                for p in paths {
                    for (e, w) in p.indices.windows(2).zip(&p.weights) {
                        if set.contains(e[0]) != set.contains(e[1]) {
                            v += w;
                        }
                    }
                }
            }
            BlockKind::Concave(groups) => {
                for g in groups {
                    v += g.value_at(g.indices.iter().filter(|&&i| set.contains(i)).count());
                }
            }
            BlockKind::Generic(tables) => {
                for t in tables {
                    let bits = t
                        .indices
                        .iter()
                        .enumerate()
                        .filter(|(_, &i)| set.contains(i))
                        .fold(0usize, |b, (k, _)| b | 1 << k);
                    v += t.values[bits];
                }
            }
        }
        v
    }

    fn chain_values(&self, base: &SubsetMask, order: &[usize], out: &mut Vec<f64>) {
        let mut acc = self.value(base);
        out.push(acc);
        let mut set = base.clone();
        // Per-component state for cardinality counts and table bit patterns.
        let mut state: Vec<usize> = match &self.kind {
            BlockKind::Concave(groups) => groups
                .iter()
                .map(|g| g.indices.iter().filter(|&&i| base.contains(i)).count())
                .collect(),
            BlockKind::Generic(tables) => tables
                .iter()
                .map(|t| {
                    t.indices
                        .iter()
                        .enumerate()
                        .filter(|(_, &i)| base.contains(i))
                        .fold(0usize, |b, (k, _)| b | 1 << k)
                })
                .collect(),
            _ => Vec::new(),
        };
        for &i in order {
            if let Some(slot) = self.slot(i) {
                acc += slot.offset;
                if slot.component != NONE {
                    let c = slot.component as usize;
                    let p = slot.position as usize;
                    match &self.kind {
                        BlockKind::Modular => {}
                        BlockKind::Chain(paths) => {
                            let path = &paths[c];
                            if p > 0 {
                                let w = path.weights[p - 1];
                                acc += if set.contains(path.indices[p - 1]) { -w } else { w };
                            }
                            if p + 1 < path.indices.len() {
                                let w = path.weights[p];
                                acc += if set.contains(path.indices[p + 1]) { -w } else { w };
                            }
                        }
                        BlockKind::Concave(groups) => {
                            acc += groups[c].gains[state[c]];
                            state[c] += 1;
                        }
                        BlockKind::Generic(tables) => {
                            let t = &tables[c];
                            let b = state[c];
                            acc += t.values[b | 1 << p] - t.values[b];
                            state[c] = b | 1 << p;
                        }
                    }
                }
            }
            set.insert(i);
            out.push(acc);
        }
    }
}
