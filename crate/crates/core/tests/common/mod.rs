#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sfm::functions::FnSetFunction;
use sfm::prox::{Block, BlockFamily, ConcaveGroup, Path, Table};
use sfm::solvers::DecomposableProblem;
use sfm::{SubmodularOracle, SubsetMask};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Multiple of `step` in `[lo, hi]`.
pub fn quantized(rng: &mut ChaCha8Rng, lo: f64, hi: f64, step: f64) -> f64 {
    let k = rng.gen_range((lo / step).round() as i64..=(hi / step).round() as i64);
    k as f64 * step
}

fn random_offset(rng: &mut ChaCha8Rng, support: &[usize], step: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for &i in support {
        if rng.gen_bool(0.7) {
            out.push((i, quantized(rng, -2.0, 2.0, step)));
        }
    }
    out
}

/// Random subset of `0..n` with at least `min` elements, in random order.
fn random_support(rng: &mut ChaCha8Rng, n: usize, min: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let k = rng.gen_range(min.min(n)..=n);
    all.truncate(k);
    all
}

/// Splits `items` into consecutive nonempty chunks of length at most `max`.
fn chunks(rng: &mut ChaCha8Rng, items: Vec<usize>, max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut rest = items.as_slice();
    while !rest.is_empty() {
        let k = rng.gen_range(1..=rest.len().min(max));
        out.push(rest[..k].to_vec());
        rest = &rest[k..];
    }
    out
}

/// Values of `Σ_{i<j} w_ij [cut] + h(|S|) + a(S)` over bit patterns of `k`
/// elements; submodular by construction.
pub fn random_table_values(rng: &mut ChaCha8Rng, k: usize, step: f64) -> Vec<f64> {
    let mut w = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            if rng.gen_bool(0.5) {
                w[i][j] = quantized(rng, 0.0, 1.5, step);
            }
        }
    }
    let mut gains: Vec<f64> = (0..k).map(|_| quantized(rng, -1.5, 1.5, step)).collect();
    gains.sort_by(|a, b| b.total_cmp(a));
    let a: Vec<f64> = (0..k).map(|_| quantized(rng, -1.0, 1.0, step)).collect();
    (0..1usize << k)
        .map(|bits| {
            let inside = |i: usize| bits >> i & 1 == 1;
            let mut v = 0.0;
            for i in 0..k {
                if inside(i) {
                    v += a[i];
                }
                for j in i + 1..k {
                    if inside(i) != inside(j) {
                        v += w[i][j];
                    }
                }
            }
            v + gains[..bits.count_ones() as usize].iter().sum::<f64>()
        })
        .collect()
}

pub fn random_block(rng: &mut ChaCha8Rng, n: usize, family: BlockFamily, step: f64) -> Block {
    match family {
        BlockFamily::Modular => {
            let support = random_support(rng, n, 1);
            Block::modular(n, random_offset(rng, &support, step)).unwrap()
        }
        BlockFamily::Chain => {
            let support = random_support(rng, n, 2);
            let paths = chunks(rng, support.clone(), n)
                .into_iter()
                .map(|indices| Path {
                    weights: (1..indices.len()).map(|_| quantized(rng, 0.0, 1.5, step)).collect(),
                    indices,
                })
                .collect();
            Block::chain(n, paths, random_offset(rng, &support, step)).unwrap()
        }
        BlockFamily::Concave => {
            let support = random_support(rng, n, 2);
            let groups = chunks(rng, support.clone(), n)
                .into_iter()
                .map(|indices| {
                    if rng.gen_bool(0.5) {
                        return ConcaveGroup::region(indices);
                    }
                    let mut gains: Vec<f64> = indices.iter().map(|_| quantized(rng, -2.0, 2.0, step)).collect();
                    gains.sort_by(|a, b| b.total_cmp(a));
                    ConcaveGroup { indices, gains }
                })
                .collect();
            Block::concave(n, groups, random_offset(rng, &support, step)).unwrap()
        }
        BlockFamily::Generic => {
            let support = random_support(rng, n, 2);
            let tables = chunks(rng, support.clone(), 4)
                .into_iter()
                .map(|indices| {
                    let values = random_table_values(rng, indices.len(), step);
                    Table::new(indices, values).unwrap()
                })
                .collect();
            Block::generic(n, tables, random_offset(rng, &support, step)).unwrap()
        }
    }
}

pub const FAMILIES: [BlockFamily; 4] = [BlockFamily::Modular, BlockFamily::Chain, BlockFamily::Concave, BlockFamily::Generic];

/// Mixed-family problem with quantized data (multiples of `step`).
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, r: usize, step: f64) -> DecomposableProblem {
    let blocks = (0..r)
        .map(|_| {
            let family = *FAMILIES.choose(rng).unwrap();
            random_block(rng, n, family, step)
        })
        .collect();
    DecomposableProblem::new(n, blocks).unwrap()
}

pub fn block_oracle(b: &Block) -> SubmodularOracle {
    SubmodularOracle::new(Arc::new(b.clone()))
}

/// All values `F(S)` indexed by bit pattern, evaluated pointwise.
pub fn all_values(f: &SubmodularOracle) -> Vec<f64> {
    let n = f.n();
    (0..1u64 << n).map(|bits| f.value(&SubsetMask::from_bits(n, bits))).collect()
}

/// Minimum, minimal and maximal minimizer by plain enumeration with exact
/// comparisons; meant for dyadic data where sums are exact.
pub fn exact_minimizers(values: &[f64], n: usize) -> (f64, SubsetMask, SubsetMask) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut meet, mut join) = (u64::MAX >> (64 - n.max(1)), 0u64);
    for (bits, &v) in values.iter().enumerate() {
        if v == min {
            meet &= bits as u64;
            join |= bits as u64;
        }
    }
    if n == 0 {
        meet = 0;
    }
    (min, SubsetMask::from_bits(n, meet), SubsetMask::from_bits(n, join))
}

/// Vertex of `B(F)` for the order `perm`, from marginal gains.
pub fn vertex(f: &SubmodularOracle, perm: &[usize]) -> Vec<f64> {
    let n = f.n();
    let mut y = vec![0.0; n];
    let mut set = SubsetMask::empty(n);
    let mut prev = f.value(&set);
    for &i in perm {
        set.insert(i);
        let v = f.value(&set);
        y[i] = v - prev;
        prev = v;
    }
    y
}

/// Prox `argmin f(x) + ½‖x‖²` from the regularization path: the lower envelope
/// of `λ ↦ min_{|S|=k} F(S) + λk` gives the breakpoints, and `x*_j` is the largest
/// breakpoint whose maximal minimizer of `F(S) + λ|S|` contains `j`.
pub fn parametric_prox(values: &[f64], n: usize) -> Vec<f64> {
    let mut best = vec![f64::INFINITY; n + 1];
    for (bits, &v) in values.iter().enumerate() {
        let k = (bits as u64).count_ones() as usize;
        best[k] = best[k].min(v);
    }
    let mut breakpoints = Vec::new();
    for a in 0..=n {
        for b in a + 1..=n {
            breakpoints.push((best[a] - best[b]) / (b - a) as f64);
        }
    }
    let mut x = vec![f64::NEG_INFINITY; n];
    for &lambda in &breakpoints {
        let g = values
            .iter()
            .enumerate()
            .map(|(bits, v)| v + lambda * (bits as u64).count_ones() as f64)
            .fold(f64::INFINITY, f64::min);
        let tol = 1e-9 * (1.0 + g.abs());
        let mut union = 0usize;
        for (bits, v) in values.iter().enumerate() {
            if v + lambda * (bits as u64).count_ones() as f64 <= g + tol {
                union |= bits;
            }
        }
        for (j, xj) in x.iter_mut().enumerate() {
            if union >> j & 1 == 1 {
                *xj = xj.max(lambda);
            }
        }
    }
    x
}

/// `F` from a value table indexed by bit pattern.
pub fn table_oracle(n: usize, values: Vec<f64>) -> SubmodularOracle {
    SubmodularOracle::from_fn(FnSetFunction::new(n, move |s: &SubsetMask| values[s.to_bits() as usize]))
}

/// All permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

/// Exact isotonic regression by enumerating contiguous partitions.
pub fn isotonic_brute(v: &[f64], nonincreasing: bool) -> Vec<f64> {
    let m = v.len();
    if m == 0 {
        return Vec::new();
    }
    let mut best = (f64::INFINITY, Vec::new());
    for cuts in 0..1u32 << (m - 1) {
        let mut fit = Vec::with_capacity(m);
        let mut start = 0;
        for k in 0..m {
            if k == m - 1 || cuts >> k & 1 == 1 {
                let mean = v[start..=k].iter().sum::<f64>() / (k + 1 - start) as f64;
                fit.extend(std::iter::repeat_n(mean, k + 1 - start));
                start = k + 1;
            }
        }
        let ordered = fit.windows(2).all(|w| if nonincreasing { w[0] >= w[1] } else { w[0] <= w[1] });
        if !ordered {
            continue;
        }
        let sse: f64 = fit.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if sse < best.0 {
            best = (sse, fit);
        }
    }
    best.1
}
