//! Greedy maximization over the base polytope, the Lovász extension, level sets, and
//! the discrete and smooth duality-gap certificates.

use crate::error::{Result, SfmError};
use crate::mask::SubsetMask;
use crate::oracle::{enumerate_values, SubmodularOracle, BRUTE_FORCE_CAP, VALUE_TOL};
use crate::pava::isotonic_blocks;

/// Indices sorted by decreasing `x`, ties broken by ascending index.
pub fn descending_order(x: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    order
}

/// Greedy vertex of `B(F)` for the order `order`: `y_{σ(k)} = F(σ(1..k)) − F(σ(1..k−1))`.
pub fn greedy_vertex(oracle: &SubmodularOracle, order: &[usize]) -> Vec<f64> {
    let n = oracle.n();
    let mut chain = Vec::with_capacity(n + 1);
    oracle.chain_values(&SubsetMask::empty(n), order, &mut chain);
    let mut y = vec![0.0; n];
    for (k, &i) in order.iter().enumerate() {
        y[i] = chain[k + 1] - chain[k];
    }
    y
}

/// Maximizes `yᵀx` over `B(F)`; returns the maximizing vertex and `f(x)`.
pub fn greedy_linear_maximize(oracle: &SubmodularOracle, x: &[f64]) -> (Vec<f64>, f64) {
    assert_eq!(x.len(), oracle.n(), "vector length mismatch");
    let y = greedy_vertex(oracle, &descending_order(x));
    let value = dot(x, &y);
    (y, value)
}

/// The Lovász extension `f(x)`.
pub fn lovasz_value(oracle: &SubmodularOracle, x: &[f64]) -> f64 {
    greedy_linear_maximize(oracle, x).1
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// `(y)_−(V) = Σ_i min(y_i, 0)`, a lower bound on `min F` whenever `y ∈ B(F)`.
pub fn negative_part_sum(y: &[f64]) -> f64 {
    y.iter().map(|&v| v.min(0.0)).sum()
}

/// The chain of suplevel sets `{i : x_i ≥ μ}` of a vector.
///
/// Every set in the chain is a prefix of `order`; `cuts` holds the prefix lengths
/// in increasing order, starting with the empty set and ending with `V`. The
/// thresholds `μ = 0` and `μ = 0⁺` are always part of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSets {
    pub order: Vec<usize>,
    pub cuts: Vec<usize>,
    /// Prefix length of `{i : x_i ≥ 0}`.
    pub nonnegative: usize,
    /// Prefix length of `{i : x_i > 0}`.
    pub positive: usize,
}

impl LevelSets {
    pub fn prefix(&self, len: usize) -> SubsetMask {
        SubsetMask::from_indices(self.order.len(), self.order[..len].iter().copied())
    }

    pub fn sets(&self) -> Vec<SubsetMask> {
        self.cuts.iter().map(|&c| self.prefix(c)).collect()
    }

    pub fn nonnegative_set(&self) -> SubsetMask {
        self.prefix(self.nonnegative)
    }

    pub fn positive_set(&self) -> SubsetMask {
        self.prefix(self.positive)
    }
}

pub fn extract_level_sets(x: &[f64]) -> LevelSets {
    let order = descending_order(x);
    let n = x.len();
    let positive = order.iter().take_while(|&&i| x[i] > 0.0).count();
    let nonnegative = order.iter().take_while(|&&i| x[i] >= 0.0).count();
    let mut cuts = vec![0];
    for k in 1..=n {
        if k == n || x[order[k]] != x[order[k - 1]] {
            cuts.push(k);
        }
    }
    for c in [positive, nonnegative] {
        if let Err(pos) = cuts.binary_search(&c) {
            cuts.insert(pos, c);
        }
    }
    LevelSets {
        order,
        cuts,
        nonnegative,
        positive,
    }
}

/// The best suplevel set of a vector and the extreme level sets attaining its value.
#[derive(Clone, Debug)]
pub struct BestLevelSet {
    pub value: f64,
    pub set: SubsetMask,
    /// Smallest level set within tolerance of `value`.
    pub minimal: SubsetMask,
    /// Largest level set within tolerance of `value`.
    pub maximal: SubsetMask,
}

pub fn best_level_set(oracle: &SubmodularOracle, x: &[f64]) -> BestLevelSet {
    let levels = extract_level_sets(x);
    let n = oracle.n();
    let mut chain = Vec::with_capacity(n + 1);
    oracle.chain_values(&SubsetMask::empty(n), &levels.order, &mut chain);
    let mut best = (f64::INFINITY, 0);
    for &c in &levels.cuts {
        if chain[c] < best.0 {
            best = (chain[c], c);
        }
    }
    let tol = VALUE_TOL * (1.0 + best.0.abs());
    let attaining: Vec<usize> = levels
        .cuts
        .iter()
        .copied()
        .filter(|&c| chain[c] <= best.0 + tol)
        .collect();
    BestLevelSet {
        value: best.0,
        set: levels.prefix(best.1),
        minimal: levels.prefix(attaining[0]),
        maximal: levels.prefix(*attaining.last().unwrap()),
    }
}

fn feasibility_tol(y: &[f64]) -> f64 {
    1e-9 * (1.0 + y.iter().map(|v| v.abs()).sum::<f64>())
}

/// Discrete duality gap `min_i F(S_i) − (y)_−(V)` over the level sets `S_i` of `x`.
///
/// `y` must lie in `B(F)`; only the cheap necessary condition `y(V) = F(V)` is
/// checked. Returns the gap and the best level set.
pub fn discrete_gap(oracle: &SubmodularOracle, x: &[f64], y: &[f64]) -> Result<(f64, SubsetMask)> {
    let total = oracle.total();
    let sum: f64 = y.iter().sum();
    if (sum - total).abs() > feasibility_tol(y) {
        return Err(SfmError::Infeasible(format!("y(V) = {sum} but F(V) = {total}")));
    }
    Ok(discrete_gap_unchecked(oracle, x, y))
}

/// [`discrete_gap`] without the feasibility check, for callers that pass `y = −x`
/// for a primal iterate that is not yet dual feasible.
pub fn discrete_gap_unchecked(oracle: &SubmodularOracle, x: &[f64], y: &[f64]) -> (f64, SubsetMask) {
    let best = best_level_set(oracle, x);
    (best.value - negative_part_sum(y), best.set)
}

/// The isotonic-regression improvement of a primal point and its smooth gap.
#[derive(Clone, Debug)]
pub struct SmoothGap {
    pub gap: f64,
    pub x_improved: Vec<f64>,
    pub y_prime: Vec<f64>,
    /// `f(x') + ½‖x'‖²`.
    pub primal_value: f64,
}

/// With `y' = greedy(x)`, minimizes `zᵀy' + ½‖z‖²` over `z` ordered like `x` (ties
/// in `x` stay tied) and returns the gap `f(z) + ½‖z‖² + ½‖y'‖²`.
pub fn smooth_gap_certificate(oracle: &SubmodularOracle, x: &[f64]) -> SmoothGap {
    let n = oracle.n();
    let order = descending_order(x);
    let y_prime = greedy_vertex(oracle, &order);

    let mut sums = Vec::new();
    let mut sizes = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        if k > 0 && x[i] == x[order[k - 1]] {
            *sums.last_mut().unwrap() -= y_prime[i];
            *sizes.last_mut().unwrap() += 1;
        } else {
            sums.push(-y_prime[i]);
            sizes.push(1);
        }
    }
    let fitted = isotonic_blocks(&sums, &sizes, true);
    let mut x_improved = vec![0.0; n];
    let mut k = 0;
    for (value, &size) in fitted.iter().zip(&sizes) {
        for &i in &order[k..k + size] {
            x_improved[i] = *value;
        }
        k += size;
    }
    let primal_value = dot(&x_improved, &y_prime) + 0.5 * norm_sq(&x_improved);
    let gap = primal_value + 0.5 * norm_sq(&y_prime);
    SmoothGap {
        gap,
        x_improved,
        y_prime,
        primal_value,
    }
}

/// Primal/dual optimality certificate for a candidate solution.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub x: Vec<f64>,
    /// Isotonic improvement of `x`; the smooth gap bounds its suboptimality.
    pub x_improved: Vec<f64>,
    /// Dual point in `B(F)` used for the discrete gap.
    pub y: Vec<f64>,
    pub discrete_gap: f64,
    pub smooth_gap: f64,
    /// Discrete gap computed with the greedy vertex at `x` instead of `y`.
    pub greedy_discrete_gap: f64,
    pub best_level_set: SubsetMask,
    pub best_value: f64,
    pub minimal_set: SubsetMask,
    pub maximal_set: SubsetMask,
}

/// Builds a certificate for the primal point `x`.
///
/// `dual`, when given, must lie in `B(F)` (for the decomposition solvers it is
/// `Σ_j y_j`); it supplies the discrete lower bound and a second smooth gap
/// `f(x') + ½‖x'‖² + ½‖dual‖²`, and the smaller smooth gap is reported.
pub fn certify(oracle: &SubmodularOracle, x: &[f64], dual: Option<&[f64]>) -> Certificate {
    let best = best_level_set(oracle, x);
    let smooth = smooth_gap_certificate(oracle, x);
    let greedy_discrete_gap = best.value - negative_part_sum(&smooth.y_prime);
    let (y, discrete_gap, smooth_gap) = match dual {
        Some(d) => {
            let alt = smooth.primal_value + 0.5 * norm_sq(d);
            (d.to_vec(), best.value - negative_part_sum(d), smooth.gap.min(alt))
        }
        None => (smooth.y_prime.clone(), greedy_discrete_gap, smooth.gap),
    };
    Certificate {
        x: x.to_vec(),
        x_improved: smooth.x_improved,
        y,
        discrete_gap,
        smooth_gap,
        greedy_discrete_gap,
        best_level_set: best.set,
        best_value: best.value,
        minimal_set: best.minimal,
        maximal_set: best.maximal,
    }
}

/// Exhaustive membership test `y(S) ≤ F(S) + tol` for all `S`, `|y(V) − F(V)| ≤ tol`.
pub fn check_base_vector(oracle: &SubmodularOracle, y: &[f64], tol: f64) -> Result<()> {
    let n = oracle.n();
    if n > BRUTE_FORCE_CAP {
        return Err(SfmError::CapExceeded {
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let values = enumerate_values(oracle);
    let mut ysum = vec![0.0; values.len()];
    for bits in 1..values.len() {
        let low = bits.trailing_zeros() as usize;
        ysum[bits] = ysum[bits & (bits - 1)] + y[low];
        if ysum[bits] > values[bits] + tol {
            return Err(SfmError::Infeasible(format!(
                "y(S) = {} exceeds F(S) = {} for S = {:?}",
                ysum[bits],
                values[bits],
                SubsetMask::from_bits(n, bits as u64)
            )));
        }
    }
    let full = values.len() - 1;
    if (ysum[full] - values[full]).abs() > tol {
        return Err(SfmError::Infeasible(format!(
            "y(V) = {} but F(V) = {}",
            ysum[full], values[full]
        )));
    }
    Ok(())
}
