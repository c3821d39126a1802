//! Divide-and-conquer minimization of `f(x) + Σ_i h_i(x_i)` for a submodular `F`
//! with Lovász extension `f` and strictly convex separable `h`, using only exact
//! minimizations of `F(S) + Σ_{i∈S} h'_i(λ)` on restrictions and contractions of `F`.

use crate::error::{Result, SfmError};
use crate::mask::SubsetMask;
use crate::oracle::{BruteForce, SfmSolver, SubmodularOracle, BRUTE_FORCE_CAP};

/// Strictly convex, differentiable separable penalty `Σ_i h_i(x_i)` whose
/// derivatives range over all of `R`.
pub trait SeparablePenalty: Sync {
    /// `h'_i(λ)`, strictly increasing in `λ`.
    fn derivative(&self, i: usize, lambda: f64) -> f64;

    /// `(h*_i)'(s)`, the inverse of [`derivative`](Self::derivative).
    fn conjugate_derivative(&self, i: usize, s: f64) -> f64;

    /// The `λ` minimizing `Σ_{i∈indices} h_i(λ) + λ·total`, i.e. the root of
    /// `Σ_i h'_i(λ) = −total`.
    ///
    /// The default is bisection on the bracket given by the per-element roots of
    /// `h'_i(λ) = −total/m`.
    fn balance_point(&self, indices: &[usize], total: f64) -> f64 {
        let m = indices.len() as f64;
        let target = -total / m;
        let roots = indices.iter().map(|&i| self.conjugate_derivative(i, target));
        let (mut lo, mut hi) = roots.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r), b.max(r)));
        let residual = |l: f64| indices.iter().map(|&i| self.derivative(i, l)).sum::<f64>() + total;
        for _ in 0..200 {
            if hi - lo <= 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if residual(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `h_i(x) = ½ (x − c_i)²`; the prox of `f` at `c` is the minimizer.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub centers: Vec<f64>,
}

impl Quadratic {
    pub fn new(centers: Vec<f64>) -> Self {
        Self { centers }
    }

    /// `h_i(x) = ½ x²`.
    pub fn standard(n: usize) -> Self {
        Self::new(vec![0.0; n])
    }
}

impl SeparablePenalty for Quadratic {
    fn derivative(&self, i: usize, lambda: f64) -> f64 {
        lambda - self.centers[i]
    }

    fn conjugate_derivative(&self, i: usize, s: f64) -> f64 {
        s + self.centers[i]
    }

    fn balance_point(&self, indices: &[usize], total: f64) -> f64 {
        let sum: f64 = indices.iter().map(|&i| self.centers[i]).sum();
        (sum - total) / indices.len() as f64
    }
}

/// `h_i(x) = cosh(x − c_i)`, a non-quadratic penalty with closed-form conjugate.
#[derive(Clone, Debug)]
pub struct CoshPenalty {
    pub centers: Vec<f64>,
}

impl SeparablePenalty for CoshPenalty {
    fn derivative(&self, i: usize, lambda: f64) -> f64 {
        (lambda - self.centers[i]).sinh()
    }

    fn conjugate_derivative(&self, i: usize, s: f64) -> f64 {
        s.asinh() + self.centers[i]
    }
}

/// Interval `[lo, hi]` known to contain every coordinate of the solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SearchInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(SfmError::Bracketing(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// `[min_k (h*_k)'(−F({k})), max_k (h*_k)'(F(V∖{k}) − F(V))]`, from the bounds
    /// `F(V) − F(V∖{k}) ≤ y_k ≤ F({k})` on base-polytope vectors.
    pub fn default_for(oracle: &SubmodularOracle, penalty: &dyn SeparablePenalty) -> Self {
        let n = oracle.n();
        let full = SubsetMask::full(n);
        let total = oracle.value(&full);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..n {
            let single = oracle.value(&SubsetMask::from_indices(n, [k]));
            let mut rest = full.clone();
            rest.remove(k);
            let without = oracle.value(&rest);
            lo = lo.min(penalty.conjugate_derivative(k, -single));
            hi = hi.max(penalty.conjugate_derivative(k, without - total));
        }
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Which split rule the recursion applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DncMode {
    /// Alternate balanced (odd parity, starting at the root) and unbalanced splits.
    Interleaved,
    UnbalancedOnly,
    BalancedOnly,
}

#[derive(Clone, Copy, Debug)]
pub struct DncOptions {
    pub mode: DncMode,
    /// Target coordinate-wise accuracy.
    pub tol: f64,
    /// Values of `F(S) + h'(λ)(S)` above `−value_tol` count as nonnegative.
    pub value_tol: f64,
    pub interval: Option<SearchInterval>,
}

impl Default for DncOptions {
    fn default() -> Self {
        Self {
            mode: DncMode::Interleaved,
            tol: 1e-12,
            value_tol: 1e-10,
            interval: None,
        }
    }
}

/// Bookkeeping of a divide-and-conquer run.
#[derive(Clone, Debug, Default)]
pub struct DncStats {
    pub sfm_calls: usize,
    /// Sum of ground-set sizes over all minimization calls.
    pub sfm_elements: usize,
    pub max_depth: usize,
    /// `(λ, {i : x*_i ≥ λ})` for every parametric minimization performed.
    pub level_sets: Vec<(f64, SubsetMask)>,
}

impl DncStats {
    /// Minimization work in units of one minimization over the full ground set.
    pub fn full_sfm_equivalents(&self, n: usize) -> f64 {
        self.sfm_elements as f64 / n as f64
    }
}

#[derive(Clone, Debug)]
pub struct DncOutput {
    pub x: Vec<f64>,
    pub interval: SearchInterval,
    pub stats: DncStats,
}

struct Recursion<'a> {
    oracle: &'a SubmodularOracle,
    penalty: &'a dyn SeparablePenalty,
    solver: &'a dyn SfmSolver,
    opts: DncOptions,
    x: Vec<f64>,
    stats: DncStats,
}

impl Recursion<'_> {
    fn assign(&mut self, elems: &[usize], value: f64) {
        for &i in elems {
            self.x[i] = value;
        }
    }

    fn minimize_at(&mut self, node: &SubmodularOracle, elems: &[usize], lambda: f64) -> Result<(f64, SubsetMask)> {
        let shift: Vec<f64> = elems.iter().map(|&i| self.penalty.derivative(i, lambda)).collect();
        let sol = self.solver.minimize(&node.add_shift(&shift))?;
        self.stats.sfm_calls += 1;
        self.stats.sfm_elements += elems.len();
        Ok((sol.min_value, sol.maximal))
    }

    fn record(&mut self, lambda: f64, above: &SubsetMask, elems: &[usize], local: &SubsetMask) {
        let mut set = above.clone();
        for t in local.iter() {
            set.insert(elems[t]);
        }
        self.stats.level_sets.push((lambda, set));
    }

    fn split(&mut self, lo: f64, hi: f64, elems: Vec<usize>, above: SubsetMask, parity: usize, depth: usize) -> Result<()> {
        self.stats.max_depth = self.stats.max_depth.max(depth);
        if elems.is_empty() {
            return Ok(());
        }
        let n = self.oracle.n();
        let node = self
            .oracle
            .restrict_contract(&SubsetMask::from_indices(n, elems.iter().copied()), &above)?;
        if elems.len() == 1 {
            let single = node.value(&SubsetMask::full(1));
            let v = self.penalty.conjugate_derivative(elems[0], -single);
            self.assign(&elems, v);
            return Ok(());
        }
        if hi - lo <= 0.0 {
            self.assign(&elems, lo);
            return Ok(());
        }
        let narrow = hi - lo <= self.opts.tol;
        let unbalanced = match self.opts.mode {
            DncMode::UnbalancedOnly => true,
            DncMode::BalancedOnly => false,
            DncMode::Interleaved => narrow || parity % 2 == 0,
        };

        let (lambda, set) = if unbalanced {
            let total = node.value(&SubsetMask::full(elems.len()));
            let lambda = self.penalty.balance_point(&elems, total);
            let (min_value, set) = self.minimize_at(&node, &elems, lambda)?;
            self.record(lambda, &above, &elems, &set);
            if min_value >= -self.opts.value_tol || set.is_empty() || set.is_full() {
                self.assign(&elems, lambda);
                return Ok(());
            }
            if narrow {
                self.assign(&elems, lambda.clamp(lo, hi));
                return Ok(());
            }
            (lambda.clamp(lo, hi), set)
        } else {
            if narrow {
                self.assign(&elems, 0.5 * (lo + hi));
                return Ok(());
            }
            let lambda = 0.5 * (lo + hi);
            let (_, set) = self.minimize_at(&node, &elems, lambda)?;
            self.record(lambda, &above, &elems, &set);
            if set.is_empty() {
                return self.split(lo, lambda, elems, above, parity + 1, depth + 1);
            }
            if set.is_full() {
                return self.split(lambda, hi, elems, above, parity + 1, depth + 1);
            }
            (lambda, set)
        };

        let upper: Vec<usize> = set.iter().map(|t| elems[t]).collect();
        let lower: Vec<usize> = set.complement().iter().map(|t| elems[t]).collect();
        let mut lower_above = above.clone();
        for &i in &upper {
            lower_above.insert(i);
        }
        self.split(lambda, hi, upper, above, parity + 1, depth + 1)?;
        self.split(lo, lambda, lower, lower_above, parity + 1, depth + 1)
    }
}

/// Minimizes `f(x) + Σ_i h_i(x_i)` to coordinate-wise accuracy `opts.tol`.
///
/// Each split minimizes `F(T) + Σ_{i∈T} h'_i(λ)` and keeps the maximal minimizer
/// `S = {i : x*_i ≥ λ}`; `S` is solved on the restriction `F_S` over `[λ, hi]` and
/// the rest on the contraction `F^S` over `[lo, λ]`.
pub fn dnc_prox(
    oracle: &SubmodularOracle,
    penalty: &dyn SeparablePenalty,
    solver: &dyn SfmSolver,
    opts: DncOptions,
) -> Result<DncOutput> {
    let n = oracle.n();
    let interval = match opts.interval {
        Some(iv) => iv,
        None => SearchInterval::default_for(oracle, penalty),
    };
    let mut rec = Recursion {
        oracle,
        penalty,
        solver,
        opts,
        x: vec![0.0; n],
        stats: DncStats::default(),
    };
    rec.split(interval.lo, interval.hi, (0..n).collect(), SubsetMask::empty(n), 1, 0)?;
    let x = rec.x;
    if let Some(i) = (0..n).find(|&i| x[i] < interval.lo - 1e-9 * (1.0 + x[i].abs()) || x[i] > interval.hi + 1e-9 * (1.0 + x[i].abs())) {
        return Err(SfmError::Bracketing(format!(
            "coordinate {i} = {} lies outside [{}, {}]",
            x[i], interval.lo, interval.hi
        )));
    }
    Ok(DncOutput {
        x,
        interval,
        stats: rec.stats,
    })
}

/// Projection of `z` onto `B(F)` as `z − prox_f(z)`, with the prox computed by
/// divide-and-conquer over exhaustive minimization.
pub fn project_generic_small_support(oracle: &SubmodularOracle, z: &[f64]) -> Result<Vec<f64>> {
    let n = oracle.n();
    if n > BRUTE_FORCE_CAP {
        return Err(SfmError::CapExceeded {
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    assert_eq!(z.len(), n, "vector length mismatch");
    let penalty = Quadratic::new(z.to_vec());
    let solver = BruteForce {
        cap: BRUTE_FORCE_CAP,
        tol: 1e-10,
    };
    let out = dnc_prox(
        oracle,
        &penalty,
        &solver,
        DncOptions {
            mode: DncMode::UnbalancedOnly,
            ..DncOptions::default()
        },
    )?;
    Ok(z.iter().zip(&out.x).map(|(a, b)| a - b).collect())
}
