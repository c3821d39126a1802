//! Set-function oracles with modular shifts, restriction and contraction, and the
//! exhaustive minimizer used both as a correctness oracle and as the inner solver
//! for small-support blocks.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SfmError};
use crate::mask::SubsetMask;

/// Default ground-set size above which exhaustive enumeration is refused.
pub const BRUTE_FORCE_CAP: usize = 20;

/// Absolute tolerance used when comparing set-function values.
pub const VALUE_TOL: f64 = 1e-9;

/// A real-valued set function on `{0, .., n-1}`.
///
/// Implementations must be pure; they are evaluated concurrently.
pub trait SetFunction: Send + Sync + fmt::Debug {
    fn ground_size(&self) -> usize;

    fn value(&self, set: &SubsetMask) -> f64;

    /// Pushes `F(base ∪ {order[0..k]})` for `k = 0..=order.len()` onto `out`.
    ///
    /// `order` must not intersect `base`. Structured functions override this to
    /// run in time linear in `order.len()`; the greedy algorithm depends on it.
    fn chain_values(&self, base: &SubsetMask, order: &[usize], out: &mut Vec<f64>) {
        let mut set = base.clone();
        out.push(self.value(&set));
        for &i in order {
            set.insert(i);
            out.push(self.value(&set));
        }
    }
}

/// A normalized set function `S ↦ F(S ∪ T) − F(T) + a(S)` on a kept subset `U` of
/// the underlying function's ground set, where `T` is the contracted set and `a`
/// the modular shift. With `U = V` and `T = ∅` this is just `F − F(∅) + a`.
///
/// Element `i` of the oracle's ground set is element `kept[i]` of the underlying
/// function.
#[derive(Clone)]
pub struct SubmodularOracle {
    func: Arc<dyn SetFunction>,
    kept: Vec<usize>,
    contracted: SubsetMask,
    baseline: f64,
    shift: Vec<f64>,
}

impl fmt::Debug for SubmodularOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubmodularOracle")
            .field("func", &self.func)
            .field("kept", &self.kept)
            .field("contracted", &self.contracted)
            .field("shift", &self.shift)
            .finish()
    }
}

impl SubmodularOracle {
    pub fn new(func: Arc<dyn SetFunction>) -> Self {
        let n = func.ground_size();
        let contracted = SubsetMask::empty(n);
        let baseline = func.value(&contracted);
        Self {
            func,
            kept: (0..n).collect(),
            contracted,
            baseline,
            shift: vec![0.0; n],
        }
    }

    pub fn from_fn<F: SetFunction + 'static>(func: F) -> Self {
        Self::new(Arc::new(func))
    }

    /// Ground-set size of this oracle.
    pub fn n(&self) -> usize {
        self.kept.len()
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Indices in the underlying function's ground set, one per local element.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn function(&self) -> &Arc<dyn SetFunction> {
        &self.func
    }

    /// Same function with the modular shift replaced by `shift`.
    pub fn with_shift(&self, shift: Vec<f64>) -> Self {
        assert_eq!(shift.len(), self.n(), "shift length mismatch");
        Self {
            shift,
            ..self.clone()
        }
    }

    /// Same function with `extra` added to the modular shift.
    pub fn add_shift(&self, extra: &[f64]) -> Self {
        assert_eq!(extra.len(), self.n(), "shift length mismatch");
        let shift = self.shift.iter().zip(extra).map(|(a, b)| a + b).collect();
        self.with_shift(shift)
    }

    fn lift(&self, set: &SubsetMask) -> SubsetMask {
        let mut global = self.contracted.clone();
        for i in set.iter() {
            global.insert(self.kept[i]);
        }
        global
    }

    /// `F(S) + shift(S)`; zero on the empty set.
    pub fn evaluate(&self, set: &SubsetMask) -> Result<f64> {
        if set.len() != self.n() {
            return Err(SfmError::MaskLength {
                expected: self.n(),
                got: set.len(),
            });
        }
        Ok(self.value(set))
    }

    /// Unchecked variant of [`evaluate`](Self::evaluate); panics on a length mismatch.
    pub fn value(&self, set: &SubsetMask) -> f64 {
        assert_eq!(set.len(), self.n(), "mask length mismatch");
        self.func.value(&self.lift(set)) - self.baseline + set.sum_of(&self.shift)
    }

    pub fn value_of_indices(&self, indices: &[usize]) -> f64 {
        self.value(&SubsetMask::from_indices(self.n(), indices.iter().copied()))
    }

    /// Pushes `F(base ∪ {order[0..k]})` for `k = 0..=order.len()`.
    pub fn chain_values(&self, base: &SubsetMask, order: &[usize], out: &mut Vec<f64>) {
        let start = out.len();
        let global_base = self.lift(base);
        let global_order: Vec<usize> = order.iter().map(|&i| self.kept[i]).collect();
        self.func.chain_values(&global_base, &global_order, out);
        let mut acc = base.sum_of(&self.shift) - self.baseline;
        out[start] += acc;
        for (k, &i) in order.iter().enumerate() {
            acc += self.shift[i];
            out[start + k + 1] += acc;
        }
    }

    /// `F(V)` of this oracle.
    pub fn total(&self) -> f64 {
        self.value(&SubsetMask::full(self.n()))
    }

    /// The minor `S ↦ F(S ∪ C) − F(C)` on the ground set `kept`, where both masks
    /// are in this oracle's coordinates. Local element `i` of the result is the
    /// `i`-th member of `kept` in ascending order.
    pub fn restrict_contract(&self, kept: &SubsetMask, contracted: &SubsetMask) -> Result<Self> {
        for m in [kept, contracted] {
            if m.len() != self.n() {
                return Err(SfmError::MaskLength {
                    expected: self.n(),
                    got: m.len(),
                });
            }
        }
        if !kept.is_disjoint(contracted) {
            return Err(SfmError::OverlappingMasks);
        }
        let new_contracted = self.lift(contracted);
        let baseline = self.func.value(&new_contracted);
        Ok(Self {
            func: Arc::clone(&self.func),
            kept: kept.iter().map(|i| self.kept[i]).collect(),
            contracted: new_contracted,
            baseline,
            shift: kept.iter().map(|i| self.shift[i]).collect(),
        })
    }
}

/// Exact minimum of a set function together with the inclusion-minimal and
/// inclusion-maximal minimizers.
#[derive(Clone, Debug, PartialEq)]
pub struct SfmSolution {
    pub min_value: f64,
    pub minimal: SubsetMask,
    pub maximal: SubsetMask,
}

/// Enumerates all `2^n` subsets (`n <= cap`) in Gray-code order.
///
/// Sets whose value is within [`VALUE_TOL`] of the minimum count as minimizers;
/// the minimal (maximal) minimizer is their intersection (union).
pub fn brute_force_sfm(oracle: &SubmodularOracle, cap: usize) -> Result<SfmSolution> {
    brute_force_sfm_tol(oracle, cap, VALUE_TOL)
}

pub fn brute_force_sfm_tol(oracle: &SubmodularOracle, cap: usize, tol: f64) -> Result<SfmSolution> {
    let n = oracle.n();
    if n > cap || n >= 63 {
        return Err(SfmError::CapExceeded { n, cap });
    }
    let values = enumerate_values(oracle);
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut union = 0u64;
    let mut inter = if n == 0 { 0 } else { u64::MAX >> (64 - n) };
    for (bits, &v) in values.iter().enumerate() {
        if v <= min_value + tol {
            union |= bits as u64;
            inter &= bits as u64;
        }
    }
    Ok(SfmSolution {
        min_value,
        minimal: SubsetMask::from_bits(n, inter),
        maximal: SubsetMask::from_bits(n, union),
    })
}

/// Values of `oracle` on every subset, indexed by the subset's bit pattern.
pub fn enumerate_values(oracle: &SubmodularOracle) -> Vec<f64> {
    let n = oracle.n();
    assert!(n < 63);
    let mut values = vec![0.0; 1usize << n];
    let mut global = oracle.contracted.clone();
    let base = oracle.func.value(&global);
    let mut shift = 0.0;
    let mut gray = 0u64;
    values[0] = 0.0;
    for k in 1u64..(1u64 << n) {
        let bit = k.trailing_zeros() as usize;
        gray ^= 1 << bit;
        global.toggle(oracle.kept[bit]);
        if gray >> bit & 1 == 1 {
            shift += oracle.shift[bit];
        } else {
            shift -= oracle.shift[bit];
        }
        // Recompute the shift sum periodically so drift cannot accumulate.
        if k & 0xff == 0 {
            shift = (0..n).filter(|&i| gray >> i & 1 == 1).map(|i| oracle.shift[i]).sum();
        }
        values[gray as usize] = oracle.func.value(&global) - base + shift;
    }
    values
}

/// A routine that minimizes a (shifted, minor) submodular oracle exactly.
pub trait SfmSolver: Sync {
    fn minimize(&self, oracle: &SubmodularOracle) -> Result<SfmSolution>;
}

/// Exhaustive enumeration as an [`SfmSolver`].
#[derive(Clone, Copy, Debug)]
pub struct BruteForce {
    pub cap: usize,
    pub tol: f64,
}

impl Default for BruteForce {
    fn default() -> Self {
        Self {
            cap: BRUTE_FORCE_CAP,
            tol: VALUE_TOL,
        }
    }
}

impl SfmSolver for BruteForce {
    fn minimize(&self, oracle: &SubmodularOracle) -> Result<SfmSolution> {
        brute_force_sfm_tol(oracle, self.cap, self.tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{CardinalityFunction, GraphCut, Modular};

    fn edge() -> SubmodularOracle {
        SubmodularOracle::from_fn(GraphCut::new(2, vec![(0, 1, 1.0)]))
    }

    fn card3() -> SubmodularOracle {
        // |S|(3 − |S|)
        SubmodularOracle::from_fn(CardinalityFunction::from_values(&[0.0, 2.0, 2.0, 0.0]))
    }

    #[test]
    fn evaluate_examples() {
        let f = edge();
        assert_eq!(f.value_of_indices(&[0]), 1.0);
        assert_eq!(f.value_of_indices(&[]), 0.0);
        assert_eq!(card3().value_of_indices(&[0, 1]), 2.0);
    }

    #[test]
    fn evaluate_rejects_wrong_length() {
        let err = edge().evaluate(&SubsetMask::empty(3)).unwrap_err();
        assert!(matches!(err, SfmError::MaskLength { expected: 2, got: 3 }));
    }

    #[test]
    fn restrict_contract_examples() {
        let f = edge();
        let m = f
            .restrict_contract(&SubsetMask::from_indices(2, [0]), &SubsetMask::from_indices(2, [1]))
            .unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.value_of_indices(&[0]), -1.0);
        assert_eq!(m.value_of_indices(&[]), 0.0);

        let g = card3();
        let m = g
            .restrict_contract(&SubsetMask::from_indices(3, [2]), &SubsetMask::from_indices(3, [0]))
            .unwrap();
        assert_eq!(m.value_of_indices(&[0]), 0.0);

        let id = g.restrict_contract(&SubsetMask::full(3), &SubsetMask::empty(3)).unwrap();
        for bits in 0..8 {
            let s = SubsetMask::from_bits(3, bits);
            assert_eq!(id.value(&s), g.value(&s));
        }
    }

    #[test]
    fn restrict_contract_rejects_overlap() {
        let err = edge()
            .restrict_contract(&SubsetMask::full(2), &SubsetMask::from_indices(2, [1]))
            .unwrap_err();
        assert!(matches!(err, SfmError::OverlappingMasks));
    }

    #[test]
    fn brute_force_examples() {
        let s = brute_force_sfm(&edge(), BRUTE_FORCE_CAP).unwrap();
        assert_eq!(s.min_value, 0.0);
        assert!(s.minimal.is_empty());
        assert!(s.maximal.is_full());

        let m = SubmodularOracle::from_fn(Modular::new(vec![1.0, -2.0]));
        let s = brute_force_sfm(&m, BRUTE_FORCE_CAP).unwrap();
        assert_eq!(s.min_value, -2.0);
        assert_eq!(s.minimal.to_indices(), vec![1]);
        assert_eq!(s.maximal.to_indices(), vec![1]);

        let s = brute_force_sfm(&card3(), BRUTE_FORCE_CAP).unwrap();
        assert_eq!(s.min_value, 0.0);
        assert!(s.minimal.is_empty());
        assert!(s.maximal.is_full());
    }

    #[test]
    fn brute_force_respects_cap() {
        let m = SubmodularOracle::from_fn(Modular::new(vec![0.0; 5]));
        assert!(matches!(
            brute_force_sfm(&m, 4),
            Err(SfmError::CapExceeded { n: 5, cap: 4 })
        ));
    }

    #[test]
    fn shift_and_chain_values_agree_with_value() {
        let f = card3().with_shift(vec![0.5, -1.0, 0.25]);
        let mut out = Vec::new();
        f.chain_values(&SubsetMask::from_indices(3, [1]), &[2, 0], &mut out);
        assert_eq!(out.len(), 3);
        assert!((out[0] - f.value_of_indices(&[1])).abs() < 1e-12);
        assert!((out[1] - f.value_of_indices(&[1, 2])).abs() < 1e-12);
        assert!((out[2] - f.value_of_indices(&[0, 1, 2])).abs() < 1e-12);
        let values = enumerate_values(&f);
        for (bits, v) in values.iter().enumerate() {
            assert!((v - f.value(&SubsetMask::from_bits(3, bits as u64))).abs() < 1e-12);
        }
    }
}
