//! Concrete submodular set functions.

use std::fmt;
use std::sync::Arc;

use crate::mask::SubsetMask;
use crate::oracle::SetFunction;

/// `a(S) = Σ_{i∈S} a_i`.
#[derive(Clone, Debug)]
pub struct Modular {
    pub weights: Vec<f64>,
}

impl Modular {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights }
    }
}

impl SetFunction for Modular {
    fn ground_size(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, set: &SubsetMask) -> f64 {
        set.sum_of(&self.weights)
    }

    fn chain_values(&self, base: &SubsetMask, order: &[usize], out: &mut Vec<f64>) {
        let mut acc = base.sum_of(&self.weights);
        out.push(acc);
        for &i in order {
            acc += self.weights[i];
            out.push(acc);
        }
    }
}

/// Weighted cut of an undirected graph: `Σ_{(i,j)} w_ij |1_S(i) − 1_S(j)|`.
#[derive(Clone, Debug)]
pub struct GraphCut {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl GraphCut {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j, w) in &edges {
            assert!(w >= 0.0, "cut weights must be nonnegative");
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        Self { n, edges, adjacency }
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }
}

impl SetFunction for GraphCut {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, set: &SubsetMask) -> f64 {
        self.edges
            .iter()
            .filter(|(i, j, _)| set.contains(*i) != set.contains(*j))
            .map(|(_, _, w)| w)
            .sum()
    }

    fn chain_values(&self, base: &SubsetMask, order: &[usize], out: &mut Vec<f64>) {
        let mut set = base.clone();
        let mut acc = self.value(&set);
        out.push(acc);
        for &i in order {
            for &(j, w) in &self.adjacency[i] {
                if set.contains(j) {
                    acc -= w;
                } else {
                    acc += w;
                }
            }
            set.insert(i);
            out.push(acc);
        }
    }
}

/// `h(|S ∩ R|)` for a support `R`, stored as the values `h(0), .., h(|R|)`.
#[derive(Clone, Debug)]
pub struct CardinalityFunction {
    n: usize,
    support: SubsetMask,
    values: Vec<f64>,
}

impl CardinalityFunction {
    /// `h(k)` given for `k = 0..=n` on the full ground set of size `n`.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() - 1;
        Self {
            n,
            support: SubsetMask::full(n),
            values: values.to_vec(),
        }
    }

    /// `h` with `h(0) = 0` and marginal gains `g_k = h(k) − h(k−1)` on `support`.
    pub fn from_gains(n: usize, support: &[usize], gains: &[f64]) -> Self {
        assert_eq!(support.len(), gains.len());
        let mut values = Vec::with_capacity(gains.len() + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for g in gains {
            acc += g;
            values.push(acc);
        }
        Self {
            n,
            support: SubsetMask::from_indices(n, support.iter().copied()),
            values,
        }
    }
}

impl SetFunction for CardinalityFunction {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, set: &SubsetMask) -> f64 {
        self.values[set.intersection(&self.support).count()]
    }

    fn chain_values(&self, base: &SubsetMask, order: &[usize], out: &mut Vec<f64>) {
        let mut k = base.intersection(&self.support).count();
        out.push(self.values[k]);
        for &i in order {
            if self.support.contains(i) {
                k += 1;
            }
            out.push(self.values[k]);
        }
    }
}

/// An explicit table of values over a small support: entry `b` is the value of the
/// set whose members are `support[t]` for each set bit `t` of `b`.
#[derive(Clone, Debug)]
pub struct TableFunction {
    n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl TableFunction {
    pub fn new(n: usize, support: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), 1usize << support.len(), "table must have 2^k entries");
        assert!(support.windows(2).all(|w| w[0] < w[1]), "support must be sorted");
        Self { n, support, values }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn bits(&self, set: &SubsetMask) -> usize {
        self.support
            .iter()
            .enumerate()
            .filter(|(_, &i)| set.contains(i))
            .fold(0, |b, (t, _)| b | 1 << t)
    }
}

impl SetFunction for TableFunction {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, set: &SubsetMask) -> f64 {
        self.values[self.bits(set)]
    }

    fn chain_values(&self, base: &SubsetMask, order: &[usize], out: &mut Vec<f64>) {
        let mut b = self.bits(base);
        out.push(self.values[b]);
        for &i in order {
            if let Ok(t) = self.support.binary_search(&i) {
                b |= 1 << t;
            }
            out.push(self.values[b]);
        }
    }
}

/// Pointwise sum of set functions on a common ground set.
#[derive(Clone, Debug)]
pub struct SumFunction {
    n: usize,
    parts: Vec<Arc<dyn SetFunction>>,
}

impl SumFunction {
    pub fn new(n: usize, parts: Vec<Arc<dyn SetFunction>>) -> Self {
        assert!(parts.iter().all(|p| p.ground_size() == n));
        Self { n, parts }
    }

    pub fn parts(&self) -> &[Arc<dyn SetFunction>] {
        &self.parts
    }
}

impl SetFunction for SumFunction {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, set: &SubsetMask) -> f64 {
        self.parts.iter().map(|p| p.value(set)).sum()
    }

    fn chain_values(&self, base: &SubsetMask, order: &[usize], out: &mut Vec<f64>) {
        let start = out.len();
        out.resize(start + order.len() + 1, 0.0);
        let mut tmp = Vec::with_capacity(order.len() + 1);
        for p in &self.parts {
            tmp.clear();
            p.chain_values(base, order, &mut tmp);
            for (o, t) in out[start..].iter_mut().zip(&tmp) {
                *o += t;
            }
        }
    }
}

/// A set function defined by a closure; handy in tests.
pub struct FnSetFunction<F> {
    n: usize,
    f: F,
}

impl<F> FnSetFunction<F>
where
    F: Fn(&SubsetMask) -> f64 + Send + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> fmt::Debug for FnSetFunction<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnSetFunction(n={})", self.n)
    }
}

impl<F> SetFunction for FnSetFunction<F>
where
    F: Fn(&SubsetMask) -> f64 + Send + Sync,
{
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, set: &SubsetMask) -> f64 {
        (self.f)(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_chain(f: &dyn SetFunction, base: &[usize], order: &[usize]) {
        let n = f.ground_size();
        let base = SubsetMask::from_indices(n, base.iter().copied());
        let mut out = Vec::new();
        f.chain_values(&base, order, &mut out);
        let mut set = base.clone();
        assert!((out[0] - f.value(&set)).abs() < 1e-12);
        for (k, &i) in order.iter().enumerate() {
            set.insert(i);
            assert!((out[k + 1] - f.value(&set)).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_values_match_pointwise_values() {
        let cut = GraphCut::new(4, vec![(0, 1, 1.5), (1, 2, 0.5), (0, 3, 2.0)]);
        check_chain(&cut, &[2], &[0, 3, 1]);
        let card = CardinalityFunction::from_gains(5, &[1, 3, 4], &[2.0, 0.0, -2.0]);
        check_chain(&card, &[0, 3], &[4, 1, 2]);
        let table = TableFunction::new(4, vec![1, 2], vec![0.0, 1.0, 2.0, 2.5]);
        check_chain(&table, &[], &[3, 2, 0, 1]);
        let sum = SumFunction::new(4, vec![Arc::new(cut), Arc::new(table), Arc::new(Modular::new(vec![1.0, -1.0, 0.5, 0.0]))]);
        check_chain(&sum, &[1], &[0, 2, 3]);
    }

    #[test]
    fn cardinality_values() {
        let f = CardinalityFunction::from_gains(3, &[0, 1, 2], &[2.0, 0.0, -2.0]);
        assert_eq!(f.value(&SubsetMask::from_indices(3, [0])), 2.0);
        assert_eq!(f.value(&SubsetMask::from_indices(3, [0, 2])), 2.0);
        assert_eq!(f.value(&SubsetMask::full(3)), 0.0);
    }
}
