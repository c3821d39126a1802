//! Pool-adjacent-violators for least-squares isotonic regression on a chain.

/// Least-squares fit of `values` by a nondecreasing sequence.
pub fn isotonic_nondecreasing(values: &[f64]) -> Vec<f64> {
    let weights = vec![1.0; values.len()];
    expand(&pool(values, &weights, false), values.len())
}

/// Least-squares fit of `values` by a nonincreasing sequence.
pub fn isotonic_nonincreasing(values: &[f64]) -> Vec<f64> {
    let weights = vec![1.0; values.len()];
    expand(&pool(values, &weights, true), values.len())
}

/// Isotonic fit where the input is already grouped into blocks that must stay
/// constant. `sums[b]` is the sum of the block's values and `sizes[b]` its number of
/// elements; returns one fitted value per block.
pub fn isotonic_blocks(sums: &[f64], sizes: &[usize], nonincreasing: bool) -> Vec<f64> {
    assert_eq!(sums.len(), sizes.len());
    let means: Vec<f64> = sums.iter().zip(sizes).map(|(s, &c)| s / c as f64).collect();
    let weights: Vec<f64> = sizes.iter().map(|&c| c as f64).collect();
    expand(&pool(&means, &weights, nonincreasing), sums.len())
}

struct Pooled {
    sum: f64,
    weight: f64,
    inputs: usize,
}

impl Pooled {
    fn mean(&self) -> f64 {
        self.sum / self.weight
    }
}

fn pool(values: &[f64], weights: &[f64], nonincreasing: bool) -> Vec<Pooled> {
    let mut stack: Vec<Pooled> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        stack.push(Pooled {
            sum: v * w,
            weight: w,
            inputs: 1,
        });
        while stack.len() >= 2 {
            let top = &stack[stack.len() - 1];
            let prev = &stack[stack.len() - 2];
            let violated = if nonincreasing {
                prev.mean() < top.mean()
            } else {
                prev.mean() > top.mean()
            };
            if !violated {
                break;
            }
            let top = stack.pop().unwrap();
            let prev = stack.last_mut().unwrap();
            prev.sum += top.sum;
            prev.weight += top.weight;
            prev.inputs += top.inputs;
        }
    }
    stack
}

fn expand(blocks: &[Pooled], len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    for b in blocks {
        let m = b.mean();
        out.extend(std::iter::repeat_n(m, b.inputs));
    }
    out
}
