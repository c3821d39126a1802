//! Projection onto the base polytope of a concave function of cardinality.

use crate::error::{Result, SfmError};
use crate::lovasz::descending_order;
use crate::pava::isotonic_nonincreasing;

/// Projects `z` onto `B(F)` for `F(S) = h(|S|)` with `h(0) = 0` and marginal gains
/// `gains[k] = h(k+1) − h(k)`, which must be nonincreasing.
///
/// Along the descending order `σ` of `z`, the prox `x = z − y` is the nonincreasing
/// isotonic fit of `z_σ − g`.
pub fn project_concave_cardinality(gains: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    if gains.len() != z.len() {
        return Err(SfmError::InvalidBlock(format!(
            "{} gains for {} elements",
            gains.len(),
            z.len()
        )));
    }
    if let Some(k) = gains.windows(2).position(|w| w[1] > w[0]) {
        return Err(SfmError::InvalidBlock(format!(
            "gains must be nonincreasing (g[{}] = {} < g[{}] = {})",
            k,
            gains[k],
            k + 1,
            gains[k + 1]
        )));
    }
    Ok(project_concave_unchecked(gains, z))
}

pub(crate) fn project_concave_unchecked(gains: &[f64], z: &[f64]) -> Vec<f64> {
    let order = descending_order(z);
    let shifted: Vec<f64> = order.iter().zip(gains).map(|(&i, g)| z[i] - g).collect();
    let prox = isotonic_nonincreasing(&shifted);
    let mut y = vec![0.0; z.len()];
    for (k, &i) in order.iter().enumerate() {
        y[i] = z[i] - prox[k];
    }
    y
}
