//! Exact weighted 1-D total-variation prox by dynamic programming over the
//! derivative of the forward messages (linear time).

use std::collections::VecDeque;

use crate::error::{Result, SfmError};

/// A breakpoint of a piecewise-linear derivative: crossing `x` from left to right
/// adds `slope` and `intercept` to the active affine piece.
#[derive(Clone, Copy, Debug)]
struct Knot {
    x: f64,
    slope: f64,
    intercept: f64,
}

/// `argmin_x ½‖x − z‖² + Σ_k w_k |x_{k+1} − x_k|`, with `weights.len() == z.len() − 1`.
pub fn prox_tv1d(z: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    let m = z.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    if weights.len() + 1 != m {
        return Err(SfmError::InvalidBlock(format!(
            "chain of {m} elements needs {} weights, got {}",
            m - 1,
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(SfmError::InvalidBlock(format!("negative chain weight {w}")));
    }
    Ok(prox_tv1d_unchecked(z, weights))
}

pub(crate) fn prox_tv1d_unchecked(z: &[f64], weights: &[f64]) -> Vec<f64> {
    let m = z.len();
    let mut knots: VecDeque<Knot> = VecDeque::with_capacity(m);
    // Affine pieces of the current derivative left of the first knot and right of
    // the last one.
    let (mut left_a, mut left_b) = (0.0f64, 0.0f64);
    let (mut right_a, mut right_b) = (0.0f64, 0.0f64);
    let mut lower = vec![0.0; m.saturating_sub(1)];
    let mut upper = vec![0.0; m.saturating_sub(1)];

    for k in 0..m {
        // Add the data term x − z_k.
        left_a += 1.0;
        left_b -= z[k];
        right_a += 1.0;
        right_b -= z[k];
        if k + 1 == m {
            break;
        }
        let w = weights[k];

        // Leftmost point where the derivative reaches −w.
        while let Some(front) = knots.front() {
            if left_a * front.x + left_b >= -w {
                break;
            }
            left_a += front.slope;
            left_b += front.intercept;
            knots.pop_front();
        }
        let lo = (-w - left_b) / left_a;
        knots.push_front(Knot {
            x: lo,
            slope: left_a,
            intercept: left_b + w,
        });
        left_a = 0.0;
        left_b = -w;

        // Rightmost point where the derivative reaches +w.
        while let Some(back) = knots.back() {
            if right_a * back.x + right_b <= w {
                break;
            }
            right_a -= back.slope;
            right_b -= back.intercept;
            knots.pop_back();
        }
        let hi = (w - right_b) / right_a;
        knots.push_back(Knot {
            x: hi,
            slope: -right_a,
            intercept: w - right_b,
        });
        right_a = 0.0;
        right_b = w;

        lower[k] = lo;
        upper[k] = hi;
    }

    // Zero of the last derivative.
    while let Some(front) = knots.front() {
        if left_a * front.x + left_b >= 0.0 {
            break;
        }
        left_a += front.slope;
        left_b += front.intercept;
        knots.pop_front();
    }
    let mut x = vec![0.0; m];
    x[m - 1] = -left_b / left_a;
    for k in (0..m - 1).rev() {
        x[k] = x[k + 1].clamp(lower[k], upper[k].max(lower[k]));
    }
    x
}
