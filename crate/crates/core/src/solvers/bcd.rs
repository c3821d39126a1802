//! Block coordinate descent on the dual `min ½‖Σ_j y_j‖²`, `y_j ∈ B(F_j)`.

use rayon::prelude::*;

use crate::error::Result;

use super::{project_zero_sum_in_place, DecomposableProblem, Monitor, ProductPoint, SolverConfig, SolverTrace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcdVariant {
    /// Round-robin exact minimization `y_j ← Π_{B(F_j)}(−Σ_{k≠j} y_k)`.
    Cyclic,
    /// Alternating projections between the zero-sum subspace and `Π_j B(F_j)`.
    ParallelProduct,
}

pub fn bcd_solve(problem: &DecomposableProblem, config: &SolverConfig, variant: BcdVariant) -> Result<SolverTrace> {
    let (r, n) = (problem.r(), problem.n());
    let mut y = ProductPoint::zeros(r, n);
    let mut monitor = Monitor::new(problem, config);
    let mut iterations = 0;
    let mut target = vec![0.0; n];
    let mut w = ProductPoint::zeros(r, n);
    for k in 1..=config.max_iter {
        match variant {
            BcdVariant::Cyclic => {
                let mut s = y.sum();
                for j in 0..r {
                    let part = y.part(j);
                    for ((t, s), p) in target.iter_mut().zip(&s).zip(part) {
                        *t = -(s - p);
                    }
                    let old = part.to_vec();
                    problem.blocks()[j].project_into(&target, y.part_mut(j));
                    for ((s, new), old) in s.iter_mut().zip(y.part(j)).zip(&old) {
                        *s += new - old;
                    }
                }
            }
            BcdVariant::ParallelProduct => {
                w.data_mut().par_iter_mut().zip(y.data().par_iter()).for_each(|(w, y)| *w = *y);
                project_zero_sum_in_place(&mut w);
                problem.project_all(&w, &mut y);
            }
        }
        iterations = k;
        if monitor.due(k) {
            let s = y.sum();
            let x: Vec<f64> = s.iter().map(|v| -v).collect();
            if monitor.certify(k, &x, Some(&s)) {
                break;
            }
        }
    }
    let x: Vec<f64> = y.sum().iter().map(|v| -v).collect();
    Ok(monitor.finish(iterations, x, Some(y)))
}
