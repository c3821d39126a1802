//! Accelerated projected gradient on the smooth dual `min ½‖Σ_j y_j‖²`.

use rayon::prelude::*;

use crate::error::Result;
use crate::lovasz::norm_sq;

use super::{DecomposableProblem, Monitor, ProductPoint, SolverConfig, SolverTrace};

/// Forward point `v_j − (1/r) Σ_k v_k` of a gradient step with step `1/r`.
fn gradient_step(v: &ProductPoint, out: &mut ProductPoint) {
    let r = v.r() as f64;
    let s = v.sum();
    for j in 0..v.r() {
        for ((o, a), b) in out.part_mut(j).iter_mut().zip(v.part(j)).zip(&s) {
            *o = a - b / r;
        }
    }
}

/// FISTA with function-value restart: when the objective would increase, momentum
/// is reset and a plain projected gradient step is taken from the current point,
/// so the objective never increases.
pub fn apg_solve(problem: &DecomposableProblem, config: &SolverConfig) -> Result<SolverTrace> {
    let (r, n) = (problem.r(), problem.n());
    let mut y = ProductPoint::zeros(r, n);
    let mut prev = ProductPoint::zeros(r, n);
    let mut next = ProductPoint::zeros(r, n);
    let mut forward = ProductPoint::zeros(r, n);
    let mut extrapolated = ProductPoint::zeros(r, n);
    let objective = |p: &ProductPoint| 0.5 * norm_sq(&p.sum());
    let mut current = objective(&y);
    let mut t = 1.0f64;
    let mut monitor = Monitor::new(problem, config);
    let mut iterations = 0;
    for k in 1..=config.max_iter {
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        extrapolated
            .data_mut()
            .par_iter_mut()
            .zip(y.data().par_iter().zip(prev.data().par_iter()))
            .for_each(|(e, (a, b))| *e = a + beta * (a - b));
        gradient_step(&extrapolated, &mut forward);
        problem.project_all(&forward, &mut next);
        let mut value = objective(&next);
        if value > current {
            gradient_step(&y, &mut forward);
            problem.project_all(&forward, &mut next);
            value = objective(&next);
            t = 1.0;
        } else {
            t = t_next;
        }
        std::mem::swap(&mut prev, &mut y);
        std::mem::swap(&mut y, &mut next);
        current = value;
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
