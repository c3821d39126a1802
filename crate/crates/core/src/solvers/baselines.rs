//! Nonsmooth baselines: projected subgradient on the Lovász extension, dual
//! supergradient ascent, and projected gradient on a smoothed primal.

use rayon::prelude::*;

use crate::error::{Result, SfmError};
use crate::lovasz::{descending_order, greedy_vertex, smooth_gap_certificate};
use crate::mask::SubsetMask;

use super::{project_zero_sum_in_place, DecomposableProblem, Monitor, ProductPoint, SolverConfig, SolverTrace};

/// Step rule of the dual supergradient method.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualStepRule {
    /// `(bestF − dual value)/‖d‖²`.
    Polyak,
    /// `c/√t`.
    Decay,
}

fn clip_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Projected subgradient on `f` over `[0,1]^n`, from `x = ½·1`, with steps `c/√t`.
pub fn primal_sgd(problem: &DecomposableProblem, config: &SolverConfig) -> Result<SolverTrace> {
    let n = problem.n();
    let total = problem.total();
    let mut x = vec![0.5; n];
    let mut monitor = Monitor::new(problem, config);
    let mut iterations = 0;
    for t in 1..=config.max_iter {
        iterations = t;
        if monitor.due(t) && monitor.certify(t, &x, None) {
            break;
        }
        let g = greedy_vertex(total, &descending_order(&x));
        let step = config.step_scale / (t as f64).sqrt();
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi = clip_unit(*xi - step * gi);
        }
    }
    Ok(monitor.finish(iterations, x, None))
}

/// `x_i = ½` on `set`, `−½` elsewhere: a point whose only nontrivial level set is `set`.
fn centered_indicator(set: &SubsetMask) -> Vec<f64> {
    (0..set.len()).map(|i| if set.contains(i) { 0.5 } else { -0.5 }).collect()
}

/// Supergradient ascent on `Σ_j min_S F_j(S) − λ_j(S)` over zero-sum `λ`, from
/// `λ = 0`. Each block is minimized exactly by its discrete routine. Trace rows
/// report the smooth gap at the centered indicator of the incumbent set.
pub fn dual_sgd(problem: &DecomposableProblem, config: &SolverConfig, rule: DualStepRule) -> Result<SolverTrace> {
    let (r, n) = (problem.r(), problem.n());
    let total = problem.total();
    let mut lambda = ProductPoint::zeros(r, n);
    let mut monitor = Monitor::new(problem, config);
    let mut iterations = 0;
    for t in 1..=config.max_iter {
        iterations = t;
        let mins: Vec<(f64, SubsetMask)> = problem
            .blocks()
            .par_iter()
            .enumerate()
            .map(|(j, b)| b.minimize_shifted(lambda.part(j)))
            .collect();
        let dual_value: f64 = mins.iter().map(|m| m.0).sum();
        monitor.offer_lower(dual_value);
        for (_, s) in &mins {
            monitor.offer_set(s, total.value(s));
        }
        let mut d = ProductPoint::zeros(r, n);
        for (j, (_, s)) in mins.iter().enumerate() {
            for i in s.iter() {
                d.part_mut(j)[i] = -1.0;
            }
        }
        project_zero_sum_in_place(&mut d);
        let d_sq = d.norm_sq();
        let gap = monitor.best_f() - dual_value;
        let stationary = d_sq == 0.0 || gap <= 0.0;
        if monitor.due(t) || stationary {
            let smooth = smooth_gap_certificate(total, &centered_indicator(monitor.best_set())).gap;
            if monitor.record(t, smooth) || stationary {
                break;
            }
        }
        let step = match rule {
            DualStepRule::Polyak => gap / d_sq,
            DualStepRule::Decay => config.step_scale / (t as f64).sqrt(),
        };
        for (l, g) in lambda.data_mut().iter_mut().zip(d.data()) {
            *l += step * g;
        }
    }
    let x = centered_indicator(monitor.best_set());
    Ok(monitor.finish(iterations, x, None))
}

/// `Σ_j max_{y∈B(F_j)} yᵀx − (ε/2)‖y‖²`, attained at `y_j = Π_{B(F_j)}(x/ε)`.
pub fn smoothed_value(problem: &DecomposableProblem, x: &[f64], epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(SfmError::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let scaled: Vec<f64> = x.iter().map(|v| v / epsilon).collect();
    Ok(problem
        .blocks()
        .iter()
        .map(|b| {
            let y = b.project(&scaled);
            y.iter().zip(x).map(|(a, b)| a * b - 0.5 * epsilon * a * a).sum::<f64>()
        })
        .sum())
}

/// Projected gradient with step `ε/r` on the smoothed primal over `[0,1]^n`, from
/// `x = ½·1`; the gradient `Σ_j Π_{B(F_j)}(x/ε)` lies in `B(F)` and serves as the
/// dual point of the certificate.
pub fn primal_smooth(problem: &DecomposableProblem, config: &SolverConfig) -> Result<SolverTrace> {
    let eps = config.epsilon;
    if !(eps > 0.0) {
        return Err(SfmError::Config(format!("epsilon must be positive, got {eps}")));
    }
    let (r, n) = (problem.r(), problem.n());
    let mut x = vec![0.5; n];
    let mut scaled = ProductPoint::zeros(r, n);
    let mut grads = ProductPoint::zeros(r, n);
    let mut monitor = Monitor::new(problem, config);
    let mut iterations = 0;
    for t in 1..=config.max_iter {
        iterations = t;
        for j in 0..r {
            for (s, v) in scaled.part_mut(j).iter_mut().zip(&x) {
                *s = v / eps;
            }
        }
        problem.project_all(&scaled, &mut grads);
        let g = grads.sum();
        if monitor.due(t) && monitor.certify(t, &x, Some(&g)) {
            break;
        }
        let step = eps / r as f64;
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi = clip_unit(*xi - step * gi);
        }
    }
    Ok(monitor.finish(iterations, x, None))
}
