//! Douglas–Rachford splitting on the dual best-approximation problems.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Result, SfmError};
use crate::functions::SumFunction;
use crate::lovasz::norm_sq;
use crate::mask::SubsetMask;
use crate::oracle::{SetFunction, SubmodularOracle, BRUTE_FORCE_CAP};
use crate::prox::{project_generic_small_support, Block};

use super::{project_zero_sum_in_place, DecomposableProblem, Monitor, ProductPoint, SolverConfig, SolverTrace};

/// A group of blocks whose sum is projected as one polytope.
#[derive(Debug)]
enum Side<'a> {
    Zero,
    /// Blocks with pairwise disjoint supports, projected independently.
    Disjoint(Vec<&'a Block>),
    /// Overlapping blocks on a small union support, projected exactly by
    /// divide-and-conquer over exhaustive minimization.
    Merged { support: Vec<usize>, oracle: SubmodularOracle },
}

impl<'a> Side<'a> {
    fn build(n: usize, blocks: Vec<&'a Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Ok(Side::Zero);
        }
        let masks: Vec<SubsetMask> = blocks.iter().map(|b| b.support_mask()).collect();
        let mut union = SubsetMask::empty(n);
        let mut disjoint = true;
        for m in &masks {
            disjoint &= union.is_disjoint(m);
            union = union.union(m);
        }
        if disjoint {
            return Ok(Side::Disjoint(blocks));
        }
        let support = union.to_indices();
        if support.len() > BRUTE_FORCE_CAP {
            return Err(SfmError::Unsupported {
                method: "dr",
                what: format!(
                    "{} blocks that cannot be split into two groups of disjoint supports, on a union support of {} > {BRUTE_FORCE_CAP} elements; use dr-para",
                    blocks.len() + 1,
                    support.len()
                ),
            });
        }
        let parts: Vec<Arc<dyn SetFunction>> = blocks.iter().map(|b| Arc::new((*b).clone()) as Arc<dyn SetFunction>).collect();
        let oracle = SubmodularOracle::new(Arc::new(SumFunction::new(n, parts))).restrict_contract(&union, &SubsetMask::empty(n))?;
        Ok(Side::Merged { support, oracle })
    }

    /// Writes the projection of `z` onto the summed base polytope into `out`.
    fn project_into(&self, z: &[f64], out: &mut [f64]) {
        match self {
            Side::Zero => out.fill(0.0),
            Side::Disjoint(blocks) => {
                for b in blocks {
                    b.project_into(z, out);
                }
            }
            Side::Merged { support, oracle } => {
                let local: Vec<f64> = support.iter().map(|&i| z[i]).collect();
                let y = project_generic_small_support(oracle, &local).expect("support within cap");
                for (&i, v) in support.iter().zip(y) {
                    out[i] = v;
                }
            }
        }
    }
}

/// Splits the blocks into two groups, each with pairwise disjoint supports when the
/// overlap graph allows it; otherwise the first block against all the others.
fn group_blocks(problem: &DecomposableProblem) -> (Vec<usize>, Vec<usize>) {
    let r = problem.r();
    if r <= 2 {
        return ((0..1).collect(), (1..r).collect());
    }
    let masks: Vec<SubsetMask> = problem.blocks().iter().map(|b| b.support_mask()).collect();
    let overlaps = |i: usize, j: usize| !masks[i].is_disjoint(&masks[j]);
    let mut color: Vec<Option<bool>> = vec![None; r];
    for s in 0..r {
        if color[s].is_some() {
            continue;
        }
        color[s] = Some(false);
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            let c = color[i].unwrap();
            for j in (0..r).filter(|&j| j != i && overlaps(i, j)) {
                match color[j] {
                    None => {
                        color[j] = Some(!c);
                        stack.push(j);
                    }
                    Some(cj) if cj == c => return ((0..1).collect(), (1..r).collect()),
                    Some(_) => {}
                }
            }
        }
    }
    let first = (0..r).filter(|&j| color[j] == Some(false)).collect();
    let second = (0..r).filter(|&j| color[j] == Some(true)).collect();
    (first, second)
}

/// A pair `(a, b)` with `a ∈ A = B(F₁)` and `b ∈ B = −B(F₂)`: dual blocks
/// `y₁ = a`, `y₂ = −b`, primal `x = b − a`.
#[derive(Clone, Debug, PartialEq)]
pub struct DrPair {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl DrPair {
    pub fn primal(&self) -> Vec<f64> {
        self.b.iter().zip(&self.a).map(|(b, a)| b - a).collect()
    }

    /// `y₁ + y₂ = a − b ∈ B(F)`.
    pub fn dual(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| a - b).collect()
    }

    pub fn distance_sq(&self) -> f64 {
        self.a.iter().zip(&self.b).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

/// Douglas–Rachford iteration `z ← z + γ(Π_A(2Π_B z − z) − Π_B z)` between
/// `A = B(F₁)` and `B = −B(F₂)`, starting at `z = 0`.
#[derive(Debug)]
pub struct DouglasRachford2<'a> {
    sides: [Side<'a>; 2],
    gamma: f64,
    z: Vec<f64>,
    neg: Vec<f64>,
    proj_b: Vec<f64>,
    a_reflect: Vec<f64>,
    a_direct: Vec<f64>,
}

impl<'a> DouglasRachford2<'a> {
    /// Groups the blocks of `problem` into two sides: `F₂ = 0` when `r = 1`, and for
    /// `r ≥ 3` two groups of disjoint supports (or an exactly projected merge).
    pub fn new(problem: &'a DecomposableProblem, gamma: f64) -> Result<Self> {
        let n = problem.n();
        let (g1, g2) = group_blocks(problem);
        let pick = |g: &[usize]| g.iter().map(|&j| &problem.blocks()[j]).collect::<Vec<_>>();
        let sides = [Side::build(n, pick(&g1))?, Side::build(n, pick(&g2))?];
        Ok(Self {
            sides,
            gamma,
            z: vec![0.0; n],
            neg: vec![0.0; n],
            proj_b: vec![0.0; n],
            a_reflect: vec![0.0; n],
            a_direct: vec![0.0; n],
        })
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// One iteration. Returns the better (closer) of the extracted pairs
    /// `(Π_A R_B z, Π_B z)` and `(Π_A Π_B z, Π_B z)`, computed at the incoming `z`.
    pub fn step(&mut self) -> DrPair {
        let n = self.z.len();
        // Π_B z = −Π_{B(F₂)}(−z)
        for (o, v) in self.neg.iter_mut().zip(&self.z) {
            *o = -v;
        }
        let mut y2 = vec![0.0; n];
        self.sides[1].project_into(&self.neg, &mut y2);
        for (p, v) in self.proj_b.iter_mut().zip(&y2) {
            *p = -v;
        }
        let reflected: Vec<f64> = self.proj_b.iter().zip(&self.z).map(|(x, z)| 2.0 * x - z).collect();
        let side_a = &self.sides[0];
        let (proj_b, a_reflect, a_direct) = (&self.proj_b, &mut self.a_reflect, &mut self.a_direct);
        rayon::join(
            || side_a.project_into(&reflected, a_reflect),
            || side_a.project_into(proj_b, a_direct),
        );
        for ((z, a), x) in self.z.iter_mut().zip(&self.a_reflect).zip(&self.proj_b) {
            *z += self.gamma * (a - x);
        }
        let reflect = norm_sq(&diff(&self.a_reflect, &self.proj_b));
        let direct = norm_sq(&diff(&self.a_direct, &self.proj_b));
        let a = if direct < reflect { &self.a_direct } else { &self.a_reflect };
        DrPair {
            a: a.clone(),
            b: self.proj_b.clone(),
        }
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

/// Douglas–Rachford on the two-polytope dual. Problems with `r ≠ 2` are regrouped
/// into two sides; see [`DouglasRachford2::new`].
pub fn dr_solve_r2(problem: &DecomposableProblem, config: &SolverConfig) -> Result<SolverTrace> {
    let mut dr = DouglasRachford2::new(problem, config.gamma)?;
    let mut monitor = Monitor::new(problem, config);
    let mut last: Option<DrPair> = None;
    let mut iterations = 0;
    for k in 1..=config.max_iter {
        let pair = dr.step();
        iterations = k;
        let stop = monitor.due(k) && monitor.certify(k, &pair.primal(), Some(&pair.dual()));
        last = Some(pair);
        if stop {
            break;
        }
    }
    let n = problem.n();
    let (x, dual) = match last {
        Some(p) => {
            let dual = if problem.r() == 2 {
                let y2: Vec<f64> = p.b.iter().map(|v| -v).collect();
                Some(ProductPoint::from_parts(&[p.a.clone(), y2])?)
            } else {
                None
            };
            (p.primal(), dual)
        }
        None => (vec![0.0; n], None),
    };
    Ok(monitor.finish(iterations, x, dual))
}

/// Douglas–Rachford in the product space between the zero-sum subspace and
/// `Π_j B(F_j)`, from `z = 0`; the iterate is read off as `y_j = Π_{B(F_j)}(z_j)`.
pub fn dr_solve_product(problem: &DecomposableProblem, config: &SolverConfig) -> Result<SolverTrace> {
    let (r, n) = (problem.r(), problem.n());
    let mut z = ProductPoint::zeros(r, n);
    let mut y = ProductPoint::zeros(r, n);
    let mut monitor = Monitor::new(problem, config);
    let mut iterations = 0;
    for k in 1..=config.max_iter {
        problem.project_all(&z, &mut y);
        iterations = k;
        if monitor.due(k) {
            let s = y.sum();
            let x: Vec<f64> = s.iter().map(|v| -v).collect();
            if monitor.certify(k, &x, Some(&s)) {
                break;
            }
        }
        let mut w = z.clone();
        w.data_mut()
            .par_iter_mut()
            .zip(y.data().par_iter())
            .for_each(|(w, y)| *w = 2.0 * y - *w);
        project_zero_sum_in_place(&mut w);
        let gamma = config.gamma;
        z.data_mut()
            .par_iter_mut()
            .zip(w.data().par_iter().zip(y.data().par_iter()))
            .for_each(|(z, (a, b))| *z += gamma * (a - b));
    }
    let x: Vec<f64> = y.sum().iter().map(|v| -v).collect();
    Ok(monitor.finish(iterations, x, Some(y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{ConcaveGroup, Path};
    use crate::solvers::Method;

    fn modular_pair(a: &[f64], b: &[f64]) -> DecomposableProblem {
        DecomposableProblem::new(a.len(), vec![Block::modular_dense(a).unwrap(), Block::modular_dense(b).unwrap()]).unwrap()
    }

    #[test]
    fn modular_blocks_extract_exactly() {
        let (a, b) = ([1.0, -2.0], [0.5, 0.25]);
        let p = modular_pair(&a, &b);
        let mut dr = DouglasRachford2::new(&p, 1.0).unwrap();
        let pair = dr.step();
        assert_eq!(pair.a, a.to_vec());
        assert_eq!(pair.b, vec![-0.5, -0.25]);
        assert_eq!(pair.primal(), vec![-1.5, 1.75]);
        assert_eq!(dr.z(), &[1.5, -1.75]);
    }

    #[test]
    fn z_diverges_for_separated_polytopes() {
        let p = modular_pair(&[1.0], &[2.0]);
        let mut dr = DouglasRachford2::new(&p, 1.0).unwrap();
        let mut prev = 0.0;
        for _ in 0..20 {
            let pair = dr.step();
            assert_eq!(pair.a, vec![1.0]);
            assert_eq!(pair.b, vec![-2.0]);
            let norm = dr.z()[0].abs();
            assert!(norm > prev);
            prev = norm;
        }
    }

    #[test]
    fn grid_with_zero_unaries_certifies_at_once() {
        // 2×2 grid: rows {0,1}, {2,3}; columns {0,2}, {1,3}
        let path = |i: usize, j: usize| Path {
            indices: vec![i, j],
            weights: vec![1.0],
        };
        let rows = Block::chain(4, vec![path(0, 1), path(2, 3)], vec![]).unwrap();
        let cols = Block::chain(4, vec![path(0, 2), path(1, 3)], vec![]).unwrap();
        let p = DecomposableProblem::new(4, vec![rows, cols]).unwrap();
        let trace = dr_solve_r2(&p, &SolverConfig::default()).unwrap();
        assert_eq!(trace.iterations, 1);
        assert_eq!(trace.records[0].discrete_gap, 0.0);
        assert!(trace.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn product_form_matches_two_block_form() {
        let b1 = Block::chain(
            4,
            vec![Path {
                indices: vec![0, 1, 2, 3],
                weights: vec![1.0, 0.5, 2.0],
            }],
            vec![(0, -1.5), (3, 0.75)],
        )
        .unwrap();
        let b2 = Block::concave(4, vec![ConcaveGroup::region(vec![1, 2, 3])], vec![(1, 0.25), (2, -2.0)]).unwrap();
        let p = DecomposableProblem::new(4, vec![b1, b2]).unwrap();
        let cfg = SolverConfig {
            max_iter: 5000,
            tol_discrete: None,
            tol_smooth: Some(1e-12),
            ..SolverConfig::with_method(Method::Dr)
        };
        let t1 = dr_solve_r2(&p, &cfg).unwrap();
        let t2 = dr_solve_product(&p, &cfg).unwrap();
        assert!(t1.converged && t2.converged);
        for (u, v) in t1.x.iter().zip(&t2.x) {
            assert!((u - v).abs() < 1e-6, "{:?} vs {:?}", t1.x, t2.x);
        }
    }

    #[test]
    fn all_modular_product_gives_negative_sum() {
        let blocks = vec![
            Block::modular_dense(&[1.0, 0.0]).unwrap(),
            Block::modular_dense(&[0.5, -1.0]).unwrap(),
            Block::modular_dense(&[-2.0, 0.25]).unwrap(),
        ];
        let p = DecomposableProblem::new(2, blocks).unwrap();
        let cfg = SolverConfig {
            tol_discrete: None,
            tol_smooth: Some(1e-12),
            ..SolverConfig::with_method(Method::DrPara)
        };
        let t = dr_solve_product(&p, &cfg).unwrap();
        assert!((t.x[0] - 0.5).abs() < 1e-9 && (t.x[1] - 0.75).abs() < 1e-9, "{:?}", t.x);
    }

    #[test]
    fn grouping_prefers_disjoint_sides() {
        let m = |idx: usize| Block::modular(4, vec![(idx, 1.0)]).unwrap();
        let overlap = Block::modular(4, vec![(0, 1.0), (1, 1.0)]).unwrap();
        let p = DecomposableProblem::new(4, vec![overlap, m(0), m(1), m(3)]).unwrap();
        let (g1, g2) = group_blocks(&p);
        assert_eq!(g1, vec![0, 3]);
        assert_eq!(g2, vec![1, 2]);
    }
}
