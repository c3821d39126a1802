//! Iterative solvers for the proximal problem `min_x f(x) + ½‖x‖²` of a
//! decomposable `F = Σ_j F_j`, and the nonsmooth baselines.

mod apg;
mod baselines;
mod bcd;
mod dr;

use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Result, SfmError};
use crate::functions::SumFunction;
use crate::lovasz::{certify, check_base_vector, Certificate};
use crate::mask::SubsetMask;
use crate::oracle::{SetFunction, SubmodularOracle};
use crate::prox::Block;

pub use apg::apg_solve;
pub use baselines::{dual_sgd, primal_sgd, primal_smooth, smoothed_value, DualStepRule};
pub use bcd::{bcd_solve, BcdVariant};
pub use dr::{dr_solve_product, dr_solve_r2, DouglasRachford2, DrPair};

/// `F = Σ_j F_j` together with the summed oracle used for certificates.
#[derive(Clone, Debug)]
pub struct DecomposableProblem {
    n: usize,
    blocks: Vec<Block>,
    total: SubmodularOracle,
}

impl DecomposableProblem {
    pub fn new(n: usize, blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(SfmError::InvalidBlock("a problem needs at least one block".into()));
        }
        if let Some(b) = blocks.iter().find(|b| b.n() != n) {
            return Err(SfmError::MaskLength {
                expected: n,
                got: b.n(),
            });
        }
        let parts: Vec<Arc<dyn SetFunction>> = blocks.iter().map(|b| Arc::new(b.clone()) as Arc<dyn SetFunction>).collect();
        let total = SubmodularOracle::new(Arc::new(SumFunction::new(n, parts)));
        Ok(Self { n, blocks, total })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn total(&self) -> &SubmodularOracle {
        &self.total
    }

    /// Block projections `Π_{B(F_j)}(z_j)` for all `j`, run in parallel.
    pub(crate) fn project_all(&self, z: &ProductPoint, out: &mut ProductPoint) {
        let n = self.n;
        out.data
            .par_chunks_mut(n)
            .zip(z.data.par_chunks(n))
            .zip(self.blocks.par_iter())
            .for_each(|((o, zj), b)| b.project_into(zj, o));
    }
}

/// A point `(v_1, …, v_r)` of the product space, stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPoint {
    r: usize,
    n: usize,
    data: Vec<f64>,
}

impl ProductPoint {
    pub fn zeros(r: usize, n: usize) -> Self {
        Self {
            r,
            n,
            data: vec![0.0; r * n],
        }
    }

    pub fn from_parts(parts: &[Vec<f64>]) -> Result<Self> {
        let r = parts.len();
        let n = parts.first().map_or(0, Vec::len);
        if let Some(p) = parts.iter().find(|p| p.len() != n) {
            return Err(SfmError::MaskLength {
                expected: n,
                got: p.len(),
            });
        }
        if parts.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SfmError::Config("product point parts must be finite".into()));
        }
        Ok(Self {
            r,
            n,
            data: parts.concat(),
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn part(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn part_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn parts(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1)).take(self.r)
    }

    pub(crate) fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `Σ_j v_j`, summed in part order.
    pub fn sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for p in self.parts() {
            for (a, b) in s.iter_mut().zip(p) {
                *a += b;
            }
        }
        s
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Subtracts the mean over parts from every part, so the parts sum to zero.
pub fn project_zero_sum(y: &ProductPoint) -> ProductPoint {
    let mut out = y.clone();
    project_zero_sum_in_place(&mut out);
    out
}

pub(crate) fn project_zero_sum_in_place(y: &mut ProductPoint) {
    if y.r == 0 {
        return;
    }
    let mean: Vec<f64> = y.sum().into_iter().map(|s| s / y.r as f64).collect();
    for j in 0..y.r {
        for (v, m) in y.part_mut(j).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
}

/// Solver selector; names match the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Dr,
    DrPara,
    Bcd,
    BcdPara,
    Apg,
    PrimalSgd,
    DualSgdPolyak,
    DualSgdDecay,
    PrimalSmooth,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Dr,
        Method::DrPara,
        Method::Bcd,
        Method::BcdPara,
        Method::Apg,
        Method::PrimalSgd,
        Method::DualSgdPolyak,
        Method::DualSgdDecay,
        Method::PrimalSmooth,
    ];

    /// Methods that solve the proximal problem to arbitrary accuracy.
    pub const CONVERGENT: [Method; 5] = [Method::Dr, Method::DrPara, Method::Bcd, Method::BcdPara, Method::Apg];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dr => "dr",
            Method::DrPara => "dr-para",
            Method::Bcd => "bcd",
            Method::BcdPara => "bcd-para",
            Method::Apg => "apg",
            Method::PrimalSgd => "primal-sgd",
            Method::DualSgdPolyak => "dual-sgd-p",
            Method::DualSgdDecay => "dual-sgd-f",
            Method::PrimalSmooth => "primal-smooth",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = SfmError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| SfmError::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub max_iter: usize,
    /// Stop once `discrete_gap ≤ tol_discrete · (1 + |bestF|)`.
    pub tol_discrete: Option<f64>,
    /// Stop once `smooth_gap ≤ tol_smooth`.
    pub tol_smooth: Option<f64>,
    /// Douglas–Rachford relaxation, in `(0, 2]`.
    pub gamma: f64,
    /// Constant `c` of the decaying steps `c/√t`.
    pub step_scale: f64,
    /// Smoothing parameter of `primal-smooth`.
    pub epsilon: f64,
    pub threads: usize,
    /// Recorded with the run; the solvers themselves draw no random numbers.
    pub seed: u64,
    /// Certificates (and trace rows) every this many iterations.
    pub certificate_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Dr,
            max_iter: 1000,
            tol_discrete: Some(1e-6),
            tol_smooth: None,
            gamma: 1.0,
            step_scale: 1.0,
            epsilon: 1e-2,
            threads: 1,
            seed: 0,
            certificate_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 2.0) {
            return Err(SfmError::Config(format!("gamma must lie in (0, 2], got {}", self.gamma)));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(SfmError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.step_scale > 0.0) || !self.step_scale.is_finite() {
            return Err(SfmError::Config(format!("step scale must be positive, got {}", self.step_scale)));
        }
        if self.threads == 0 {
            return Err(SfmError::Config("threads must be at least 1".into()));
        }
        if self.certificate_every == 0 {
            return Err(SfmError::Config("certificate interval must be at least 1".into()));
        }
        for t in [self.tol_discrete, self.tol_smooth].into_iter().flatten() {
            if !(t >= 0.0) {
                return Err(SfmError::Config(format!("tolerances must be nonnegative, got {t}")));
            }
        }
        Ok(())
    }
}

/// One row of a convergence trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub discrete_gap: f64,
    pub smooth_gap: f64,
    pub best_f: f64,
    pub wall_ns: u128,
}

pub const TRACE_HEADER: &str = "iter,discrete_gap,smooth_gap,best_f,wall_ns";

impl TraceRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{},{}",
            self.iter, self.discrete_gap, self.smooth_gap, self.best_f, self.wall_ns
        )
    }
}

#[derive(Clone, Debug)]
pub struct SolverTrace {
    pub method: Method,
    pub records: Vec<TraceRecord>,
    /// Certificate of the final iterate.
    pub certificate: Certificate,
    /// Best set over all iterations and its value.
    pub best_set: SubsetMask,
    pub best_f: f64,
    /// Final primal point.
    pub x: Vec<f64>,
    /// Final dual blocks, for the methods that maintain them.
    pub dual: Option<ProductPoint>,
    pub iterations: usize,
    pub converged: bool,
}

impl SolverTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRACE_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }

    /// Hash of the final primal iterate's bit patterns.
    pub fn iterate_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for v in &self.x {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

/// Keeps the running best set and lower bound, writes trace rows and decides
/// when to stop.
pub(crate) struct Monitor<'a> {
    problem: &'a DecomposableProblem,
    config: &'a SolverConfig,
    start: Instant,
    records: Vec<TraceRecord>,
    best_f: f64,
    best_set: SubsetMask,
    lower: f64,
    last: Option<Certificate>,
    converged: bool,
}

impl<'a> Monitor<'a> {
    pub(crate) fn new(problem: &'a DecomposableProblem, config: &'a SolverConfig) -> Self {
        Self {
            problem,
            config,
            start: Instant::now(),
            records: Vec::new(),
            best_f: f64::INFINITY,
            best_set: SubsetMask::empty(problem.n()),
            lower: f64::NEG_INFINITY,
            last: None,
            converged: false,
        }
    }

    /// Whether iteration `iter` (1-based) should be certified.
    pub(crate) fn due(&self, iter: usize) -> bool {
        iter % self.config.certificate_every == 0 || iter == self.config.max_iter
    }

    pub(crate) fn offer_set(&mut self, set: &SubsetMask, value: f64) {
        if value < self.best_f {
            self.best_f = value;
            self.best_set = set.clone();
        }
    }

    pub(crate) fn best_f(&self) -> f64 {
        self.best_f
    }

    pub(crate) fn best_set(&self) -> &SubsetMask {
        &self.best_set
    }

    pub(crate) fn offer_lower(&mut self, lower: f64) {
        self.lower = self.lower.max(lower);
    }

    /// Certifies `x` (with dual point `dual ∈ B(F)` when available), records a
    /// trace row and returns whether to stop.
    pub(crate) fn certify(&mut self, iter: usize, x: &[f64], dual: Option<&[f64]>) -> bool {
        let cert = certify(self.problem.total(), x, dual);
        let lower = cert.best_value - cert.discrete_gap;
        self.offer_lower(lower);
        self.offer_set(&cert.best_level_set, cert.best_value);
        let smooth = cert.smooth_gap;
        self.last = Some(cert);
        self.record(iter, smooth)
    }

    /// Records a row with the current best values and returns whether to stop.
    pub(crate) fn record(&mut self, iter: usize, smooth_gap: f64) -> bool {
        let discrete_gap = (self.best_f - self.lower).max(0.0);
        self.records.push(TraceRecord {
            iter,
            discrete_gap,
            smooth_gap,
            best_f: self.best_f,
            wall_ns: self.start.elapsed().as_nanos(),
        });
        let by_discrete = self
            .config
            .tol_discrete
            .is_some_and(|t| discrete_gap <= t * (1.0 + self.best_f.abs()));
        let by_smooth = self.config.tol_smooth.is_some_and(|t| smooth_gap <= t);
        self.converged = by_discrete || by_smooth;
        self.converged
    }

    pub(crate) fn finish(self, iterations: usize, x: Vec<f64>, dual: Option<ProductPoint>) -> SolverTrace {
        let certificate = match self.last {
            Some(c) if c.x == x => c,
            _ => {
                let d = dual.as_ref().map(ProductPoint::sum);
                certify(self.problem.total(), &x, d.as_deref())
            }
        };
        let (mut best_f, mut best_set) = (self.best_f, self.best_set);
        if certificate.best_value < best_f {
            best_f = certificate.best_value;
            best_set = certificate.best_level_set.clone();
        }
        SolverTrace {
            method: self.config.method,
            records: self.records,
            certificate,
            best_set,
            best_f,
            x,
            dual,
            iterations,
            converged: self.converged,
        }
    }
}

/// Runs the configured method on a dedicated pool of `config.threads` workers.
pub fn solve(problem: &DecomposableProblem, config: &SolverConfig) -> Result<SolverTrace> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| SfmError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match config.method {
        Method::Dr => dr_solve_r2(problem, config),
        Method::DrPara => dr_solve_product(problem, config),
        Method::Bcd => bcd_solve(problem, config, BcdVariant::Cyclic),
        Method::BcdPara => bcd_solve(problem, config, BcdVariant::ParallelProduct),
        Method::Apg => apg_solve(problem, config),
        Method::PrimalSgd => primal_sgd(problem, config),
        Method::DualSgdPolyak => dual_sgd(problem, config, DualStepRule::Polyak),
        Method::DualSgdDecay => dual_sgd(problem, config, DualStepRule::Decay),
        Method::PrimalSmooth => primal_smooth(problem, config),
    })
}

/// Primal recovery `x = −Σ_j y_j` and its certificate; `S₀ = {x ≥ 0}` and
/// `S₀₊ = {x > 0}` are reported as the maximal and minimal candidates.
pub fn recover_and_round(problem: &DecomposableProblem, y: &ProductPoint) -> Result<Certificate> {
    const TOL: f64 = 1e-6;
    if y.r() != problem.r() || y.n() != problem.n() {
        return Err(SfmError::MaskLength {
            expected: problem.r() * problem.n(),
            got: y.r() * y.n(),
        });
    }
    for (j, (b, part)) in problem.blocks().iter().zip(y.parts()).enumerate() {
        let oracle = SubmodularOracle::new(Arc::new(b.clone()));
        let infeasible = |msg: String| SfmError::Infeasible(format!("block {j}: {msg}"));
        if problem.n() <= 12 {
            check_base_vector(&oracle, part, TOL).map_err(|e| infeasible(e.to_string()))?;
        } else {
            let sum: f64 = part.iter().sum();
            if (sum - oracle.total()).abs() > TOL * (1.0 + sum.abs()) {
                return Err(infeasible(format!("y(V) = {sum} but F(V) = {}", oracle.total())));
            }
        }
    }
    let s = y.sum();
    let x: Vec<f64> = s.iter().map(|v| -v).collect();
    let mut cert = certify(problem.total(), &x, Some(&s));
    let nonneg = SubsetMask::from_indices(problem.n(), (0..problem.n()).filter(|&i| x[i] >= 0.0));
    let pos = SubsetMask::from_indices(problem.n(), (0..problem.n()).filter(|&i| x[i] > 0.0));
    let total = problem.total();
    for set in [nonneg.clone(), pos.clone()] {
        let v = total.value(&set);
        if v < cert.best_value {
            cert.best_value = v;
            cert.best_level_set = set;
        }
    }
    cert.maximal_set = nonneg;
    cert.minimal_set = pos;
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{ConcaveGroup, Path};

    #[test]
    fn zero_sum_examples() {
        let y = ProductPoint::from_parts(&[vec![1.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let p = project_zero_sum(&y);
        assert_eq!(p.part(0), &[0.5, 1.0]);
        assert_eq!(p.part(1), &[-0.5, -1.0]);
        assert_eq!(project_zero_sum(&p), p);

        let c = ProductPoint::from_parts(&[vec![2.0; 3], vec![2.0; 3], vec![2.0; 3]]).unwrap();
        assert!(project_zero_sum(&c).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        for bad in [
            SolverConfig {
                gamma: 2.5,
                ..Default::default()
            },
            SolverConfig {
                epsilon: 0.0,
                ..Default::default()
            },
            SolverConfig {
                threads: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn problem_total_is_the_block_sum() {
        let b1 = Block::chain(
            3,
            vec![Path {
                indices: vec![0, 1, 2],
                weights: vec![1.0, 2.0],
            }],
            vec![(0, -1.0)],
        )
        .unwrap();
        let b2 = Block::concave(3, vec![ConcaveGroup::region(vec![0, 2])], vec![(1, 0.5)]).unwrap();
        let p = DecomposableProblem::new(3, vec![b1.clone(), b2.clone()]).unwrap();
        for bits in 0..8 {
            let s = SubsetMask::from_bits(3, bits);
            assert!((p.total().value(&s) - b1.value(&s) - b2.value(&s)).abs() < 1e-15);
        }
        assert!(DecomposableProblem::new(3, vec![]).is_err());
        assert!(DecomposableProblem::new(4, vec![b1]).is_err());
    }

    #[test]
    fn recover_examples() {
        // F = edge cut, blocks at y = 0: x = 0, S₀ = V, S₀₊ = ∅
        let edge = Block::chain(
            2,
            vec![Path {
                indices: vec![0, 1],
                weights: vec![1.0],
            }],
            vec![],
        )
        .unwrap();
        let p = DecomposableProblem::new(2, vec![edge]).unwrap();
        let cert = recover_and_round(&p, &ProductPoint::zeros(1, 2)).unwrap();
        assert!(cert.maximal_set.is_full());
        assert!(cert.minimal_set.is_empty());
        assert_eq!(cert.best_value, 0.0);

        let a = [0.5, -1.0, 0.0];
        let p = DecomposableProblem::new(3, vec![Block::modular_dense(&a).unwrap()]).unwrap();
        let y = ProductPoint::from_parts(&[a.to_vec()]).unwrap();
        let cert = recover_and_round(&p, &y).unwrap();
        assert_eq!(cert.maximal_set.to_indices(), vec![1, 2]);

        let bad = ProductPoint::from_parts(&[vec![1.0, 1.0, 1.0]]).unwrap();
        assert!(recover_and_round(&p, &bad).is_err());
    }
}
