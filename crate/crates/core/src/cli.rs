//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 iteration budget exhausted
//! (`solve`) or disagreement with brute force (`verify`).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{Result, SfmError};
use crate::instances::{decompose_grid, gen_synthetic, ingest_pgm, InstanceFile, SynthParams};
use crate::oracle::{brute_force_sfm, BRUTE_FORCE_CAP};
use crate::solvers::{solve, Method, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "sfm", version, about = "Decomposable submodular minimization by projections and thresholding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one solver on an instance file.
    Solve(SolveArgs),
    /// Generate a synthetic grid instance.
    Gen(GenArgs),
    /// Build a grid instance from a binary PGM image.
    Ingest(IngestArgs),
    /// Compare every method against exhaustive minimization (n ≤ 20).
    Verify(VerifyArgs),
    /// Time the parallel methods across thread counts.
    Bench(BenchArgs),
}

#[derive(clap::Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// dr, dr-para, bcd, bcd-para, apg, primal-sgd, dual-sgd-p, dual-sgd-f, primal-smooth
    #[arg(long, default_value = "dr")]
    method: String,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Relative discrete-gap tolerance; negative disables it.
    #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
    tol_discrete: f64,
    /// Absolute smooth-gap tolerance.
    #[arg(long)]
    tol_smooth: Option<f64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-2)]
    epsilon: f64,
    /// Constant `c` of decaying `c/√t` steps.
    #[arg(long, default_value_t = 1.0)]
    step_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Certify every k-th iteration.
    #[arg(long, default_value_t = 1)]
    cert_every: usize,
    /// CSV trace output.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid shape as HxW.
    #[arg(long, default_value = "16x16")]
    grid: String,
    #[arg(long, default_value_t = 0)]
    regions: usize,
    #[arg(long, default_value_t = 1.0)]
    unary_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    coupling_scale: f64,
    #[arg(long, default_value_t = 4.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    region_scale: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    pgm: PathBuf,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    bias: f64,
    #[arg(long, default_value_t = 10.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    coupling: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
}

#[derive(clap::Args, Debug)]
struct BenchArgs {
    /// Instance file; without it a synthetic grid is generated.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value = "200x200")]
    grid: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated thread counts.
    #[arg(long, default_value = "1,2,4")]
    threads: String,
    /// Comma-separated methods.
    #[arg(long, default_value = "dr-para,bcd-para")]
    methods: String,
    #[arg(long, default_value_t = 50)]
    iters: usize,
}

pub fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let bad = || SfmError::Config(format!("bad grid `{s}`, expected HxW"));
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (h, w): (usize, usize) = (h.parse().map_err(|_| bad())?, w.parse().map_err(|_| bad())?);
    if h == 0 || w == 0 {
        return Err(bad());
    }
    Ok((h, w))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| SfmError::Config(format!("bad {what} `{t}`"))))
        .collect()
}

/// Runs the CLI with explicit arguments (the first is the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Ingest(a) => cmd_ingest(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let method: Method = a.method.parse()?;
    let file = InstanceFile::read(&a.instance)?;
    let problem = file.to_problem()?;
    let config = SolverConfig {
        method,
        max_iter: a.max_iter,
        tol_discrete: (a.tol_discrete >= 0.0).then_some(a.tol_discrete),
        tol_smooth: a.tol_smooth,
        gamma: a.gamma,
        step_scale: a.step_scale,
        epsilon: a.epsilon,
        threads: a.threads,
        seed: a.seed,
        certificate_every: a.cert_every,
    };
    let trace = solve(&problem, &config)?;
    if let Some(path) = &a.trace {
        fs::write(path, trace.to_csv())?;
    }
    let last = trace.records.last();
    writeln!(out, "method {method}")?;
    writeln!(out, "iterations {}", trace.iterations)?;
    writeln!(out, "converged {}", trace.converged)?;
    writeln!(out, "set {:?}", trace.best_set.to_indices())?;
    writeln!(out, "value {}", trace.best_f)?;
    writeln!(out, "discrete_gap {:e}", last.map_or(f64::NAN, |r| r.discrete_gap))?;
    writeln!(out, "smooth_gap {:e}", last.map_or(f64::NAN, |r| r.smooth_gap))?;
    writeln!(out, "minimal {:?}", trace.certificate.minimal_set.to_indices())?;
    writeln!(out, "maximal {:?}", trace.certificate.maximal_set.to_indices())?;
    Ok(if trace.converged { EXIT_OK } else { EXIT_BUDGET })
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    let (h, w) = parse_dims(&a.grid)?;
    let params = SynthParams {
        seed: a.seed,
        h,
        w,
        unary_scale: a.unary_scale,
        coupling_scale: a.coupling_scale,
        beta: a.beta,
        regions: a.regions,
        region_scale: a.region_scale,
    };
    let (_, file) = gen_synthetic(&params)?;
    file.write(&a.out)?;
    writeln!(out, "wrote {} (n = {}, r = {})", a.out.display(), file.n, file.blocks.len())?;
    Ok(EXIT_OK)
}

fn cmd_ingest(a: &IngestArgs, out: &mut dyn Write) -> Result<i32> {
    let grid = ingest_pgm(&a.pgm, a.bias, a.beta, a.coupling)?;
    let problem = decompose_grid(&grid)?;
    let file = InstanceFile {
        n: problem.n(),
        blocks: problem.blocks().to_vec(),
        grid: Some((grid.h, grid.w)),
    };
    file.write(&a.out)?;
    writeln!(out, "wrote {} (n = {}, r = 2)", a.out.display(), file.n)?;
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let file = InstanceFile::read(&a.instance)?;
    let problem = file.to_problem()?;
    let truth = brute_force_sfm(problem.total(), BRUTE_FORCE_CAP)?;
    let tol = 1e-9 * (1.0 + truth.min_value.abs());
    writeln!(out, "brute_force value {} minimal {:?} maximal {:?}", truth.min_value, truth.minimal.to_indices(), truth.maximal.to_indices())?;
    writeln!(out, "method,best_f,value_match,minimal_match,maximal_match,iterations")?;
    let mut all = true;
    let mut reference: Option<Vec<f64>> = None;
    let mut discrepancy = 0.0f64;
    for method in Method::ALL {
        let convergent = Method::CONVERGENT.contains(&method);
        let config = SolverConfig {
            method,
            max_iter: if convergent { a.max_iter } else { a.max_iter.min(5000) },
            tol_discrete: if convergent { None } else { Some(0.0) },
            tol_smooth: convergent.then_some(1e-10),
            ..SolverConfig::default()
        };
        let trace = match solve(&problem, &config) {
            Ok(t) => t,
            Err(e) => {
                writeln!(out, "{method},error: {e},false,false,false,0")?;
                all = false;
                continue;
            }
        };
        let value_match = (trace.best_f - truth.min_value).abs() <= tol;
        let (min_match, max_match) = if convergent {
            (trace.certificate.minimal_set == truth.minimal, trace.certificate.maximal_set == truth.maximal)
        } else {
            (true, true)
        };
        if convergent {
            match &reference {
                None => reference = Some(trace.x.clone()),
                Some(r) => {
                    for (u, v) in r.iter().zip(&trace.x) {
                        discrepancy = discrepancy.max((u - v).abs());
                    }
                }
            }
        }
        all &= value_match && min_match && max_match;
        let extremes = |b: bool| if convergent { b.to_string() } else { "n/a".to_string() };
        writeln!(
            out,
            "{method},{},{value_match},{},{},{}",
            trace.best_f,
            extremes(min_match),
            extremes(max_match),
            trace.iterations
        )?;
    }
    writeln!(out, "max_primal_discrepancy {discrepancy:e}")?;
    writeln!(out, "{}", if all { "all methods agree" } else { "DISAGREEMENT" })?;
    Ok(if all { EXIT_OK } else { EXIT_BUDGET })
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let problem = match &a.instance {
        Some(p) => InstanceFile::read(p)?.to_problem()?,
        None => {
            let (h, w) = parse_dims(&a.grid)?;
            let (_, file) = gen_synthetic(&SynthParams {
                seed: a.seed,
                h,
                w,
                ..Default::default()
            })?;
            file.to_problem()?
        }
    };
    let threads: Vec<usize> = parse_list(&a.threads, "thread count")?;
    let methods: Vec<Method> = a.methods.split(',').map(|m| m.trim().parse()).collect::<Result<_>>()?;
    writeln!(out, "threads,method,wall_ns,iters,hash")?;
    for &method in &methods {
        for &t in &threads {
            let config = SolverConfig {
                method,
                max_iter: a.iters,
                tol_discrete: None,
                tol_smooth: None,
                threads: t,
                certificate_every: a.iters.max(1),
                ..SolverConfig::default()
            };
            let start = Instant::now();
            let trace = solve(&problem, &config)?;
            let wall = start.elapsed().as_nanos();
            writeln!(out, "{t},{method},{wall},{},{:016x}", trace.iterations, trace.iterate_hash())?;
        }
    }
    Ok(EXIT_OK)
}
