//! Command-line experiment driver: load or generate a system, set up the
//! preconditioner, solve, and write a key-value report.

use crate::error::{Error, Result};
use crate::harness::generators::{generate, ProblemSpec};
use crate::harness::theory::{check_bound, BoundCheck};
use crate::krylov::{gmres_right_unchecked, pcg_monitored, SolveReport, DENSE_CONDITION_LIMIT};
use crate::mmio::{read_matrix_market, read_vector, write_matrix_market};
use crate::partition::Partition;
use crate::precond::{CoarseKind, Combine, OneLevel, SchwarzConfig, SchwarzPreconditioner};
use crate::sparse::SparseMat;
use clap::{Parser, ValueEnum};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    #[value(name = "poisson2d")]
    Poisson2d,
    #[value(name = "poisson3d")]
    Poisson3d,
    #[value(name = "hetero2d")]
    Hetero2d,
    #[value(name = "advection2d")]
    Advection2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Cg,
    Gmres,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Cg => "cg",
            Solver::Gmres => "gmres",
        }
    }
}

/// Two-level overlapping Schwarz solver with spectral coarse spaces.
#[derive(Debug, Clone, Parser)]
#[command(name = "spectral-schwarz", version)]
pub struct Cli {
    /// System matrix in Matrix Market format.
    #[arg(long, conflicts_with = "kind")]
    pub matrix: Option<PathBuf>,
    /// Right-hand side (Matrix Market array or one value per line); defaults to A·1.
    #[arg(long, requires = "matrix", conflicts_with = "kind")]
    pub rhs: Option<PathBuf>,
    /// Generated test problem.
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// Interior grid points per direction.
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    /// Number of subdomains.
    #[arg(long = "N", default_value_t = 4)]
    pub n_subdomains: usize,
    /// Overlap layers.
    #[arg(long, default_value_t = 2)]
    pub delta: usize,
    /// Harmonic mode threshold.
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Partition-of-unity eigenproblem threshold (skipped when absent).
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, value_enum, default_value_t = CoarseKind::Auto)]
    pub coarse: CoarseKind,
    /// Defaults to asm with CG and ras with GMRES.
    #[arg(long = "one-level", value_enum)]
    pub one_level: Option<OneLevel>,
    /// Defaults to additive with CG and deflated with GMRES.
    #[arg(long, value_enum)]
    pub combine: Option<Combine>,
    /// Defaults to cg for symmetric matrices and gmres otherwise.
    #[arg(long, value_enum)]
    pub solver: Option<Solver>,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub maxit: usize,
    /// Report file; the report goes to standard output when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Seed of the channel layout for hetero2d.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Coefficient contrast for hetero2d.
    #[arg(long, default_value_t = 1e4)]
    pub contrast: f64,
    /// Diffusion coefficient for advection2d.
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    /// Advection velocity, x component.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub vx: f64,
    /// Advection velocity, y component.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub vy: f64,
    /// Nonoverlapping partition: one subdomain index per line.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Residual history file (iteration, relative residual).
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Writes the coarse basis R_0^T in Matrix Market format.
    #[arg(long = "export-coarse")]
    pub export_coarse: Option<PathBuf>,
}

/// Everything one run produced.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub solve: SolveReport,
    pub bound: Option<BoundCheck>,
    /// `‖x - 1‖_∞` when the right-hand side was manufactured.
    pub solution_error: Option<f64>,
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn problem_spec(cli: &Cli, kind: Kind) -> ProblemSpec {
    let m = cli.m;
    match kind {
        Kind::Poisson2d => ProblemSpec::Poisson2d { m },
        Kind::Poisson3d => ProblemSpec::Poisson3d { m },
        Kind::Hetero2d => ProblemSpec::Hetero2d { m, contrast: cli.contrast, seed: cli.seed },
        Kind::Advection2d => ProblemSpec::Advection2d { m, eps: cli.eps, velocity: (cli.vx, cli.vy) },
    }
}

/// Loads or generates `(A, b, manufactured)` and writes the problem lines.
fn load_problem(cli: &Cli, out: &mut String) -> Result<(SparseMat, Vec<f64>, bool)> {
    if let Some(path) = &cli.matrix {
        let a = read_matrix_market(&read(path)?)?;
        let _ = writeln!(out, "problem.matrix={}", path.display());
        let (b, manufactured) = match &cli.rhs {
            Some(p) => {
                let _ = writeln!(out, "problem.rhs={}", p.display());
                (read_vector(&read(p)?)?, false)
            }
            None => (a.spmv(&vec![1.0; a.ncols()])?, true),
        };
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for a matrix with {} rows",
                b.len(),
                a.nrows()
            )));
        }
        return Ok((a, b, manufactured));
    }
    let kind = cli
        .kind
        .ok_or_else(|| Error::InvalidArgument("either --matrix or --kind is required".into()))?;
    let spec = problem_spec(cli, kind);
    let (a, b) = generate(&spec)?;
    let _ = writeln!(out, "problem.kind={}", kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default());
    let _ = writeln!(out, "problem.m={}", cli.m);
    match spec {
        ProblemSpec::Hetero2d { contrast, seed, .. } => {
            let _ = writeln!(out, "problem.contrast={contrast:e}");
            let _ = writeln!(out, "problem.seed={seed}");
        }
        ProblemSpec::Advection2d { eps, velocity, .. } => {
            let _ = writeln!(out, "problem.eps={eps:e}");
            let _ = writeln!(out, "problem.velocity={},{}", velocity.0, velocity.1);
        }
        _ => {}
    }
    Ok((a, b, true))
}

/// Runs one experiment. Non-convergence is reported in `Outcome::solve`,
/// not as an error.
pub fn run_experiment(cli: &Cli) -> Result<Outcome> {
    let mut out = String::new();
    let (a, b, manufactured) = load_problem(cli, &mut out)?;
    let symmetric = a.is_symmetric();
    let _ = writeln!(out, "problem.n={}", a.nrows());
    let _ = writeln!(out, "problem.nnz={}", a.nnz());
    let _ = writeln!(out, "problem.symmetric={symmetric}");

    let solver = cli.solver.unwrap_or(if symmetric { Solver::Cg } else { Solver::Gmres });
    let cfg = SchwarzConfig {
        n_subdomains: cli.n_subdomains,
        delta: cli.delta,
        tau: cli.tau,
        nu: cli.nu,
        coarse: cli.coarse,
        one_level: cli.one_level.unwrap_or(match solver {
            Solver::Cg => OneLevel::Asm,
            Solver::Gmres => OneLevel::Ras,
        }),
        combine: cli.combine.unwrap_or(match solver {
            Solver::Cg => Combine::Additive,
            Solver::Gmres => Combine::Deflated,
        }),
        ..SchwarzConfig::default()
    };
    let partition = cli.partition.as_ref().map(|p| read(p).and_then(|t| Partition::parse(&t))).transpose()?;
    let pre = SchwarzPreconditioner::setup_with_partition(&a, &cfg, partition)?;
    let _ = write!(out, "{}", pre.report());

    if let Some(path) = &cli.export_coarse {
        let r0t = pre.coarse().map_or_else(|| SparseMat::from_triplets(a.nrows(), 0, Vec::new()), |c| Ok(c.r0t().clone()))?;
        write(path, &write_matrix_market(&r0t))?;
    }

    let (x, solve) = match solver {
        Solver::Cg => pcg_monitored(&a, &pre, &b, cli.tol, cli.maxit, &mut |_, _| {})?,
        Solver::Gmres => gmres_right_unchecked(&a, &pre, &b, cli.tol, cli.maxit)?,
    };
    let _ = writeln!(out, "solve.solver={}", solver.name());
    let _ = writeln!(out, "solve.tol={:e}", cli.tol);
    let _ = writeln!(out, "solve.maxit={}", cli.maxit);
    let _ = writeln!(out, "solve.iterations={}", solve.iterations);
    let _ = writeln!(out, "solve.converged={}", solve.converged);
    let _ = writeln!(out, "solve.final_residual={:.6e}", solve.final_residual());
    if let Some(k) = solve.condition_estimate {
        let _ = writeln!(out, "solve.condition_estimate={k:.6e}");
    }
    let _ = writeln!(out, "solve.wall_time_s={:.6}", solve.wall_time.as_secs_f64());
    let solution_error = manufactured.then(|| x.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max));
    if let Some(e) = solution_error {
        let _ = writeln!(out, "solve.error_inf={e:.6e}");
    }
    if let Some(path) = &cli.history {
        write(path, &solve.history())?;
    }

    let bound = if !symmetric {
        let _ = writeln!(out, "bound.status=skipped (nonsymmetric matrix)");
        None
    } else if a.nrows() > DENSE_CONDITION_LIMIT {
        let _ = writeln!(out, "bound.status=skipped (n > {DENSE_CONDITION_LIMIT})");
        None
    } else if cfg.one_level != OneLevel::Asm || cfg.combine != Combine::Additive {
        let _ = writeln!(out, "bound.status=skipped (bound applies to asm with additive coarse correction)");
        None
    } else if pre.coarse().is_none() {
        let _ = writeln!(out, "bound.status=skipped (no coarse level)");
        None
    } else {
        let c = check_bound(&a, &pre, cli.nu)?;
        let _ = writeln!(out, "bound.status={}", if c.holds() { "holds" } else { "violated" });
        let _ = writeln!(out, "bound.variant={}", c.variant.name());
        let _ = writeln!(out, "bound.kappa={:.6e}", c.kappa);
        let _ = writeln!(out, "bound.value={:.6e}", c.bound);
        let _ = writeln!(out, "bound.k_c={}", c.inputs.k_c);
        let _ = writeln!(out, "bound.nu={:.6e}", c.inputs.nu);
        let _ = writeln!(out, "bound.tau={:.6e}", c.inputs.tau);
        let _ = writeln!(out, "bound.lambda_star={:.6e} ({})", c.inputs.lambda_star, c.lambda_method.name());
        Some(c)
    };
    Ok(Outcome { text: out, solve, bound, solution_error })
}

/// Key-value error record.
pub fn error_record(e: &Error) -> String {
    let msg = e.to_string().replace('\n', " ");
    format!("error.kind={}\nerror.message={msg}\n", e.kind())
}

/// Runs the CLI and returns the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    let result = run_experiment(cli).and_then(|o| {
        let mut text = o.text;
        let status = o.solve.ensure_converged();
        if let Err(e) = &status {
            text.push_str(&error_record(e));
        }
        match &cli.report {
            Some(p) => write(p, &text)?,
            None => print!("{text}"),
        }
        status
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let rec = error_record(&e);
            eprint!("{rec}");
            if let Some(p) = &cli.report {
                if !matches!(e, Error::NotConverged { .. }) {
                    let _ = std::fs::write(p, &rec);
                }
            }
            1
        }
    }
}
