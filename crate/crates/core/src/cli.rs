//! The `ordiso` command line: `fit`, `check`, `simulate` and `bench`.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 solver did not converge,
//! 3 optimality certificate rejected. Diagnostics go to stderr only.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::io::{read_fit_record, read_sample, write_fit, FitOutput, InputFormat, OutputFormat};
use crate::model::{objective, PairedSample, SolverConfig, StepRule};
use crate::oracle::dykstra_project;
use crate::ordered::{
    kkt_check, project_ordered_pair, solve, solve_dual, Method as SolveMethod, OrderedConeProblem, DYKSTRA_MAX_ROUNDS,
};
use crate::pava::{isotonic_fit, IsotonicProblem};
use crate::simulate::{write_sample_csv, CurveFamily, Simulation, DEFAULT_SEED};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Objective recomputation must match the stored value to this relative error.
const OBJECTIVE_RTOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "ordiso", version, about = "Least squares fits of two ordered monotone curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the ordered pair to a CSV sample (header x,y,z[,w1][,w2]).
    Fit(FitArgs),
    /// Re-verify the optimality certificate of a JSON fit record.
    Check(CheckArgs),
    /// Draw a synthetic sample from known ordered curves.
    Simulate(SimulateArgs),
    /// Time the solvers on synthetic samples.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Projected subgradient ascent on the dual.
    Dual,
    /// Pooling projection (generalized PAVA).
    Pava,
    /// Dykstra alternating projections.
    Dykstra,
}

impl From<Method> for SolveMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Dual => SolveMethod::Dual,
            Method::Pava => SolveMethod::GeneralizedPava,
            Method::Dykstra => SolveMethod::Dykstra,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StepRuleArg {
    Polyak,
    Diminishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Plotcsv,
}

impl FormatArg {
    fn format(self) -> OutputFormat {
        match self {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Plotcsv => OutputFormat::PlotCsv,
        }
    }

    fn extension(self) -> &'static str {
        match self {
            FormatArg::Json => "json",
            FormatArg::Csv => "csv",
            FormatArg::Plotcsv => "plot.csv",
        }
    }
}

#[derive(Debug, Clone, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    feas_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    gap_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = StepRuleArg::Polyak)]
    step_rule: StepRuleArg,
    #[arg(long, default_value_t = 1.0)]
    step_constant: f64,
    /// Compare the result against the Dykstra oracle and report the distance.
    #[arg(long)]
    oracle_check: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            feas_tol: self.feas_tol,
            gap_tol: self.gap_tol,
            max_iter: self.max_iter,
            step_rule: match self.step_rule {
                StepRuleArg::Polyak => StepRule::Polyak,
                StepRuleArg::Diminishing => StepRule::Diminishing,
            },
            step_constant: self.step_constant,
            oracle_check: self.oracle_check,
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Input CSV, `-` for stdin.
    #[arg(default_value = "-")]
    input: String,
    /// Output path, `-` for stdout. With several formats, each is written
    /// next to this path with its own extension.
    #[arg(short, long, default_value = "-")]
    output: String,
    #[arg(long, value_enum, default_value_t = Method::Dual)]
    method: Method,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [FormatArg::Json])]
    format: Vec<FormatArg>,
    /// Tolerance stored with the fit for later certificate checks.
    #[arg(long, default_value_t = 1e-6)]
    kkt_tol: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// JSON fit record, `-` for stdin.
    #[arg(default_value = "-")]
    input: String,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    sd: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "piecewise")]
    family: String,
    #[arg(short, long, default_value = "-")]
    output: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchSolver {
    /// Single-curve weighted PAVA on `y`.
    Isotonic,
    Dual,
    Pava,
    Dykstra,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000, 10000])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    sd: f64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [BenchSolver::Isotonic, BenchSolver::Dual, BenchSolver::Pava])]
    solvers: Vec<BenchSolver>,
    #[arg(short, long, default_value = "-")]
    output: String,
    #[command(flatten)]
    solver: SolverArgs,
}

/// Entry point of the binary.
pub fn main() -> i32 {
    run(std::env::args_os())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Check(args) => cmd_check(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn open_input(path: &str) -> Result<Box<dyn Read>> {
    Ok(if path == "-" { Box::new(io::stdin().lock()) } else { Box::new(BufReader::new(File::open(path)?)) })
}

fn open_output(path: &str) -> Result<Box<dyn Write>> {
    Ok(if path == "-" { Box::new(io::stdout().lock()) } else { Box::new(BufWriter::new(File::create(path)?)) })
}

fn cmd_fit(args: &FitArgs) -> Result<i32> {
    if !(args.kkt_tol > 0.0) {
        return Err(Error::Domain("--kkt-tol must be positive".into()));
    }
    let config = args.solver.config();
    let sample = read_sample(open_input(&args.input)?, InputFormat::Csv)?;
    let solved = solve(&sample, args.method.into(), &config, args.kkt_tol)?;
    let out = FitOutput {
        sample: &sample,
        config: &config,
        kkt_tol: args.kkt_tol,
        fit: &solved.fit,
        dual: &solved.dual,
        diagnostics: &solved.diagnostics,
    };
    let mut formats = args.format.clone();
    formats.dedup();
    if formats.len() == 1 {
        write_fit(out, open_output(&args.output)?, formats[0].format())?;
    } else if args.output == "-" {
        return Err(Error::Domain("several formats need an output path, not stdout".into()));
    } else {
        for f in formats {
            let path = with_extension(Path::new(&args.output), f.extension());
            write_fit(out, BufWriter::new(File::create(path)?), f.format())?;
        }
    }
    eprintln!(
        "n={} objective={} iterations={} max_coupling_violation={:e} converged={}{}",
        sample.len(),
        solved.fit.objective,
        solved.diagnostics.iterations,
        solved.fit.max_coupling_violation,
        solved.diagnostics.converged,
        solved.diagnostics.oracle_max_diff.map_or(String::new(), |d| format!(" oracle_max_diff={d:e}")),
    );
    Ok(if solved.diagnostics.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    let stem = path.file_stem().map_or_else(|| "fit".into(), |s| s.to_string_lossy().into_owned());
    let stem = stem.split('.').next().unwrap_or("fit").to_string();
    path.with_file_name(format!("{stem}.{ext}"))
}

fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let record = read_fit_record(open_input(&args.input)?)?;
    let sample = record.sample()?;
    let fit = record.fit();
    let mut failures = Vec::new();
    let recomputed = objective(&sample, &record.a, &record.b)?;
    if (recomputed - record.objective).abs() > OBJECTIVE_RTOL * recomputed.abs().max(f64::MIN_POSITIVE) {
        failures.push(format!("objective mismatch: stored {} but recomputed {}", record.objective, recomputed));
    }
    let tol = record.tolerances.kkt_tol;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("stored kkt_tol {tol} is not positive")));
    }
    let report = kkt_check(&sample, &fit, &record.lambda, tol)?;
    failures.extend(report.violations.iter().map(ToString::to_string));
    if failures.is_empty() {
        eprintln!("certificate holds at tolerance {tol:e} (objective {recomputed})");
        Ok(EXIT_OK)
    } else {
        eprintln!("certificate rejected at tolerance {tol:e}:");
        for f in &failures {
            eprintln!("  {f}");
        }
        Ok(EXIT_CHECK_FAILED)
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let sim = Simulation { n: args.n, sd: args.sd, seed: args.seed, family: args.family.parse()? };
    let sample = sim.draw()?;
    write_sample_csv(&sample, open_output(&args.output)?)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq)]
struct BenchRow {
    solver: BenchSolver,
    n: usize,
    median_seconds: f64,
    median_iterations: f64,
    converged: usize,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    if args.reps == 0 {
        return Err(Error::Domain("--reps must be at least 1".into()));
    }
    if args.sizes.contains(&0) {
        return Err(Error::Domain("--sizes must be positive".into()));
    }
    let config = args.solver.config();
    config.validate()?;
    let mut rows = Vec::new();
    for &n in &args.sizes {
        let samples: Vec<PairedSample> = (0..args.reps)
            .map(|r| {
                Simulation { n, sd: args.sd, seed: args.seed.wrapping_add(r as u64), family: CurveFamily::Piecewise }
                    .draw()
            })
            .collect::<Result<_>>()?;
        for &solver in &args.solvers {
            let mut times = Vec::with_capacity(args.reps);
            let mut iterations = Vec::with_capacity(args.reps);
            let mut converged = 0;
            for sample in &samples {
                let start = Instant::now();
                let (iters, ok) = match solver {
                    BenchSolver::Isotonic => {
                        let p = IsotonicProblem::new(sample.y().to_vec(), sample.w1().to_vec())?;
                        std::hint::black_box(isotonic_fit(&p));
                        (0, true)
                    }
                    BenchSolver::Dual => {
                        let prob = OrderedConeProblem::new(sample.clone(), config.clone())?;
                        let (_, _, diag) = solve_dual(&prob)?;
                        (diag.iterations, diag.converged)
                    }
                    BenchSolver::Pava => {
                        let fit = project_ordered_pair(sample.y(), sample.z(), sample.w1(), sample.w2(), &config)?;
                        (0, fit.is_feasible(config.feas_tol))
                    }
                    BenchSolver::Dykstra => {
                        let out = dykstra_project(
                            sample.y(),
                            sample.z(),
                            sample.w1(),
                            sample.w2(),
                            config.feas_tol * 1e-2,
                            DYKSTRA_MAX_ROUNDS,
                        )?;
                        (out.state.round, out.converged)
                    }
                };
                times.push(start.elapsed().as_secs_f64());
                iterations.push(iters as f64);
                converged += usize::from(ok);
            }
            rows.push(BenchRow {
                solver,
                n,
                median_seconds: median(&mut times),
                median_iterations: median(&mut iterations),
                converged,
            });
        }
    }
    let mut sink = open_output(&args.output)?;
    writeln!(sink, "solver,n,reps,median_seconds,median_iterations,converged")?;
    for r in rows {
        let name = r.solver.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
        writeln!(sink, "{name},{},{},{:e},{},{}", r.n, args.reps, r.median_seconds, r.median_iterations, r.converged)?;
    }
    sink.flush()?;
    Ok(EXIT_OK)
}
