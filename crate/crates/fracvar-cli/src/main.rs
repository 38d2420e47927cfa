//! Command line front end for the fracvar solver.
//!
//! Reads a JSON problem description, then either solves it at one pair of
//! orders, sweeps a set of left orders, searches for the order with the
//! smallest objective value, or runs randomized self-tests of the discrete
//! operator identities. Output is a human table by default and CSV with
//! `--csv`; CSV floats use the shortest representation that parses back to
//! the same value.
//!
//! Exit codes: 0 success, 1 input error, 2 non-convergence, 3 identity
//! violation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use fracvar::expr::EvalError;
use fracvar::fraccalc::{
    left_commutation_residual, right_commutation_residual, Grid, GridFunction,
};
use fracvar::solver::{alpha_sweep, minimize_objective_over_alpha, solve_el, Solution};
use fracvar::variational::{
    summation_by_parts_residual, Boundary, Lagrangian, ProblemSpec, VarError,
};
use fracvar::{SolverError, SolverOptions};

const EXIT_INPUT: i32 = 1;
const EXIT_NO_CONVERGENCE: i32 = 2;
const EXIT_IDENTITY: i32 = 3;

#[derive(Parser)]
#[command(
    name = "fracvar",
    version,
    about = "Discrete fractional variational problems: solve, sweep the order, minimize over the order, self-check identities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and print the extremal
    Solve(SolveArgs),
    /// Solve the same problem across several left orders
    Sweep(SweepArgs),
    /// Search for the order with the smallest objective value
    MinAlpha(MinAlphaArgs),
    /// Run randomized self-tests of the discrete operator identities
    Check(CheckArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Problem description (JSON)
    problem: PathBuf,
    /// Override the left order from the file
    #[arg(long)]
    alpha: Option<f64>,
    /// Override the right order (defaults to the left order)
    #[arg(long)]
    beta: Option<f64>,
    /// Emit CSV instead of the human table
    #[arg(long)]
    csv: bool,
    /// Residual tolerance for the nonlinear solver
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap for the nonlinear solver
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// Problem description (JSON)
    problem: PathBuf,
    /// Comma-separated list of left orders
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Inclusive arithmetic progression of left orders, written lo:hi:step
    #[arg(long)]
    range: Option<String>,
    /// Hold the right order fixed at this value during the sweep
    #[arg(long)]
    beta: Option<f64>,
    /// Emit CSV instead of the human table
    #[arg(long)]
    csv: bool,
    /// Residual tolerance for the nonlinear solver
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap for the nonlinear solver
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct MinAlphaArgs {
    /// Problem description (JSON)
    problem: PathBuf,
    /// Lower end of the order bracket
    #[arg(long, default_value_t = 0.01)]
    lo: f64,
    /// Upper end of the order bracket
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    /// Emit CSV instead of the human table
    #[arg(long)]
    csv: bool,
    /// Residual tolerance for the nonlinear solver
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap for the nonlinear solver
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    /// Seed for the randomized instances
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of instances per identity suite
    #[arg(long, default_value_t = 100)]
    cases: usize,
    /// Residual tolerance for the identity checks
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    a: f64,
    b: f64,
    alpha: f64,
    #[serde(default)]
    beta: Option<f64>,
    boundary: BoundaryPair,
    lagrangian: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryPair {
    initial: BoundaryValue,
    terminal: BoundaryValue,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BoundaryValue {
    Pinned(f64),
    Named(String),
}

impl BoundaryValue {
    fn into_boundary(self, side: &str) -> Result<Boundary, String> {
        match self {
            BoundaryValue::Pinned(v) if v.is_finite() => Ok(Boundary::Fixed(v)),
            BoundaryValue::Pinned(v) => Err(format!("{side} boundary must be finite, got {v}")),
            BoundaryValue::Named(s) if s == "free" => Ok(Boundary::Free),
            BoundaryValue::Named(s) => {
                Err(format!("{side} boundary must be a number or \"free\", got \"{s}\""))
            }
        }
    }
}

struct Loaded {
    problem: ProblemSpec,
    /// True when no explicit right order was given anywhere, so the right
    /// order follows the left one through sweeps and order searches.
    beta_linked: bool,
}

fn load_problem(
    path: &Path,
    alpha_flag: Option<f64>,
    beta_flag: Option<f64>,
) -> Result<Loaded, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let file: ProblemFile =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;

    if !(file.a.is_finite() && file.b.is_finite()) {
        return Err("fields `a` and `b` must be finite".into());
    }
    let span = file.b - file.a;
    let steps = span.round();
    if !((span - steps).abs() <= 1e-9 && steps >= 2.0) {
        return Err(format!("b - a must be an integer of at least 2, got {span}"));
    }

    let alpha = alpha_flag.unwrap_or(file.alpha);
    let beta_linked = beta_flag.is_none() && file.beta.is_none();
    let beta = beta_flag.or(file.beta).unwrap_or(alpha);

    let initial = file.boundary.initial.into_boundary("initial")?;
    let terminal = file.boundary.terminal.into_boundary("terminal")?;

    if let Some((name, value)) = file.params.iter().find(|(_, v)| !v.is_finite()) {
        return Err(format!("parameter `{name}` must be finite, got {value}"));
    }
    let lagrangian =
        Lagrangian::parse(&file.lagrangian, file.params).map_err(|e| format!("lagrangian: {e}"))?;

    let grid = Grid::new(file.a, steps as usize).map_err(|e| e.to_string())?;
    let problem = ProblemSpec::new(grid, alpha, beta, initial, terminal, lagrangian)
        .map_err(|e| e.to_string())?;
    Ok(Loaded { problem, beta_linked })
}

fn solver_options(tol: Option<f64>, max_iter: Option<usize>) -> Result<SolverOptions, String> {
    let mut opts = SolverOptions::default();
    if let Some(tol) = tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(format!("--tol must be positive and finite, got {tol}"));
        }
        opts.residual_tolerance = tol;
    }
    if let Some(n) = max_iter {
        if n == 0 {
            return Err("--max-iter must be at least 1".into());
        }
        opts.max_iterations = n;
    }
    Ok(opts)
}

struct Row {
    alpha: f64,
    beta: f64,
    y: Vec<f64>,
    objective: f64,
    residual: f64,
    legendre_min: f64,
    converged: bool,
}

impl Row {
    fn from_solution(alpha: f64, beta: f64, sol: &Solution) -> Row {
        Row {
            alpha,
            beta,
            y: sol.y.values().to_vec(),
            objective: sol.objective,
            residual: sol.residual_inf_norm,
            legendre_min: sol.legendre.min,
            converged: sol.converged,
        }
    }

    fn failed(alpha: f64, beta: f64, k: usize) -> Row {
        Row {
            alpha,
            beta,
            y: vec![f64::NAN; k + 1],
            objective: f64::NAN,
            residual: f64::NAN,
            legendre_min: f64::NAN,
            converged: false,
        }
    }
}

fn csv_header(k: usize) -> String {
    let mut cols = vec!["alpha".to_string(), "beta".to_string()];
    cols.extend((0..=k).map(|i| format!("y{i}")));
    cols.extend(["objective", "residual", "legendre_min", "converged"].map(String::from));
    cols.join(",")
}

fn csv_row(row: &Row) -> String {
    let mut cols = vec![row.alpha.to_string(), row.beta.to_string()];
    cols.extend(row.y.iter().map(|v| v.to_string()));
    cols.push(row.objective.to_string());
    cols.push(row.residual.to_string());
    cols.push(row.legendre_min.to_string());
    cols.push(row.converged.to_string());
    cols.join(",")
}

fn print_solution_table(row: &Row, grid: Grid) {
    println!("alpha      {:.14}", row.alpha);
    println!("beta       {:.14}", row.beta);
    println!("objective  {:.14}", row.objective);
    println!("residual   {:.3e}", row.residual);
    println!("legendre   {:.3e} (smallest second-order coefficient)", row.legendre_min);
    println!("converged  {}", if row.converged { "yes" } else { "no" });
    println!();
    println!("{:>6}  {:>20}", "t", "y");
    for (i, v) in row.y.iter().enumerate() {
        println!("{:>6}  {:>20.14}", grid.point(i), v);
    }
}

fn print_sweep_table(rows: &[Row]) {
    let k = rows[0].y.len() - 1;
    print!("{:>18}", "alpha");
    for i in 0..=k {
        print!("  {:>18}", format!("y{i}"));
    }
    println!("  {:>18}  {:>9}", "objective", "converged");
    for row in rows {
        print!("{:>18.14}", row.alpha);
        for v in &row.y {
            print!("  {:>18.14}", v);
        }
        println!("  {:>18.14}  {:>9}", row.objective, if row.converged { "yes" } else { "no" });
    }
}

fn fail(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_INPUT
}

// Unbound parameters and malformed problems are input errors; domain
// breakdowns and singular systems are failures of the particular solve.
fn report_solver_error(err: &SolverError) -> i32 {
    eprintln!("error: {err}");
    match err {
        SolverError::Var(VarError::Eval(EvalError::UnboundParameter(_))) => EXIT_INPUT,
        SolverError::Var(VarError::Eval(_)) => EXIT_NO_CONVERGENCE,
        SolverError::Var(_) => EXIT_INPUT,
        _ => EXIT_NO_CONVERGENCE,
    }
}

fn cmd_solve(args: SolveArgs) -> i32 {
    let loaded = match load_problem(&args.problem, args.alpha, args.beta) {
        Ok(l) => l,
        Err(msg) => return fail(msg),
    };
    let opts = match solver_options(args.tol, args.max_iter) {
        Ok(o) => o,
        Err(msg) => return fail(msg),
    };
    let p = &loaded.problem;
    match solve_el(p, &opts) {
        Ok(sol) => {
            let row = Row::from_solution(p.alpha(), p.beta(), &sol);
            if args.csv {
                println!("{}", csv_header(p.grid().k()));
                println!("{}", csv_row(&row));
            } else {
                print_solution_table(&row, p.grid());
            }
            if row.converged {
                0
            } else {
                EXIT_NO_CONVERGENCE
            }
        }
        Err(err) => report_solver_error(&err),
    }
}

fn parse_range(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("--range expects lo:hi:step, got `{spec}`"));
    }
    let mut nums = [0.0f64; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| format!("--range component `{part}` is not a number"))?;
    }
    let [lo, hi, step] = nums;
    if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && lo <= hi) {
        return Err(format!("--range needs finite lo <= hi and step > 0, got `{spec}`"));
    }
    let mut orders = Vec::new();
    let mut j = 0usize;
    loop {
        let alpha = lo + j as f64 * step;
        if alpha > hi + 1e-12 {
            break;
        }
        orders.push(alpha);
        j += 1;
    }
    Ok(orders)
}

fn cmd_sweep(args: SweepArgs) -> i32 {
    let loaded = match load_problem(&args.problem, None, args.beta) {
        Ok(l) => l,
        Err(msg) => return fail(msg),
    };
    let opts = match solver_options(args.tol, args.max_iter) {
        Ok(o) => o,
        Err(msg) => return fail(msg),
    };
    let alphas = match (args.alphas, args.range) {
        (Some(_), Some(_)) => return fail("--alphas and --range are mutually exclusive"),
        (None, None) => return fail("sweep needs --alphas or --range"),
        (Some(list), None) => list,
        (None, Some(spec)) => match parse_range(&spec) {
            Ok(list) => list,
            Err(msg) => return fail(msg),
        },
    };
    if alphas.is_empty() {
        return fail("no orders to sweep");
    }
    for &alpha in &alphas {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return fail(format!("order {alpha} outside (0, 1]"));
        }
    }

    let p = &loaded.problem;
    let k = p.grid().k();
    let results = alpha_sweep(p, &alphas, loaded.beta_linked, &opts);
    for (alpha, res) in &results {
        if let Err(err) = res {
            eprintln!("order {alpha}: {err}");
        }
    }
    let rows: Vec<Row> = results
        .iter()
        .map(|(alpha, res)| {
            let beta = if loaded.beta_linked { *alpha } else { p.beta() };
            match res {
                Ok(sol) => Row::from_solution(*alpha, beta, sol),
                Err(_) => Row::failed(*alpha, beta, k),
            }
        })
        .collect();

    if args.csv {
        println!("{}", csv_header(k));
        for row in &rows {
            println!("{}", csv_row(row));
        }
    } else {
        print_sweep_table(&rows);
    }
    if rows.iter().all(|r| r.converged) {
        0
    } else {
        EXIT_NO_CONVERGENCE
    }
}

fn cmd_min_alpha(args: MinAlphaArgs) -> i32 {
    if !(args.lo.is_finite() && args.hi.is_finite() && 0.0 < args.lo && args.lo < args.hi && args.hi <= 1.0)
    {
        return fail(format!(
            "order bracket must satisfy 0 < lo < hi <= 1, got lo = {}, hi = {}",
            args.lo, args.hi
        ));
    }
    let loaded = match load_problem(&args.problem, None, None) {
        Ok(l) => l,
        Err(msg) => return fail(msg),
    };
    let opts = match solver_options(args.tol, args.max_iter) {
        Ok(o) => o,
        Err(msg) => return fail(msg),
    };
    let p = &loaded.problem;
    match minimize_objective_over_alpha(p, args.lo, args.hi, loaded.beta_linked, &opts) {
        Ok((alpha, sol)) => {
            let beta = if loaded.beta_linked { alpha } else { p.beta() };
            let row = Row::from_solution(alpha, beta, &sol);
            if args.csv {
                println!("{}", csv_header(p.grid().k()));
                println!("{}", csv_row(&row));
            } else {
                println!("alpha_star  {:.14}", alpha);
                println!();
                print_solution_table(&row, p.grid());
            }
            if row.converged {
                0
            } else {
                EXIT_NO_CONVERGENCE
            }
        }
        Err(err) => report_solver_error(&err),
    }
}

fn cmd_check(args: CheckArgs) -> i32 {
    if args.cases == 0 {
        return fail("--cases must be at least 1");
    }
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return fail(format!("--tol must be positive and finite, got {}", args.tol));
    }
    // Test hook: an additive residual perturbation standing in for a
    // corrupted kernel coefficient, so the violation path stays testable.
    let perturb: f64 = match std::env::var("FRACVAR_CHECK_PERTURB") {
        Ok(text) => match text.parse() {
            Ok(v) => v,
            Err(_) => return fail(format!("FRACVAR_CHECK_PERTURB must be a number, got `{text}`")),
        },
        Err(_) => 0.0,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut suites: Vec<(&str, f64)> = Vec::new();
    let mut violation: Option<(String, f64)> = None;
    let record = |violation: &mut Option<(String, f64)>, what: String, r: f64| {
        if violation.is_none() {
            *violation = Some((what, r));
        }
    };

    let mut max_r = 0.0f64;
    for case in 0..args.cases {
        let k = rng.gen_range(2..=12usize);
        let grid = Grid::new(0.0, k).unwrap();
        let f: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let g_vals: Vec<f64> = (0..=k).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let g = GridFunction::new(grid, g_vals).unwrap();
        let alpha = 1.0 - rng.gen::<f64>();
        let r = (summation_by_parts_residual(&f, &g, alpha) + perturb).abs();
        max_r = max_r.max(r);
        if r > args.tol {
            record(
                &mut violation,
                format!("summation by parts, case {case} (k = {k}, order {alpha})"),
                r,
            );
        }
    }
    suites.push(("summation by parts", max_r));

    for (name, left) in [("left commutation", true), ("right commutation", false)] {
        let mut max_r = 0.0f64;
        for case in 0..args.cases {
            let k = rng.gen_range(2..=12usize);
            let grid = Grid::new(0.0, k).unwrap();
            let vals: Vec<f64> = (0..=k).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let f = GridFunction::new(grid, vals).unwrap();
            let nu = rng.gen_range(0.0..2.0);
            for i in 0..k {
                let raw = if left {
                    left_commutation_residual(&f, nu, i)
                } else {
                    right_commutation_residual(&f, nu, i)
                };
                let r = (raw + perturb).abs();
                max_r = max_r.max(r);
                if r > args.tol {
                    record(
                        &mut violation,
                        format!("{name}, case {case} (k = {k}, order {nu}, index {i})"),
                        r,
                    );
                }
            }
        }
        suites.push((name, max_r));
    }

    for (name, max_r) in &suites {
        println!("{name:<20} max residual {max_r:.3e}  ({} cases)", args.cases);
    }
    match violation {
        None => {
            println!("tolerance {:e}: all identities hold", args.tol);
            0
        }
        Some((what, r)) => {
            println!("tolerance {:e}: violated", args.tol);
            eprintln!("identity violation: {what}: residual {r:.3e} exceeds {:e}", args.tol);
            EXIT_IDENTITY
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_INPUT,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let code = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::MinAlpha(args) => cmd_min_alpha(args),
        Command::Check(args) => cmd_check(args),
    };
    std::process::exit(code);
}
