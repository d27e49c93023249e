//! Command-line driver for the patch-reconstructed DG solver.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use prdg::harness::{
    efficiency_report, run_benchmark, verify_benchmark_consistency, write_errors_csv,
    write_orders_csv, write_run_json, Example, RunConfig, RunResult,
};

#[derive(Parser)]
#[command(name = "prdg", version, about = "Patch-reconstructed DG solver for elliptic interface problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark convergence study and write errors.csv,
    /// orders.csv and run.json.
    Solve(SolveArgs),
    /// Cross-order comparison reports.
    Report(ReportArgs),
    /// Verify the registered data of a benchmark for internal
    /// consistency (interface jumps against the exact solution,
    /// sources against a finite-difference Laplacian).
    Check(CheckArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Benchmark name (example1 .. example6).
    #[arg(long)]
    example: String,
    /// Polynomial degree of the reconstruction (>= 1).
    #[arg(long)]
    order: usize,
    /// Comma-separated mesh sizes, or "auto" for the benchmark default.
    #[arg(long, default_value = "auto")]
    h: String,
    /// Interior-penalty parameter; default 10 m^2 max(beta).
    #[arg(long)]
    eta: Option<f64>,
    /// Patch cardinality target; default 5/9/15 for m = 1/2/3.
    #[arg(long)]
    patch_target: Option<usize>,
    /// Interface subdivision count per cut cell; default max(4, m+1).
    #[arg(long)]
    nsub: Option<usize>,
    /// Linear solver: direct (skyline Cholesky) or cg (Jacobi-PCG).
    #[arg(long, default_value = "direct")]
    solver: String,
    /// Also estimate the spectral condition number of each system.
    #[arg(long)]
    condition: bool,
    /// Output directory for errors.csv, orders.csv and run.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Produce a DOF-versus-error efficiency table across orders.
    #[arg(long)]
    efficiency: bool,
    /// Benchmark name.
    #[arg(long)]
    example: String,
    /// Comma-separated list of polynomial degrees.
    #[arg(long, default_value = "1,2,3")]
    orders: String,
    /// Comma-separated mesh sizes, or "auto".
    #[arg(long, default_value = "auto")]
    h: String,
    /// Output directory for efficiency.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Benchmark name, or "all".
    #[arg(long)]
    example: String,
    /// Number of interface sample points.
    #[arg(long, default_value_t = 24)]
    samples: usize,
}

fn parse_h(s: &str) -> Result<Option<Vec<f64>>, String> {
    if s == "auto" {
        return Ok(None);
    }
    let hs: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match hs {
        Ok(hs) if !hs.is_empty() => Ok(Some(hs)),
        _ => Err(format!("invalid mesh-size list '{s}'; expected e.g. 0.2,0.1 or auto")),
    }
}

fn parse_orders(s: &str) -> Result<Vec<usize>, String> {
    let ms: Result<Vec<usize>, _> = s.split(',').map(|t| t.trim().parse::<usize>()).collect();
    match ms {
        Ok(ms) if !ms.is_empty() => Ok(ms),
        _ => Err(format!("invalid order list '{s}'; expected e.g. 1,2,3")),
    }
}

fn write_outputs(dir: &Path, result: &RunResult) -> prdg::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut errors = BufWriter::new(File::create(dir.join("errors.csv"))?);
    write_errors_csv(&result.runs, &mut errors)?;
    errors.flush()?;
    let mut orders = BufWriter::new(File::create(dir.join("orders.csv"))?);
    write_orders_csv(&result.runs, &mut orders)?;
    orders.flush()?;
    let mut json = BufWriter::new(File::create(dir.join("run.json"))?);
    write_run_json(result, &mut json)?;
    json.flush()?;
    Ok(())
}

fn print_summary(result: &RunResult) {
    println!(
        "{:>10} {:>8} {:>13} {:>7} {:>13} {:>7}",
        "h", "n_dof", "l2_error", "order", "dg_error", "order"
    );
    for r in &result.runs {
        let fo = |o: Option<f64>| o.map_or("-".to_string(), |v| format!("{v:.2}"));
        println!(
            "{:>10.5} {:>8} {:>13.4e} {:>7} {:>13.4e} {:>7}",
            r.h,
            r.report.n_dof,
            r.report.l2_error,
            fo(r.report.l2_order),
            r.report.dg_error,
            fo(r.report.dg_order),
        );
    }
    for f in &result.failures {
        eprintln!("h = {}: {} stage failed: {}", f.h, f.stage, f.message);
    }
}

fn run_solve(args: &SolveArgs) -> Result<(), String> {
    let mut config = RunConfig::new(&args.example, args.order);
    config.h = parse_h(&args.h)?;
    config.eta = args.eta;
    config.patch_target = args.patch_target;
    config.n_sub = args.nsub;
    config.solver = args.solver.clone();
    config.estimate_condition = args.condition;

    let result = run_benchmark(&config).map_err(|e| e.to_string())?;
    write_outputs(&args.out, &result).map_err(|e| e.to_string())?;
    print_summary(&result);
    println!("wrote {}", args.out.display());
    if result.runs.is_empty() || !result.failures.is_empty() {
        return Err("one or more mesh sizes failed".into());
    }
    Ok(())
}

fn run_report(args: &ReportArgs) -> Result<(), String> {
    if !args.efficiency {
        return Err("report currently supports only --efficiency".into());
    }
    let ms = parse_orders(&args.orders)?;
    let h = parse_h(&args.h)?;
    std::fs::create_dir_all(&args.out).map_err(|e| e.to_string())?;
    let path = args.out.join("efficiency.csv");
    let mut w = BufWriter::new(File::create(&path).map_err(|e| e.to_string())?);
    let results =
        efficiency_report(&args.example, &ms, h.as_deref(), &mut w).map_err(|e| e.to_string())?;
    w.flush().map_err(|e| e.to_string())?;
    for result in &results {
        println!("order m = {}", result.config.m);
        print_summary(result);
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn run_check(args: &CheckArgs) -> Result<(), String> {
    let names: Vec<&str> = if args.example == "all" {
        prdg::harness::EXAMPLE_NAMES.to_vec()
    } else {
        vec![args.example.as_str()]
    };
    let mut ok = true;
    for name in names {
        let ex = Example::from_name(name).map_err(|e| e.to_string())?;
        match verify_benchmark_consistency(ex, args.samples) {
            Ok(()) => println!("{name}: consistent"),
            Err(e) => {
                println!("{name}: FAILED: {e}");
                ok = false;
            }
        }
    }
    if ok {
        Ok(())
    } else {
        Err("consistency check failed".into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Report(args) => run_report(args),
        Command::Check(args) => run_check(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
