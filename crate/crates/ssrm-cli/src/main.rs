use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ssrm_cli::{cmd_list, cmd_oracle, cmd_run, parse_kernel, RunOptions, EXIT_ERROR};

#[derive(Parser)]
#[command(
    name = "ssrm",
    version,
    about = "Sequential surrogate reliability analysis: adaptive RBF surrogates with Monte Carlo failure probabilities"
)]
struct Cli {
    /// Worker threads for Monte Carlo and fitness evaluation (results are
    /// independent of this setting).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sequential surrogate method on a problem.
    Run(RunArgs),
    /// Direct Monte Carlo estimate on the true limit state function.
    Oracle(OracleArgs),
    /// List the built-in problems.
    List(ListArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Built-in problem name or path to a problem JSON file.
    problem: String,
    /// Seed for the initial Latin hypercube design.
    #[arg(long, default_value_t = 1)]
    seed_lhs: u64,
    /// Seed for the Monte Carlo sample matrix (reused across iterations).
    #[arg(long, default_value_t = 2)]
    seed_mcs: u64,
    /// Seed for the add-point search.
    #[arg(long, default_value_t = 3)]
    seed_ga: u64,
    /// Monte Carlo samples per estimate.
    #[arg(long)]
    n_mcs: Option<usize>,
    /// Minimum distance between an added point and existing samples.
    #[arg(long)]
    d_min: Option<f64>,
    /// Absolute convergence tolerance on the probability change.
    #[arg(long)]
    eps_a: Option<f64>,
    /// Relative convergence tolerance on the probability change.
    #[arg(long)]
    eps_r: Option<f64>,
    /// Maximum number of added points.
    #[arg(long)]
    k_max: Option<usize>,
    /// Kernel: gaussian, inverse_multiquadric, thin_plate_spline.
    #[arg(long)]
    kernel: Option<String>,
    /// Also run the direct oracle with this many samples.
    #[arg(long, value_name = "N")]
    with_oracle: Option<usize>,
    /// Output path for the JSON run record (default `<problem>.run.json`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output path for the CSV iteration trace (default `<problem>.trace.csv`).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Built-in problem name or path to a problem JSON file.
    problem: String,
    /// Number of Monte Carlo samples.
    #[arg(short, long, default_value_t = 1_000_000)]
    n: usize,
    /// Seed for the sample matrix.
    #[arg(long, default_value_t = 2)]
    seed: u64,
    /// Print the estimate as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ListArgs {
    /// Print the listing as a JSON array.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore re-initialization: results do not depend on the pool size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let code = match cli.command {
        Command::Run(args) => run(args),
        Command::Oracle(args) => oracle(args),
        Command::List(args) => list(args),
    };
    match code {
        Ok(c) => ExitCode::from(c as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn run(args: RunArgs) -> anyhow::Result<i32> {
    let kernel = args.kernel.as_deref().map(parse_kernel).transpose()?;
    let opts = RunOptions {
        seed_lhs: args.seed_lhs,
        seed_mcs: args.seed_mcs,
        seed_ga: args.seed_ga,
        n_mcs: args.n_mcs,
        d_min: args.d_min,
        eps_a: args.eps_a,
        eps_r: args.eps_r,
        k_max: args.k_max,
        kernel,
        with_oracle: args.with_oracle,
        out: args.out,
        trace: args.trace,
    };
    let outcome = cmd_run(&args.problem, &opts)?;
    let r = &outcome.record.result;
    println!("problem        : {}", outcome.record.problem.name());
    println!("final pf       : {:.6e}", r.final_pf);
    println!("iterations     : {}", r.iterations);
    println!("lsf evaluations: {}", r.n_lsf_evals);
    println!("converged by   : {:?}", r.converged_by);
    if let Some(est) = &outcome.record.oracle {
        let rel = (r.final_pf - est.pf).abs() / est.pf.max(f64::MIN_POSITIVE);
        println!(
            "oracle pf      : {:.6e} (n = {}, relative difference {:.2}%)",
            est.pf,
            est.n_samples,
            rel * 100.0
        );
    }
    println!("record         : {}", outcome.out_path.display());
    println!("trace          : {}", outcome.trace_path.display());
    Ok(outcome.exit_code)
}

fn oracle(args: OracleArgs) -> anyhow::Result<i32> {
    let est = cmd_oracle(&args.problem, args.n, args.seed)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&est)?);
    } else {
        println!("pf         : {:.6e}", est.pf);
        println!("n_samples  : {}", est.n_samples);
        println!("n_failures : {}", est.n_failures);
        match est.cov {
            Some(cov) => println!("cov        : {:.4}", cov),
            None => println!("cov        : undefined (no failures)"),
        }
    }
    Ok(0)
}

fn list(args: ListArgs) -> anyhow::Result<i32> {
    let rows = cmd_list();
    if args.json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
    } else {
        println!(
            "{:<11} {:>3}  {:<33} {:>12}  {:>9}",
            "name", "m", "variables", "ref pf", "ref n"
        );
        for row in rows {
            println!(
                "{:<11} {:>3}  {:<33} {:>12.4e}  {:>9}",
                row.name, row.dim, row.variables, row.reference_pf, row.reference_n
            );
        }
    }
    Ok(0)
}
