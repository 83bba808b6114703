//! `casplan` — plan mixed discrete–continuous PDDL+ instances, or run the
//! built-in benchmark harness.
//!
//! Exit codes for `plan`: 0 a plan was found and validated, 1 no plan exists
//! within the step bound, 2 resources (time or solver budget) were exhausted,
//! 3 the input was rejected.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use casplan_core::benchdomains::{Family, HarnessConfig, HarnessProtocol, run_harness};
use casplan_core::driver::{plan, PlanOutcome, PlannerConfig, Protocol};
use casplan_core::validate::write_plan;
use casplan_core::{ground, parse_domain, parse_problem};

#[derive(Parser)]
#[command(name = "casplan", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan for a PDDL+ domain/problem pair.
    Plan(PlanArgs),
    /// Run the benchmark harness over one generated family.
    Bench(BenchArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Domain file (PDDL).
    domain: PathBuf,
    /// Problem file (PDDL).
    problem: PathBuf,
    /// Deepen iteratively up to this many steps.
    #[arg(long, default_value_t = 30, conflicts_with = "fixed_step")]
    max_steps: usize,
    /// Search exactly this many steps instead of deepening.
    #[arg(long)]
    fixed_step: Option<usize>,
    /// Minimum separation between interfering happenings.
    #[arg(long, default_value_t = 0.001)]
    eps: f64,
    /// Validation sampling step; default adapts to the plan.
    #[arg(long)]
    granularity: Option<f64>,
    /// Numeric comparison tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 600)]
    timeout: u64,
    /// Write the generated rule/constraint program to this file.
    #[arg(long, value_name = "FILE")]
    emit_casp: Option<PathBuf>,
    /// Search heuristic as KEY=VAL (max_occurrences_per_step, no_idle_steps);
    /// repeatable.
    #[arg(long, value_name = "KEY=VAL")]
    heuristic: Vec<String>,
    /// Write the plan here instead of stdout.
    #[arg(long, value_name = "FILE")]
    plan_out: Option<PathBuf>,
    /// Write the validation report as JSON.
    #[arg(long, value_name = "FILE")]
    report_json: Option<PathBuf>,
    /// Print planner statistics to stderr as JSON.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark family: gen-linear, gen-nonlinear, car-linear, car-nonlinear.
    #[arg(long)]
    family: String,
    /// Inclusive scale range, e.g. 1..8.
    #[arg(long)]
    scale: String,
    /// fixed (minimal horizon per family) or cumulative (iterative deepening).
    #[arg(long, default_value = "cumulative")]
    protocol: String,
    /// Per-instance wall-clock limit in seconds.
    #[arg(long, default_value_t = 600)]
    timeout: u64,
    /// Write results as JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Plan(args) => run_plan(args),
        Command::Bench(args) => run_bench(args),
    }
}

fn input_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(3)
}

fn run_plan(args: PlanArgs) -> ExitCode {
    let domain_text = match fs::read_to_string(&args.domain) {
        Ok(t) => t,
        Err(e) => return input_err(format!("{}: {e}", args.domain.display())),
    };
    let problem_text = match fs::read_to_string(&args.problem) {
        Ok(t) => t,
        Err(e) => return input_err(format!("{}: {e}", args.problem.display())),
    };
    let domain = match parse_domain(&domain_text) {
        Ok(d) => d,
        Err(e) => return input_err(e),
    };
    let problem = match parse_problem(&problem_text, &domain) {
        Ok(p) => p,
        Err(e) => return input_err(e),
    };
    let g = match ground(&domain, &problem) {
        Ok(g) => g,
        Err(e) => return input_err(e),
    };
    if args.eps <= 0.0 || args.tol <= 0.0 || args.granularity.is_some_and(|g| g <= 0.0) {
        return input_err("eps, tol, and granularity must be positive");
    }

    let mut cfg = PlannerConfig {
        protocol: match args.fixed_step {
            Some(h) => Protocol::Fixed(h),
            None => Protocol::Iterative(args.max_steps),
        },
        eps: args.eps,
        granularity: args.granularity,
        tol: args.tol,
        timeout: Duration::from_secs(args.timeout),
        collect_casp_text: args.emit_casp.is_some(),
        ..Default::default()
    };
    for spec in &args.heuristic {
        let Some((key, val)) = spec.split_once('=') else {
            return input_err(format!("heuristic `{spec}` is not KEY=VAL"));
        };
        if let Err(e) = cfg.search.apply_heuristic(key, val) {
            return input_err(e);
        }
    }

    let result = plan(&g, &cfg);

    if let (Some(path), Some(text)) = (&args.emit_casp, &result.casp_text) {
        if let Err(e) = fs::write(path, text) {
            return input_err(format!("{}: {e}", path.display()));
        }
    }
    if args.stats {
        eprintln!(
            "{}",
            serde_json::to_string_pretty(&result.stats).expect("stats serialize")
        );
    }

    match &result.outcome {
        PlanOutcome::Plan { plan, report, horizon } => {
            let text = write_plan(plan);
            match &args.plan_out {
                Some(path) => {
                    if let Err(e) = fs::write(path, &text) {
                        return input_err(format!("{}: {e}", path.display()));
                    }
                }
                None => print!("{text}"),
            }
            if let Some(path) = &args.report_json {
                let json = serde_json::json!({
                    "horizon": horizon,
                    "report": report.to_json(&g),
                });
                if let Err(e) = fs::write(path, serde_json::to_string_pretty(&json).unwrap()) {
                    return input_err(format!("{}: {e}", path.display()));
                }
            }
            ExitCode::SUCCESS
        }
        PlanOutcome::NoPlanAtBound => {
            eprintln!("no plan within the step bound");
            ExitCode::from(1)
        }
        PlanOutcome::ResourceExhausted => {
            eprintln!("resource budget exhausted before a verdict");
            ExitCode::from(2)
        }
    }
}

fn run_bench(args: BenchArgs) -> ExitCode {
    let Some(family) = Family::parse(&args.family) else {
        return input_err(format!("unknown family `{}`", args.family));
    };
    let Some(protocol) = HarnessProtocol::parse(&args.protocol) else {
        return input_err(format!("unknown protocol `{}`", args.protocol));
    };
    let Some((lo, hi)) = args
        .scale
        .split_once("..")
        .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
    else {
        return input_err(format!("scale `{}` is not a..b", args.scale));
    };
    if lo > hi || lo == 0 {
        return input_err("scale must be 1 <= a <= b");
    }
    let results = run_harness(&HarnessConfig {
        family,
        scale_lo: lo,
        scale_hi: hi,
        protocol,
        timeout: Duration::from_secs(args.timeout),
        planner: PlannerConfig::default(),
    });
    print!("{}", results.table());
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&results.to_json()).unwrap();
        if let Err(e) = fs::write(path, json) {
            return input_err(format!("{}: {e}", path.display()));
        }
    }
    ExitCode::SUCCESS
}
