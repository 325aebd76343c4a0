//! Command-line front end: plan, gen, bench, validate, emit-svg.
//!
//! Exit codes: 0 success, 2 planning failure or invalid solution,
//! 3 invalid input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stgcs::bench_io::{
    aggregate, emit_svg, fixture, gen_instances, read_instance, read_solution, run_bench, save_instance, write_csv,
    write_summary_csv, BenchConfig, DEFAULT_BUDGET_S, FIXTURE_NAMES,
};
use stgcs::gcsprog::DEFAULT_EPS;
use stgcs::mrmp::{run_method, sp, validate, Method};
use stgcs::{Error, SolveMode, SolveParams};

const EXIT_PLAN_FAILED: u8 = 2;
const EXIT_BAD_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "stgcs", version, about = "Multi-robot motion planning on space-time graphs of convex sets")]
struct Cli {
    #[command(flatten)]
    opts: SolverOpts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct SolverOpts {
    /// Path selection: heuristic (relaxation + rounding) or exhaustive.
    #[arg(long, global = true, default_value = "heuristic")]
    solver: SolveMode,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget per planner run, seconds.
    #[arg(long = "budget-s", global = true, default_value_t = DEFAULT_BUDGET_S)]
    budget_s: f64,
    /// Minimum dwell time per visited set.
    #[arg(long, global = true, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Sampled path cap; defaults to ceil(1e3 ln |E|).
    #[arg(long = "path-budget", global = true)]
    path_budget: Option<usize>,
}

impl SolverOpts {
    fn params(&self) -> SolveParams {
        SolveParams {
            epsilon: self.eps,
            path_budget: self.path_budget,
            rng_seed: self.seed,
            mode: self.solver,
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan an instance and write the solution JSON.
    Plan {
        instance: PathBuf,
        #[arg(long, default_value = "pbs")]
        method: Method,
        /// Priority order for sp, e.g. 1,0 (default: robot index order).
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<usize>>,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate random instances on a catalog map, or write a fixture.
    Gen {
        #[arg(long, default_value = "empty", conflicts_with = "fixture")]
        map: String,
        /// Named fixture (corridor, swap4, simple_exchange, empty_pair).
        #[arg(long)]
        fixture: Option<String>,
        #[arg(long, short = 'n', default_value_t = 2)]
        robots: usize,
        #[arg(long, default_value_t = 12)]
        count: usize,
        /// Output directory for generated instances, or file for a fixture.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the benchmark matrix and write per-run and summary CSVs.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "empty")]
        maps: Vec<String>,
        /// Robot counts, e.g. 1,2,3 or a range 1-4.
        #[arg(long, default_value = "1-4")]
        robots: String,
        #[arg(long, default_value_t = 12)]
        instances: usize,
        #[arg(long, value_delimiter = ',', default_value = "sp,rp,pbs")]
        methods: Vec<Method>,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Check a solution against its instance and print the report.
    Validate { instance: PathBuf, solution: PathBuf },
    /// Render a 2d instance and solution as SVG.
    EmitSvg {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

enum Failure {
    Plan(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(_) => Failure::Plan(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn parse_counts(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Input(format!("bad robot counts '{s}'"));
    if let Some((a, b)) = s.split_once('-') {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a == 0 || a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let params = cli.opts.params();
    params.validate()?;
    let budget = cli.opts.budget_s;
    if budget.is_nan() || budget <= 0.0 {
        return Err(Failure::Input("--budget-s must be positive".into()));
    }
    match cli.cmd {
        Cmd::Plan { instance, method, order, out } => {
            let inst = read_instance(&instance)?.to_instance(params, budget)?;
            let outcome = match (method, order) {
                (Method::Sp, Some(order)) => sp(&inst, &order)?,
                (_, Some(_)) => return Err(Failure::Input("--order only applies to --method sp".into())),
                (m, None) => run_method(&inst, m)?,
            };
            log::info!("{method}: {:?}", outcome.stats);
            match outcome.solution {
                Some(sol) => {
                    let text = serde_json::to_string_pretty(&sol).map_err(|e| Failure::Input(e.to_string()))?;
                    write_out(out.as_deref(), &text)
                }
                None => Err(Failure::Plan(
                    outcome.failure.map_or_else(|| "no solution".into(), |f| f.to_string()),
                )),
            }
        }
        Cmd::Gen { map, fixture: fx, robots, count, out } => {
            if let Some(name) = fx {
                if !FIXTURE_NAMES.contains(&name.as_str()) {
                    return Err(Failure::Input(format!("unknown fixture '{name}'")));
                }
                save_instance(&fixture(&name)?, &out)?;
                return Ok(());
            }
            let files = gen_instances(&map, robots, count, cli.opts.seed)?;
            fs::create_dir_all(&out).map_err(|e| Failure::Input(format!("cannot create {}: {e}", out.display())))?;
            for (id, f) in files.iter().enumerate() {
                save_instance(f, &out.join(format!("{map}_n{robots}_{id:02}.json")))?;
            }
            Ok(())
        }
        Cmd::Bench { maps, robots, instances, methods, out, summary } => {
            let cfg = BenchConfig {
                maps,
                robot_counts: parse_counts(&robots)?,
                instances,
                methods,
                seed: cli.opts.seed,
                budget_s: budget,
                solve_params: params,
            };
            let rows = run_bench(&cfg)?;
            let f = fs::File::create(&out).map_err(|e| Failure::Input(format!("cannot write {}: {e}", out.display())))?;
            write_csv(&rows, f)?;
            if let Some(p) = summary {
                let f = fs::File::create(&p).map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display())))?;
                write_summary_csv(&aggregate(&rows), f)?;
            }
            Ok(())
        }
        Cmd::Validate { instance, solution } => {
            let inst = read_instance(&instance)?.to_instance(params, budget)?;
            let sol = read_solution(&solution)?;
            let report = validate(&sol.trajectories, &inst);
            let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Input(e.to_string()))?;
            println!("{text}");
            if report.is_valid() {
                Ok(())
            } else {
                Err(Failure::Plan(format!("{} violation(s)", report.violations.len())))
            }
        }
        Cmd::EmitSvg { instance, solution, out } => {
            let f = read_instance(&instance)?;
            let sol = read_solution(&solution)?;
            emit_svg(&sol.trajectories, &f, &out)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_BAD_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Plan(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_PLAN_FAILED)
        }
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_BAD_INPUT)
        }
    }
}
