//! `cocokit` command-line front end. Exit codes: 0 success, 1 invalid input
//! or configuration, 2 a runtime assertion or self-check failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cocokit::bench::selftest::{oracle_check, run_selftest, CheckResult};
use cocokit::bench::{self, per_horizon_means, Config, Policy};
use cocokit::oracles::{flow_decompose, Dag};
use cocokit::Error;

#[derive(Parser, Debug)]
#[command(name = "cocokit", version, about = "Projection-free constrained online optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment and write its trace and summary.csv.
    Run(RunArgs),
    /// Run the T × seed grid from the config's `sweep` section.
    Sweep(RunArgs),
    /// Run the built-in invariant checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        quiet: bool,
    },
    /// Compare a decision set's linear oracle with brute force.
    OracleCheck {
        /// One of box, simplex, ball, flow.
        #[arg(long = "set", default_value = "flow")]
        set_kind: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        quiet: bool,
    },
    /// Decompose a unit s-d flow into weighted paths.
    Decompose {
        /// Edge list: header `nodes <n> source <s> sink <d>`, then one `from to` per line.
        #[arg(long)]
        graph: PathBuf,
        /// Flow values, one per edge in edge-list order (whitespace or comma separated).
        #[arg(long)]
        flow: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// coco, bandit-cbco or baseline-projected.
    #[arg(long)]
    policy: Option<String>,
    /// Horizon.
    #[arg(long = "T")]
    horizon: Option<u64>,
    /// Record wall-clock step times in the trace.
    #[arg(long)]
    timing: bool,
    /// Sample a concrete path each round and log its cost.
    #[arg(long)]
    sample_paths: bool,
    #[arg(long)]
    quiet: bool,
}

impl RunArgs {
    fn config(&self) -> Result<Config, Error> {
        let mut cfg = match &self.config {
            Some(p) => Config::from_path(p)?,
            None => Config::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(p) = &self.policy {
            cfg.policy = Policy::parse(p)?;
        }
        if let Some(t) = self.horizon {
            cfg.horizon = t;
        }
        cfg.timing |= self.timing;
        cfg.sample_paths |= self.sample_paths;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Assertion(_) => 2,
        _ => 1,
    }
}

fn print_checks(checks: &[CheckResult], quiet: bool) -> bool {
    let ok = checks.iter().all(|c| c.passed);
    for c in checks {
        if !quiet || !c.passed {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    ok
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let cfg = args.config()?;
    let (outcome, trace) = bench::run_experiment(&cfg, &args.out)?;
    if !args.quiet {
        let s = outcome.summary();
        println!(
            "{} T={} seed={}: regret {:.4}, CCV {:.4}, oracle calls {}",
            outcome.policy.name(),
            s.horizon,
            s.seed,
            s.final_regret,
            s.final_ccv,
            s.oracle_calls
        );
        println!("trace: {}", trace.display());
    }
    Ok(())
}

fn sweep(args: &RunArgs) -> Result<(), Error> {
    let cfg = args.config()?;
    let outcomes = bench::sweep(&cfg, Some(&args.out))?;
    if !args.quiet {
        println!("{} runs, summary: {}", outcomes.len(), args.out.join("summary.csv").display());
        let means = per_horizon_means(&outcomes);
        for (t, regret, ccv) in &means {
            println!("T={t}: mean regret {regret:.4}, mean CCV {ccv:.4}");
        }
        let ts: Vec<f64> = means.iter().map(|m| m.0 as f64).collect();
        let regrets: Vec<f64> = means.iter().map(|m| m.1).collect();
        let ccvs: Vec<f64> = means.iter().map(|m| m.2).collect();
        for (name, ys) in [("regret", &regrets), ("CCV", &ccvs)] {
            match bench::loglog_slope(&ts, ys) {
                Ok(s) => println!("log-log slope of mean {name}: {s:.3}"),
                Err(_) => println!("log-log slope of mean {name}: undefined (non-positive means)"),
            }
        }
    }
    Ok(())
}

fn read_flow(path: &Path) -> Result<Vec<f64>, Error> {
    let text = fs::read_to_string(path)?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, t)| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("flow entry {}: `{t}` is not a number", i + 1)))
        })
        .collect()
}

fn decompose(graph: &Path, flow: &Path) -> Result<(), Error> {
    let text = fs::read_to_string(graph)?;
    let (dag, s, d) = Dag::from_edge_list(&text)?;
    let flow = read_flow(flow)?;
    let dec = flow_decompose(&dag, &flow, s, d)?;
    for (path, weight) in &dec.entries {
        let edges: Vec<String> = path.iter().map(|e| e.to_string()).collect();
        println!("{weight}\t{}", edges.join(" "));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run(args) => run(&args).map(|_| true),
        Command::Sweep(args) => sweep(&args).map(|_| true),
        Command::Selftest { seed, quiet } => Ok(print_checks(&run_selftest(seed)?, quiet)),
        Command::OracleCheck {
            set_kind,
            trials,
            seed,
            quiet,
        } => Ok(print_checks(&[oracle_check(&set_kind, seed, trials)?], quiet)),
        Command::Decompose { graph, flow } => decompose(&graph, &flow).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
