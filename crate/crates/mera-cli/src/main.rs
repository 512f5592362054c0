mod config;
mod output;
mod report;
mod scenarios;

use clap::{Args, Parser, Subcommand};
use config::{ExperimentConfig, Plan};
use std::path::PathBuf;
use std::process::ExitCode;

/// Output root used when neither --out nor the config names one.
const OUT_ENV: &str = "MERA_OUT_DIR";
const DEFAULT_OUT: &str = "mera-out";

#[derive(Parser)]
#[command(name = "mera", version, about = "Run MERA simulation experiments and export their data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario; completed cells of an earlier run are reused.
    Run(RunArgs),
    /// Check a config and print its cost estimate.
    Validate(Overrides),
    /// Summarize finished runs below an output directory.
    Report {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// "off", "reference" or a calibration JSON path.
    #[arg(long)]
    noise: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Overrides,
    /// Output root; the scenario writes into <out>/<scenario>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

fn plan(o: &Overrides) -> Result<Plan, Failure> {
    let mut cfg = ExperimentConfig::load(&o.config).map_err(Failure::Config)?;
    if o.seed.is_some() {
        cfg.seed = o.seed;
    }
    if o.noise.is_some() {
        cfg.noise = o.noise.clone();
    }
    let plan = Plan::new(cfg).map_err(Failure::Config)?;
    let cost = plan.cost_estimate().map_err(Failure::Config)?;
    eprintln!("{}: {} cells, cost estimate {cost:.3e} gate applications", plan.scenario.name(), plan.cells.len());
    if cost > plan.budget {
        return Err(Failure::Config(anyhow::anyhow!(
            "cost guard: estimate {cost:.3e} exceeds the budget {:.3e}; raise `budget` to run it",
            plan.budget
        )));
    }
    Ok(plan)
}

fn out_root(flag: Option<PathBuf>, plan: &Plan) -> PathBuf {
    flag.or_else(|| plan.config.out.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate(o) => {
            let p = plan(&o)?;
            println!("OK {} (config {})", p.scenario.name(), p.config_hash());
        }
        Command::Run(a) => {
            let p = plan(&a.common)?;
            let dir = out_root(a.out, &p).join(p.scenario.name());
            let s = output::run(&p, &dir, a.jobs).map_err(Failure::Runtime)?;
            println!("{}: {} cells computed, {} reused", s.dir.display(), s.computed, s.skipped);
            for o in s.outputs {
                println!("wrote {}", o.display());
            }
        }
        Command::Report { out } => {
            let root = out
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            print!("{}", report::report(&root).map_err(Failure::Runtime)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
