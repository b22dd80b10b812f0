use anyhow::Result;
use clap::{Parser, Subcommand};
use klflow::config::{Case, ExperimentConfig};
use klflow::{experiments, verify};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "klflow", version, about = "Gradient-flow experiments with certified loss bounds")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Flat `key = value` config file; defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overridden by KLFLOW_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent draws.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    Linear(RunArgs),
    Lemniscate(RunArgs),
    Logistic(RunArgs),
    Sines(RunArgs),
    Twolayer(RunArgs),
    /// Run the property suites: all, or one of specfun, linalg, domain,
    /// model, loss, ntk, flow, bounds.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
    },
}

fn run_case(case: Case, args: RunArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_file(case, p)?,
        None => ExperimentConfig::new(case),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.output_dir = o;
    }
    if let Some(o) = std::env::var_os("KLFLOW_OUT") {
        cfg.output_dir = PathBuf::from(o);
    }
    cfg.jobs = args.jobs.max(1);
    let tables = experiments::run(&cfg)?;
    for p in experiments::write_all(&tables, &cfg.output_dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Linear(a) => run_case(Case::Linear, a),
        Cmd::Lemniscate(a) => run_case(Case::Lemniscate, a),
        Cmd::Logistic(a) => run_case(Case::Logistic, a),
        Cmd::Sines(a) => run_case(Case::Sines, a),
        Cmd::Twolayer(a) => run_case(Case::TwoLayer, a),
        Cmd::Verify { suite } => match verify::run(&suite) {
            Ok(checks) => {
                verify::print_table(&checks, std::io::stdout().lock()).ok();
                let failed = checks.iter().filter(|c| !c.pass).count();
                if failed > 0 {
                    eprintln!("{failed} propert{} failed", if failed == 1 { "y" } else { "ies" });
                    return ExitCode::FAILURE;
                }
                return ExitCode::SUCCESS;
            }
            Err(e) => Err(e),
        },
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
