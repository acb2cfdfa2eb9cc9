//! Scenario runner: `chaincert --config scenario.cfg --out results/`.

mod config;
mod error;
mod pipeline;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::config::Scenario;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "chaincert", version, about = "Certify Hölder-type bounds on finite metric measure spaces")]
struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the scenario.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random stream of the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Treat warnings as failures.
    #[arg(long)]
    strict: bool,
}

fn execute(args: &Args) -> Result<(), CliError> {
    let mut scenario = Scenario::load(&args.config)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
        scenario.functions.seed = seed;
        if let Some(mc) = scenario.mc.as_mut() {
            mc.seed = seed;
        }
    }
    let dir = args.out.clone().or_else(|| scenario.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let mut out = match pipeline::run(&scenario) {
        Ok(out) => out,
        Err(e @ CliError::Precondition(_)) => {
            let summary = serde_json::json!({ "name": scenario.name, "status": "precondition", "exit_code": 3, "error": e.to_string() });
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    for w in &out.summary.warnings {
        log::warn!("{w}");
    }
    let failures = out.failures();
    let outcome = if failures > 0 {
        Err(CliError::Assertion(format!("{failures} checks failed; see verify.csv and summary.json")))
    } else if args.strict && !out.summary.warnings.is_empty() {
        Err(CliError::Assertion(format!("{} warnings under --strict", out.summary.warnings.len())))
    } else {
        Ok(())
    };
    out.summary.exit_code = outcome.as_ref().err().map_or(0, CliError::exit_code);
    out.summary.status = if outcome.is_ok() { "ok".into() } else { "assertion".into() };
    report::emit_report(&out, &dir)?;
    for c in &out.summary.certificates {
        println!(
            "{:?}: R = {}, A = {}, B = {}, K = {}{}",
            c.theorem,
            c.r,
            c.a,
            c.b,
            c.k,
            c.c.map_or(String::new(), |c| format!(", C = {c}"))
        );
    }
    for s in &out.summary.verification {
        println!("{}: {}/{} passed, worst margin {:e}", s.name, s.count - s.failures, s.count, s.worst_margin);
    }
    for m in &out.summary.mc {
        for s in &m.stats {
            println!("{:?} {}: mean {:e}, stderr {:e}", m.theorem, s.name, s.mean, s.stderr);
        }
    }
    println!("results written to {}", dir.display());
    outcome
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    if let Some(jobs) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("cannot configure {jobs} workers: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
