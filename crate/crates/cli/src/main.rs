use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use cspd::acceptance::{run_acceptance, AcceptanceConfig};
use cspd::experiment::{prepare, run_sweep};
use cspd::output::{render_csv, summarize};
use cspd::{ExperimentConfig, Overrides};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "cspd",
    version,
    about = "Stochastic primal-dual saddle point experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write the CSV and summary JSON.
    Run(Common),
    /// Run the acceptance criteria; exit 0 iff all pass.
    Check(Common),
    /// Print the reference saddle point of the configured problem as JSON.
    Reference(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    config: PathBuf,
    /// Override a config key, e.g. `--set schedule.dual_scale=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// First run seed; the seed count stays as configured.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `output.dir`, then $CSPD_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent runs (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, ExitCode> {
        let overrides = Overrides {
            set: self.set.clone(),
            seed: self.seed,
            out: self.out.clone(),
        };
        ExperimentConfig::load(&self.config, &overrides).map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(2)
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => c.load().map(|cfg| cmd_run(&cfg, c.jobs)),
        Command::Check(c) => c.load().map(|cfg| cmd_check(&cfg, c.jobs)),
        Command::Reference(c) => c.load().map(|cfg| cmd_reference(&cfg)),
    };
    match result {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
        Err(code) => code,
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(cfg: &ExperimentConfig, jobs: usize) -> anyhow::Result<ExitCode> {
    let prepared = prepare(cfg)?;
    let outcome = run_sweep(cfg, &prepared, jobs);
    let dir = cfg.out_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_file(&dir, &cfg.output.csv_name, &render_csv(&outcome.rows))?;
    let summary = summarize(prepared.problem.name, &prepared.reference, &outcome);
    write_file(
        &dir,
        &cfg.output.summary_name,
        &serde_json::to_string_pretty(&summary)?,
    )?;
    for s in &summary.solvers {
        let fit = |f: &Option<cspd::output::FitSummary>| match f {
            Some(f) => format!("{:.3} (r2 {:.3})", f.slope, f.r2),
            None => "n/a".into(),
        };
        println!(
            "{} {}: gap slope {}, feas slope {}",
            s.problem,
            s.solver.name(),
            fit(&s.obj_gap_fit),
            fit(&s.feas_fit)
        );
    }
    println!("wrote {} rows to {}", outcome.rows.len(), dir.display());
    if let Some(f) = &outcome.failure {
        eprintln!("error: run {} aborted: {}", f.run_id, f.error);
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(cfg: &ExperimentConfig, jobs: usize) -> anyhow::Result<ExitCode> {
    let mut acceptance = AcceptanceConfig::from_experiment(cfg);
    acceptance.jobs = jobs;
    let results = run_acceptance(&acceptance, &mut |o| println!("{o}"));
    let passed = results.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    Ok(if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

#[derive(Serialize)]
struct ReferenceJson<'a> {
    problem: &'a str,
    x_star: &'a [f64],
    y_star: &'a [f64],
    gamma_star: &'a [f64],
    lambda_star: &'a [f64],
    f_star: f64,
    tolerance: f64,
    iterations: u64,
}

fn cmd_reference(cfg: &ExperimentConfig) -> anyhow::Result<ExitCode> {
    let prepared = prepare(cfg)?;
    let r = &prepared.reference;
    let json = ReferenceJson {
        problem: prepared.problem.name,
        x_star: &r.x_star,
        y_star: &r.y_star,
        gamma_star: &r.gamma_star,
        lambda_star: &r.lambda_star,
        f_star: r.f_star,
        tolerance: r.tolerance,
        iterations: r.iterations,
    };
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(ExitCode::SUCCESS)
}
