//! Sweep execution: problem generation, reference solve, seeded runs and
//! checkpoint evaluation.

use std::time::Instant;

use cspd_core::metrics::{duality_gap, evaluate, solve_reference, GapReport};
use cspd_core::problems::{
    generate_pricing, generate_qcqp, generate_zero_sum_toy, generate_zero_sum_toy_with_budget,
    PricingSpec, QcqpSpec, ThetaMode, TOY_BUDGET,
};
use cspd_core::solver::{run_adp_cspd_with_clock, run_basic_cspd_with_clock, Clock, NoClock};
use cspd_core::{
    LeadingCoefficients, ProblemInstance, ReferenceSolution, RunConfig, ScheduleKind,
    StepMultipliers, StepSchedule,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ProblemKind, SchedulePreset, SolverKind, ThetaModeName};

/// A generated problem with its reference saddle point.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: ProblemInstance,
    pub reference: ReferenceSolution,
}

#[derive(Debug, thiserror::Error)]
pub enum PrepareError {
    #[error("problem generation failed: {0}")]
    Generate(cspd_core::Error),
    #[error("reference solve failed: {0}")]
    Reference(cspd_core::Error),
}

pub fn generate_problem(cfg: &ExperimentConfig) -> cspd_core::Result<ProblemInstance> {
    Ok(match cfg.problem.kind {
        ProblemKind::Qcqp => generate_qcqp(&qcqp_spec(cfg))?.instance,
        ProblemKind::Pricing => generate_pricing(&pricing_spec(cfg))?.instance,
        ProblemKind::Toy => generate_zero_sum_toy_with_budget(toy_budget(cfg)).instance,
    })
}

/// The toy carries its own grid-derived reference; the other families use
/// the deterministic reference solver.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, PrepareError> {
    if cfg.problem.kind == ProblemKind::Toy {
        let budget = toy_budget(cfg);
        let toy = if budget == TOY_BUDGET {
            generate_zero_sum_toy()
        } else {
            generate_zero_sum_toy_with_budget(budget)
        };
        return Ok(Prepared {
            problem: toy.instance,
            reference: toy.reference,
        });
    }
    let problem = generate_problem(cfg).map_err(PrepareError::Generate)?;
    let reference =
        solve_reference(&problem, cfg.reference.target_tol).map_err(PrepareError::Reference)?;
    Ok(Prepared { problem, reference })
}

fn qcqp_spec(cfg: &ExperimentConfig) -> QcqpSpec {
    let p = &cfg.problem;
    QcqpSpec {
        d: p.d.unwrap_or(0),
        m: p.m.unwrap_or(0),
        seed: p.seed,
        theta_mode: match p.theta_mode {
            Some(ThetaModeName::Interior) => ThetaMode::Interior,
            _ => ThetaMode::Boundary,
        },
    }
}

fn pricing_spec(cfg: &ExperimentConfig) -> PricingSpec {
    let p = &cfg.problem;
    let mut spec = PricingSpec::new(p.d.unwrap_or(0), p.m.unwrap_or(0), p.seed);
    if let Some(lo) = p.p_min {
        spec.p_min = lo;
    }
    if let Some(hi) = p.p_max {
        spec.p_max = hi;
    }
    spec
}

fn toy_budget(cfg: &ExperimentConfig) -> f64 {
    cfg.problem.budget.unwrap_or(TOY_BUDGET)
}

/// Step schedule for one run of `solver`; `horizon` is only read by basic.
pub fn schedule_for(
    cfg: &ExperimentConfig,
    problem: &ProblemInstance,
    solver: SolverKind,
    horizon: u64,
) -> cspd_core::Result<StepSchedule> {
    let kind = match solver {
        SolverKind::Basic => ScheduleKind::BasicFixed { horizon },
        SolverKind::Adaptive => ScheduleKind::AdaptiveOpen,
    };
    let preset = match (cfg.schedule.preset, cfg.problem.kind) {
        (SchedulePreset::Experiment, ProblemKind::Qcqp) => {
            Some(LeadingCoefficients::qcqp_experiment())
        }
        (SchedulePreset::Experiment, ProblemKind::Pricing) => {
            Some(LeadingCoefficients::pricing_experiment())
        }
        _ => None,
    };
    let schedule = match preset {
        Some(c) => StepSchedule::with_coefficients(kind, c),
        None => StepSchedule::theory(kind, &problem.constants.for_schedule(&problem.dims)?),
    };
    Ok(schedule.scaled(StepMultipliers {
        dual_scale: cfg.schedule.dual_scale,
        primal_scale: cfg.schedule.primal_scale,
    }))
}

/// One evaluated checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub run_id: String,
    pub solver: SolverKind,
    pub problem: &'static str,
    pub seed: u64,
    pub n: u64,
    pub report: GapReport,
    pub max_gamma_norm: f64,
    pub max_lambda_norm: f64,
    pub wall_ms: Option<f64>,
}

impl Row {
    pub fn abs_obj_gap(&self) -> f64 {
        self.report.obj_gap.abs()
    }
}

/// A run that aborted.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub run_id: String,
    pub error: cspd_core::Error,
}

/// Rows in deterministic order plus the first failure in that order, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<Row>,
    pub failure: Option<RunFailure>,
}

#[derive(Debug, Clone)]
struct Task {
    solver: SolverKind,
    seed: u64,
    horizon: u64,
    checkpoints: Vec<u64>,
}

impl Task {
    fn run_id(&self, problem: &str) -> String {
        match self.solver {
            SolverKind::Basic => format!("basic-{problem}-n{}-s{}", self.horizon, self.seed),
            SolverKind::Adaptive => format!("adaptive-{problem}-s{}", self.seed),
        }
    }
}

fn tasks(cfg: &ExperimentConfig) -> Vec<Task> {
    let max_n = *cfg.n_list.last().expect("validated n_list");
    let mut solvers = cfg.solvers.clone();
    solvers.sort();
    solvers.dedup();
    let mut out = Vec::new();
    for solver in solvers {
        for seed in cfg.seeds() {
            match solver {
                SolverKind::Basic => out.extend(cfg.n_list.iter().map(|&n| Task {
                    solver,
                    seed,
                    horizon: n,
                    checkpoints: vec![n],
                })),
                SolverKind::Adaptive => out.push(Task {
                    solver,
                    seed,
                    horizon: max_n,
                    checkpoints: cfg.n_list.clone(),
                }),
            }
        }
    }
    out
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

fn execute(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    task: &Task,
) -> Result<Vec<Row>, RunFailure> {
    let p = &prepared.problem;
    let run_id = task.run_id(p.name);
    let fail = |error| RunFailure {
        run_id: run_id.clone(),
        error,
    };
    let schedule = schedule_for(cfg, p, task.solver, task.horizon).map_err(fail)?;
    let run_cfg = RunConfig::new(task.horizon, schedule, task.seed)
        .with_checkpoints(task.checkpoints.clone());
    let trace = if cfg.metrics.wall_clock {
        let clock = WallClock(Instant::now());
        run(p, &run_cfg, task.solver, &clock)
    } else {
        run(p, &run_cfg, task.solver, &NoClock)
    }
    .map_err(fail)?;

    let mut rows = Vec::with_capacity(trace.records.len());
    for rec in &trace.records {
        let mut report = evaluate(&rec.x_bar, &rec.y_bar, p, &prepared.reference).map_err(fail)?;
        if cfg.metrics.duality_gap {
            report.duality_gap = duality_gap(&rec.x_bar, &rec.y_bar, p, cfg.reference.target_tol)
                .map_err(fail)?
                .value();
        }
        rows.push(Row {
            run_id: run_id.clone(),
            solver: task.solver,
            problem: p.name,
            seed: task.seed,
            n: rec.t,
            report,
            max_gamma_norm: rec.gamma_norm_max,
            max_lambda_norm: rec.lambda_norm_max,
            wall_ms: cfg.metrics.wall_clock.then_some(rec.wall_ms),
        });
    }
    Ok(rows)
}

fn run(
    p: &ProblemInstance,
    cfg: &RunConfig,
    solver: SolverKind,
    clock: &dyn Clock,
) -> cspd_core::Result<cspd_core::RunTrace> {
    match solver {
        SolverKind::Basic => run_basic_cspd_with_clock(p, cfg, clock),
        SolverKind::Adaptive => run_adp_cspd_with_clock(p, cfg, clock),
    }
}

/// Runs every (solver, horizon-or-checkpoints, seed) task on up to `jobs`
/// threads (`0` = rayon's default). Output order does not depend on `jobs`.
pub fn run_sweep(cfg: &ExperimentConfig, prepared: &Prepared, jobs: usize) -> SweepOutcome {
    let tasks = tasks(cfg);
    let work = || -> Vec<Result<Vec<Row>, RunFailure>> {
        tasks
            .par_iter()
            .map(|t| execute(cfg, prepared, t))
            .collect()
    };
    let results = if jobs == 0 {
        work()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        }
    };
    let mut rows = Vec::new();
    let mut failure = None;
    for r in results {
        match r {
            Ok(mut v) => rows.append(&mut v),
            Err(f) => {
                failure.get_or_insert(f);
            }
        }
    }
    rows.sort_by_key(|r| (r.solver, r.seed, r.n));
    SweepOutcome { rows, failure }
}
