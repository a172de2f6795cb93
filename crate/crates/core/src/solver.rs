//! Basic-CSPD and Adp-CSPD iteration loops.
//!
//! Iteration `t` (0-based) performs, in order:
//!
//! 1. draw `h(x_t)` and `g(y_t)` from the [`Slot::Dual`] stream and update
//!    the multipliers `γ_{t+1}`, `λ_{t+1}`;
//! 2. draw `∇̃_x f`, `∇̃h`, `∇̃_y f`, `∇̃g` at `(x_t, y_t)` from the
//!    [`Slot::Primal`] stream and take the descent step on `x` and the ascent
//!    step on `y`, both using the new multipliers;
//! 3. fold `(x_{t+1}, y_{t+1})` into the running averages.
//!
//! The adaptive loop only differs in the prox maps (anchored at the initial
//! point) and in the step sizes, which never depend on the horizon.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, Error, Result};
use crate::linalg::{all_finite, Matrix};
use crate::problem::{IterateState, ProblemInstance};
use crate::prox;
use crate::rng::{SampleStream, Slot};
use crate::schedule::{ScheduleKind, StepSchedule, StepSizes};

/// Starting point `(x_0, y_0, γ_0, λ_0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl InitialPoint {
    /// Projections of the origin onto `X` and `Y`, zero multipliers.
    pub fn default_for(problem: &ProblemInstance) -> Self {
        let d = problem.dims;
        let mut x = vec![0.0; d.dx];
        let mut y = vec![0.0; d.dy];
        problem.proj_x.project_in_place(&mut x);
        problem.proj_y.project_in_place(&mut y);
        Self {
            x,
            y,
            gamma: vec![0.0; d.m1],
            lambda: vec![0.0; d.m2],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_iters: u64,
    pub schedule: StepSchedule,
    pub seed: u64,
    /// Sorted iteration counts in `[1, n_iters]` at which averages are
    /// recorded.
    pub checkpoints: Vec<u64>,
    pub initial_point: Option<InitialPoint>,
}

impl RunConfig {
    pub fn new(n_iters: u64, schedule: StepSchedule, seed: u64) -> Self {
        Self {
            n_iters,
            schedule,
            seed,
            checkpoints: vec![n_iters],
            initial_point: None,
        }
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<u64>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn with_initial_point(mut self, p: InitialPoint) -> Self {
        self.initial_point = Some(p);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_iters < 1 {
            return Err(config_err("n_iters must be at least 1"));
        }
        self.schedule.validate()?;
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("checkpoints must be strictly increasing"));
        }
        if let (Some(&first), Some(&last)) = (self.checkpoints.first(), self.checkpoints.last()) {
            if first < 1 || last > self.n_iters {
                return Err(config_err(format!(
                    "checkpoints must lie in [1, {}]",
                    self.n_iters
                )));
            }
        }
        Ok(())
    }
}

/// Averages recorded after `t` iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRecord {
    pub t: u64,
    pub x_bar: Vec<f64>,
    pub y_bar: Vec<f64>,
    pub gamma_norm_max: f64,
    pub lambda_norm_max: f64,
    /// Milliseconds since the run started, as reported by the [`Clock`].
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<CheckpointRecord>,
    pub final_state: IterateState,
}

/// Time source for checkpoint records. The core crate has no clock of its
/// own; [`NoClock`] reports zero.
pub trait Clock {
    fn elapsed_ms(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

/// Which prox maps the loop applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Basic,
    Adaptive,
}

/// Algorithm 1: constant steps over a horizon fixed in advance.
pub fn run_basic_cspd(problem: &ProblemInstance, config: &RunConfig) -> Result<RunTrace> {
    run_basic_cspd_with_clock(problem, config, &NoClock)
}

pub fn run_basic_cspd_with_clock(
    problem: &ProblemInstance,
    config: &RunConfig,
    clock: &dyn Clock,
) -> Result<RunTrace> {
    match config.schedule.kind {
        ScheduleKind::BasicFixed { horizon } if horizon == config.n_iters => {}
        _ => {
            return Err(config_err(
                "basic CSPD needs a BasicFixed schedule whose horizon equals n_iters",
            ))
        }
    }
    let schedule = config.schedule;
    run_primal_dual(
        problem,
        config,
        Variant::Basic,
        |t| schedule.steps_at(t),
        clock,
    )
}

/// Algorithm 2: anchored prox maps with horizon-free steps.
pub fn run_adp_cspd(problem: &ProblemInstance, config: &RunConfig) -> Result<RunTrace> {
    run_adp_cspd_with_clock(problem, config, &NoClock)
}

pub fn run_adp_cspd_with_clock(
    problem: &ProblemInstance,
    config: &RunConfig,
    clock: &dyn Clock,
) -> Result<RunTrace> {
    if config.schedule.kind != ScheduleKind::AdaptiveOpen {
        return Err(config_err("adaptive CSPD needs an AdaptiveOpen schedule"));
    }
    if let Some(p) = &config.initial_point {
        if p.gamma.iter().chain(&p.lambda).any(|&v| v != 0.0) {
            return Err(config_err(
                "adaptive CSPD requires zero initial multipliers",
            ));
        }
    }
    let schedule = config.schedule;
    run_primal_dual(
        problem,
        config,
        Variant::Adaptive,
        |t| schedule.steps_at(t),
        clock,
    )
}

/// The shared loop with an arbitrary step source. `config.schedule` is only
/// validated, the steps come from `steps`.
pub fn run_primal_dual<S>(
    problem: &ProblemInstance,
    config: &RunConfig,
    variant: Variant,
    mut steps: S,
    clock: &dyn Clock,
) -> Result<RunTrace>
where
    S: FnMut(u64) -> Result<StepSizes>,
{
    problem.validate()?;
    config.validate()?;
    let d = problem.dims;
    let init = match &config.initial_point {
        Some(p) => p.clone(),
        None => InitialPoint::default_for(problem),
    };
    check_len("initial x", d.dx, init.x.len())?;
    check_len("initial y", d.dy, init.y.len())?;
    check_len("initial gamma", d.m1, init.gamma.len())?;
    check_len("initial lambda", d.m2, init.lambda.len())?;
    if init.gamma.iter().chain(&init.lambda).any(|&v| v < 0.0) {
        return Err(config_err("initial multipliers must be nonnegative"));
    }

    let mut state = IterateState::new(
        init.x.clone(),
        init.y.clone(),
        init.gamma.clone(),
        init.lambda.clone(),
    );
    let mut ws = Workspace::new(problem);
    let mut stream = SampleStream::for_iteration(config.seed, 0, Slot::Dual);
    let mut records = Vec::with_capacity(config.checkpoints.len());
    let mut next_checkpoint = config.checkpoints.iter().peekable();
    let oracle = problem.oracle.as_ref();

    for t in 0..config.n_iters {
        let s = steps(t)?;

        stream.reposition(t, Slot::Dual);
        oracle.sample_h_value(&state.x, &mut stream, &mut ws.h_val);
        oracle.sample_g_value(&state.y, &mut stream, &mut ws.g_val);
        match variant {
            Variant::Basic => {
                prox::dual_prox_basic_into(&state.gamma, &ws.h_val, s.beta, &mut ws.gamma_next)?;
                prox::dual_prox_basic_into(&state.lambda, &ws.g_val, s.alpha, &mut ws.lambda_next)?;
            }
            Variant::Adaptive => {
                prox::dual_prox_adaptive_into(
                    &state.gamma,
                    &init.gamma,
                    &ws.h_val,
                    s.beta,
                    s.tau,
                    &mut ws.gamma_next,
                )?;
                prox::dual_prox_adaptive_into(
                    &state.lambda,
                    &init.lambda,
                    &ws.g_val,
                    s.alpha,
                    s.nu,
                    &mut ws.lambda_next,
                )?;
            }
        }

        stream.reposition(t, Slot::Primal);
        oracle.sample_grad_x(&state.x, &state.y, &mut stream, &mut ws.grad_x);
        if d.m1 > 0 {
            oracle.sample_h_jacobian(&state.x, &mut stream, &mut ws.h_jac);
        }
        oracle.sample_grad_y(&state.x, &state.y, &mut stream, &mut ws.grad_y);
        if d.m2 > 0 {
            oracle.sample_g_jacobian(&state.y, &mut stream, &mut ws.g_jac);
        }
        prox::combine_grad_x_into(&ws.grad_x, &ws.h_jac, &ws.gamma_next, &mut ws.dir_x)?;
        prox::combine_grad_y_into(&ws.grad_y, &ws.g_jac, &ws.lambda_next, &mut ws.dir_y)?;
        match variant {
            Variant::Basic => {
                prox::primal_prox_basic_into(
                    &state.x,
                    &ws.dir_x,
                    s.eta,
                    &problem.proj_x,
                    &mut ws.x_next,
                )?;
                prox::primal_ascent_basic_into(
                    &state.y,
                    &ws.dir_y,
                    s.kappa,
                    &problem.proj_y,
                    &mut ws.y_next,
                )?;
            }
            Variant::Adaptive => {
                prox::primal_prox_adaptive_into(
                    &state.x,
                    &init.x,
                    &ws.dir_x,
                    s.eta,
                    s.rho,
                    &problem.proj_x,
                    &mut ws.x_next,
                )?;
                prox::primal_ascent_adaptive_into(
                    &state.y,
                    &init.y,
                    &ws.dir_y,
                    s.kappa,
                    s.phi,
                    &problem.proj_y,
                    &mut ws.y_next,
                )?;
            }
        }

        for (block, v) in [
            ("gamma", &ws.gamma_next),
            ("lambda", &ws.lambda_next),
            ("x", &ws.x_next),
            ("y", &ws.y_next),
        ] {
            if !all_finite(v) {
                return Err(Error::NonFinite {
                    iteration: t,
                    block,
                });
            }
        }
        core::mem::swap(&mut state.gamma, &mut ws.gamma_next);
        core::mem::swap(&mut state.lambda, &mut ws.lambda_next);
        core::mem::swap(&mut state.x, &mut ws.x_next);
        core::mem::swap(&mut state.y, &mut ws.y_next);
        state.record_current();

        let done = t + 1;
        if next_checkpoint.peek().is_some_and(|&&c| c == done) {
            next_checkpoint.next();
            records.push(CheckpointRecord {
                t: done,
                x_bar: state.average.x_mean(),
                y_bar: state.average.y_mean(),
                gamma_norm_max: state.max_gamma_norm,
                lambda_norm_max: state.max_lambda_norm,
                wall_ms: clock.elapsed_ms(),
            });
        }
    }

    Ok(RunTrace {
        records,
        final_state: state,
    })
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::OracleDimension {
            channel: what,
            expected,
            got,
        });
    }
    Ok(())
}

/// Scratch buffers reused across iterations.
struct Workspace {
    h_val: Vec<f64>,
    g_val: Vec<f64>,
    grad_x: Vec<f64>,
    grad_y: Vec<f64>,
    h_jac: Matrix,
    g_jac: Matrix,
    dir_x: Vec<f64>,
    dir_y: Vec<f64>,
    gamma_next: Vec<f64>,
    lambda_next: Vec<f64>,
    x_next: Vec<f64>,
    y_next: Vec<f64>,
}

impl Workspace {
    fn new(problem: &ProblemInstance) -> Self {
        let d = problem.dims;
        Self {
            h_val: vec![0.0; d.m1],
            g_val: vec![0.0; d.m2],
            grad_x: vec![0.0; d.dx],
            grad_y: vec![0.0; d.dy],
            h_jac: Matrix::zeros(d.dx, d.m1),
            g_jac: Matrix::zeros(d.dy, d.m2),
            dir_x: vec![0.0; d.dx],
            dir_y: vec![0.0; d.dy],
            gamma_next: vec![0.0; d.m1],
            lambda_next: vec![0.0; d.m2],
            x_next: vec![0.0; d.dx],
            y_next: vec![0.0; d.dy],
        }
    }
}
