use std::sync::{Arc, Mutex};

use cspd_core::problems::{
    generate_bilinear_toy, generate_pricing, generate_qcqp, generate_zero_sum_toy, PricingSpec,
    QcqpSpec, ThetaMode,
};
use cspd_core::schedule::{LeadingCoefficients, ScheduleKind, StepSchedule, StepSizes};
use cspd_core::solver::{
    run_adp_cspd, run_basic_cspd, run_primal_dual, InitialPoint, NoClock, RunConfig, RunTrace,
    Variant,
};
use cspd_core::{
    Dims, Error, Matrix, ProblemConstants, ProblemInstance, SampleStream, SamplingOracle,
};

fn basic_config(problem: &ProblemInstance, n: u64, seed: u64) -> RunConfig {
    let c = problem.constants.for_schedule(&problem.dims).unwrap();
    RunConfig::new(
        n,
        StepSchedule::theory(ScheduleKind::BasicFixed { horizon: n }, &c),
        seed,
    )
}

fn adaptive_config(problem: &ProblemInstance, n: u64, seed: u64) -> RunConfig {
    let c = problem.constants.for_schedule(&problem.dims).unwrap();
    RunConfig::new(
        n,
        StepSchedule::theory(ScheduleKind::AdaptiveOpen, &c),
        seed,
    )
}

fn bilinear_start() -> InitialPoint {
    InitialPoint {
        x: vec![0.5],
        y: vec![0.5],
        gamma: vec![],
        lambda: vec![],
    }
}

/// Reference recursion for `f = x·y` on `[−1, 1]²`, written from the update
/// rules directly. Returns the averages of iterates `1..=n`.
fn bilinear_recursion(n: u64, adaptive: bool) -> (f64, f64) {
    let clip = |v: f64| v.clamp(-1.0, 1.0);
    let (x0, y0) = (0.5, 0.5);
    let (mut x, mut y) = (x0, y0);
    let (mut sx, mut sy) = (0.0, 0.0);
    for t in 0..n {
        let (xn, yn) = if adaptive {
            let tf = t as f64;
            let eta = 16.0 * (tf + 2.0).sqrt();
            let rho = 16.0 * ((tf + 3.0).sqrt() - (tf + 2.0).sqrt());
            (
                clip((eta * x + rho * x0 - y) / (eta + rho)),
                clip((eta * y + rho * y0 + x) / (eta + rho)),
            )
        } else {
            let eta = 4.0 * (n as f64).sqrt();
            (clip(x - y / eta), clip(y + x / eta))
        };
        x = xn;
        y = yn;
        sx += x;
        sy += y;
    }
    (sx / n as f64, sy / n as f64)
}

#[test]
fn bilinear_basic_matches_recursion_and_approaches_saddle() {
    let p = generate_bilinear_toy();
    let n = 10_000;
    let trace = run_basic_cspd(
        &p,
        &basic_config(&p, n, 0).with_initial_point(bilinear_start()),
    )
    .unwrap();
    let rec = trace.records.last().unwrap();
    let (ox, oy) = bilinear_recursion(n, false);
    assert!((rec.x_bar[0] - ox).abs() < 1e-12);
    assert!((rec.y_bar[0] - oy).abs() < 1e-12);
    assert!(ox.hypot(oy) <= 0.1, "‖avg‖ = {}", ox.hypot(oy));
}

#[test]
fn bilinear_adaptive_matches_recursion() {
    let p = generate_bilinear_toy();
    let n = 10_000;
    let trace = run_adp_cspd(
        &p,
        &adaptive_config(&p, n, 0).with_initial_point(bilinear_start()),
    )
    .unwrap();
    let rec = trace.records.last().unwrap();
    let (ox, oy) = bilinear_recursion(n, true);
    assert!((rec.x_bar[0] - ox).abs() < 1e-12);
    assert!((rec.y_bar[0] - oy).abs() < 1e-12);
    // The anchor terms pull the spiral toward (0.5, 0.5); the recursion
    // settles at ‖avg‖ ≈ 0.114 for this horizon.
    let norm = ox.hypot(oy);
    assert!((norm - 0.1137).abs() < 1e-3, "‖avg‖ = {norm}");
}

#[derive(Debug)]
struct ZeroOracle;

impl SamplingOracle for ZeroOracle {
    fn sample_grad_x(&self, _: &[f64], _: &[f64], _: &mut SampleStream, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn sample_grad_y(&self, _: &[f64], _: &[f64], _: &mut SampleStream, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn sample_h_value(&self, _: &[f64], _: &mut SampleStream, _: &mut [f64]) {}
    fn sample_h_jacobian(&self, _: &[f64], _: &mut SampleStream, _: &mut Matrix) {}
    fn sample_g_value(&self, _: &[f64], _: &mut SampleStream, _: &mut [f64]) {}
    fn sample_g_jacobian(&self, _: &[f64], _: &mut SampleStream, _: &mut Matrix) {}
}

fn zero_problem() -> ProblemInstance {
    ProblemInstance {
        name: "zero",
        dims: Dims::new(3, 2, 0, 0).unwrap(),
        constants: ProblemConstants::default(),
        oracle: Arc::new(ZeroOracle),
        exact: None,
        proj_x: cspd_core::ProjectionOp::FullSpace,
        proj_y: cspd_core::ProjectionOp::Ball {
            center: vec![0.0; 2],
            radius: 1.0,
        },
        x_best_response_attained: false,
        y_best_response_attained: false,
    }
}

#[test]
fn zero_gradients_keep_the_start_point() {
    let p = zero_problem();
    let start = InitialPoint {
        x: vec![1.0, -2.0, 3.0],
        y: vec![0.3, -0.4],
        gamma: vec![],
        lambda: vec![],
    };
    for trace in [
        run_basic_cspd(
            &p,
            &basic_config(&p, 500, 1).with_initial_point(start.clone()),
        )
        .unwrap(),
        run_adp_cspd(
            &p,
            &adaptive_config(&p, 500, 1).with_initial_point(start.clone()),
        )
        .unwrap(),
    ] {
        assert_eq!(trace.final_state.x, start.x);
        assert_eq!(trace.final_state.y, start.y);
        let rec = trace.records.last().unwrap();
        for (avg, v) in rec
            .x_bar
            .iter()
            .chain(&rec.y_bar)
            .zip(start.x.iter().chain(&start.y))
        {
            assert!((avg - v).abs() < 1e-12);
        }
    }
}

/// Forwards to another oracle and keeps every `(x_t, y_t)` the primal query
/// sees.
struct Recording {
    inner: Arc<dyn SamplingOracle>,
    points: Mutex<Vec<(Vec<f64>, Vec<f64>)>>,
}

impl SamplingOracle for Recording {
    fn sample_grad_x(&self, x: &[f64], y: &[f64], rng: &mut SampleStream, out: &mut [f64]) {
        self.points.lock().unwrap().push((x.to_vec(), y.to_vec()));
        self.inner.sample_grad_x(x, y, rng, out);
    }
    fn sample_grad_y(&self, x: &[f64], y: &[f64], rng: &mut SampleStream, out: &mut [f64]) {
        self.inner.sample_grad_y(x, y, rng, out);
    }
    fn sample_h_value(&self, x: &[f64], rng: &mut SampleStream, out: &mut [f64]) {
        self.inner.sample_h_value(x, rng, out);
    }
    fn sample_h_jacobian(&self, x: &[f64], rng: &mut SampleStream, out: &mut Matrix) {
        self.inner.sample_h_jacobian(x, rng, out);
    }
    fn sample_g_value(&self, y: &[f64], rng: &mut SampleStream, out: &mut [f64]) {
        self.inner.sample_g_value(y, rng, out);
    }
    fn sample_g_jacobian(&self, y: &[f64], rng: &mut SampleStream, out: &mut Matrix) {
        self.inner.sample_g_jacobian(y, rng, out);
    }
}

fn recorded(problem: &ProblemInstance) -> (ProblemInstance, Arc<Recording>) {
    let rec = Arc::new(Recording {
        inner: problem.oracle.clone(),
        points: Mutex::new(Vec::new()),
    });
    let mut p = problem.clone();
    p.oracle = rec.clone();
    (p, rec)
}

fn bundled() -> Vec<ProblemInstance> {
    vec![
        generate_zero_sum_toy().instance,
        generate_bilinear_toy(),
        generate_qcqp(&QcqpSpec {
            d: 6,
            m: 3,
            seed: 3,
            theta_mode: ThetaMode::Boundary,
        })
        .unwrap()
        .instance,
        generate_pricing(&PricingSpec::new(4, 30, 3))
            .unwrap()
            .instance,
    ]
}

#[test]
fn iterates_stay_feasible_and_multipliers_nonnegative() {
    for problem in bundled() {
        let (p, rec) = recorded(&problem);
        let coef = LeadingCoefficients::uniform(5.0, 50.0);
        let n = 300;
        let cfg = RunConfig::new(
            n,
            StepSchedule::with_coefficients(ScheduleKind::AdaptiveOpen, coef),
            7,
        );
        let trace = run_adp_cspd(&p, &cfg).unwrap();
        for (x, y) in rec.points.lock().unwrap().iter() {
            assert!(p.proj_x.contains(x, 1e-10), "{}: x left X", p.name);
            assert!(p.proj_y.contains(y, 1e-10), "{}: y left Y", p.name);
        }
        // Prefix consistency lets every shorter run stand in for step t.
        for t in [1, 2, 5, 50, n] {
            let short = run_adp_cspd(
                &problem,
                &RunConfig {
                    n_iters: t,
                    checkpoints: vec![t],
                    ..cfg.clone()
                },
            )
            .unwrap();
            let s = &short.final_state;
            assert!(s.gamma.iter().chain(&s.lambda).all(|v| *v >= 0.0));
        }
        let basic = run_basic_cspd(
            &problem,
            &RunConfig::new(
                n,
                StepSchedule::with_coefficients(ScheduleKind::BasicFixed { horizon: n }, coef),
                7,
            ),
        )
        .unwrap();
        let s = &basic.final_state;
        assert!(s.gamma.iter().chain(&s.lambda).all(|v| *v >= 0.0));
        assert!(trace.final_state.max_gamma_norm >= 0.0);
    }
}

#[test]
fn adaptive_with_zero_anchors_equals_basic() {
    let toy = generate_zero_sum_toy().instance;
    let n = 2_000;
    let cfg = basic_config(&toy, n, 11);
    let schedule = cfg.schedule;
    let basic = run_basic_cspd(&toy, &cfg).unwrap();
    let zeroed = |t: u64| -> cspd_core::Result<StepSizes> {
        let s = schedule.steps_at(t)?;
        Ok(StepSizes {
            rho: 0.0,
            phi: 0.0,
            tau: 0.0,
            nu: 0.0,
            ..s
        })
    };
    let adaptive = run_primal_dual(&toy, &cfg, Variant::Adaptive, zeroed, &NoClock).unwrap();
    assert_eq!(basic, adaptive);
}

fn qcqp_small() -> ProblemInstance {
    generate_qcqp(&QcqpSpec {
        d: 5,
        m: 3,
        seed: 21,
        theta_mode: ThetaMode::Boundary,
    })
    .unwrap()
    .instance
}

fn qcqp_schedule() -> StepSchedule {
    StepSchedule::with_coefficients(
        ScheduleKind::AdaptiveOpen,
        LeadingCoefficients::uniform(5.0, 60.0),
    )
}

#[test]
fn adaptive_checkpoints_are_prefix_consistent() {
    let p = qcqp_small();
    let long = run_adp_cspd(
        &p,
        &RunConfig::new(10_000, qcqp_schedule(), 5).with_checkpoints(vec![10, 1_000, 10_000]),
    )
    .unwrap();
    let short = run_adp_cspd(
        &p,
        &RunConfig::new(1_000, qcqp_schedule(), 5).with_checkpoints(vec![10, 1_000]),
    )
    .unwrap();
    assert_eq!(short.records[..], long.records[..2]);
}

#[test]
fn identical_configs_give_identical_traces() {
    let p = qcqp_small();
    let cfg = RunConfig::new(3_000, qcqp_schedule(), 99).with_checkpoints(vec![100, 3_000]);
    let a: RunTrace = run_adp_cspd(&p, &cfg).unwrap();
    let b = run_adp_cspd(&p, &cfg).unwrap();
    assert_eq!(a, b);
    let other = run_adp_cspd(&p, &RunConfig { seed: 100, ..cfg }).unwrap();
    assert_ne!(a.records, other.records);
}

#[test]
fn running_average_matches_stored_trajectory() {
    let (p, rec) = recorded(&generate_zero_sum_toy().instance);
    let n = 100;
    let cfg = basic_config(&p, n, 4).with_checkpoints((1..=n).collect());
    let trace = run_basic_cspd(&p, &cfg).unwrap();
    let points = rec.points.lock().unwrap();
    // Query t sees x_t; the averages cover x_1..x_t.
    let mut xs: Vec<Vec<f64>> = points.iter().skip(1).map(|(x, _)| x.clone()).collect();
    xs.push(trace.final_state.x.clone());
    for (k, r) in trace.records.iter().enumerate() {
        for i in 0..2 {
            let mean = xs[..=k].iter().map(|x| x[i]).sum::<f64>() / (k + 1) as f64;
            assert!((r.x_bar[i] - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        }
    }
}

#[test]
fn configuration_errors_are_reported() {
    let p = generate_zero_sum_toy().instance;
    let adaptive = adaptive_config(&p, 10, 0);
    assert!(matches!(
        run_basic_cspd(&p, &adaptive),
        Err(Error::Config(_))
    ));
    let basic = basic_config(&p, 10, 0);
    assert!(matches!(run_adp_cspd(&p, &basic), Err(Error::Config(_))));
    let mismatched = RunConfig {
        n_iters: 20,
        checkpoints: vec![20],
        ..basic.clone()
    };
    assert!(matches!(
        run_basic_cspd(&p, &mismatched),
        Err(Error::Config(_))
    ));
    let out_of_range = basic.clone().with_checkpoints(vec![5, 11]);
    assert!(matches!(
        run_basic_cspd(&p, &out_of_range),
        Err(Error::Config(_))
    ));
    let warm = adaptive.clone().with_initial_point(InitialPoint {
        gamma: vec![1.0],
        ..InitialPoint::default_for(&p)
    });
    assert!(matches!(run_adp_cspd(&p, &warm), Err(Error::Config(_))));
    let wrong_dim = basic.with_initial_point(InitialPoint {
        x: vec![0.0; 3],
        ..InitialPoint::default_for(&p)
    });
    assert!(matches!(
        run_basic_cspd(&p, &wrong_dim),
        Err(Error::OracleDimension { .. })
    ));
}

#[test]
fn divergence_aborts_with_iteration_index() {
    let p = qcqp_small();
    // Absurdly large primal steps on a quadratic blow up within a few dozen
    // iterations.
    let cfg = RunConfig::new(
        10_000,
        StepSchedule::with_coefficients(
            ScheduleKind::AdaptiveOpen,
            LeadingCoefficients::uniform(1e-3, 1e-3),
        ),
        0,
    );
    match run_adp_cspd(&p, &cfg) {
        Err(Error::NonFinite { iteration, .. }) => assert!(iteration < 10_000),
        other => panic!("expected a non-finite abort, got {other:?}"),
    }
}
