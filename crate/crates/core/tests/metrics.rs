use std::sync::Arc;

use cspd_core::metrics::{
    duality_gap, evaluate, slope_fit, solve_best_response_y, solve_reference, solve_reference_with,
    theory_constant_r, DualityGap, ReferenceConfig,
};
use cspd_core::problems::{
    generate_bilinear_toy, generate_qcqp, generate_zero_sum_toy, QcqpSpec, ThetaMode,
};
use cspd_core::schedule::{ScheduleKind, StepSchedule};
use cspd_core::solver::{run_basic_cspd, InitialPoint, RunConfig};
use cspd_core::{
    Dims, ExactOracle, Matrix, ProblemConstants, ProblemInstance, ProjectionOp, ReferenceSolution,
    SampleStream, SamplingOracle,
};

/// `F(x, y) = ½‖x‖²`, `H(x) = x`, no y-constraints.
#[derive(Debug)]
struct Identity;

impl ExactOracle for Identity {
    fn objective(&self, x: &[f64], _: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }
    fn grad_x(&self, x: &[f64], _: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn grad_y(&self, _: &[f64], _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn h_value(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn h_jacobian(&self, _: &[f64], out: &mut Matrix) {
        out.fill(0.0);
        for i in 0..out.rows() {
            out.set(i, i, 1.0);
        }
    }
    fn g_value(&self, _: &[f64], _: &mut [f64]) {}
    fn g_jacobian(&self, _: &[f64], _: &mut Matrix) {}
}

impl SamplingOracle for Identity {
    fn sample_grad_x(&self, x: &[f64], y: &[f64], _: &mut SampleStream, out: &mut [f64]) {
        self.grad_x(x, y, out);
    }
    fn sample_grad_y(&self, x: &[f64], y: &[f64], _: &mut SampleStream, out: &mut [f64]) {
        self.grad_y(x, y, out);
    }
    fn sample_h_value(&self, x: &[f64], _: &mut SampleStream, out: &mut [f64]) {
        self.h_value(x, out);
    }
    fn sample_h_jacobian(&self, x: &[f64], _: &mut SampleStream, out: &mut Matrix) {
        self.h_jacobian(x, out);
    }
    fn sample_g_value(&self, _: &[f64], _: &mut SampleStream, _: &mut [f64]) {}
    fn sample_g_jacobian(&self, _: &[f64], _: &mut SampleStream, _: &mut Matrix) {}
}

fn zero_reference(dx: usize, dy: usize, m1: usize, m2: usize) -> ReferenceSolution {
    ReferenceSolution {
        x_star: vec![0.0; dx],
        y_star: vec![0.0; dy],
        gamma_star: vec![0.0; m1],
        lambda_star: vec![0.0; m2],
        f_star: 0.0,
        tolerance: 0.0,
        iterations: 0,
    }
}

#[test]
fn feasibility_is_the_norm_of_the_positive_part() {
    let oracle = Arc::new(Identity);
    let p = ProblemInstance {
        name: "identity",
        dims: Dims::new(3, 1, 3, 0).unwrap(),
        constants: ProblemConstants::default(),
        oracle: oracle.clone(),
        exact: Some(oracle),
        proj_x: ProjectionOp::FullSpace,
        proj_y: ProjectionOp::FullSpace,
        x_best_response_attained: true,
        y_best_response_attained: false,
    };
    let mut reference = zero_reference(3, 1, 3, 0);
    reference.gamma_star = vec![0.0, 1.5, 0.0];
    let r = evaluate(&[-1.0, 2.0, 0.0], &[0.0], &p, &reference).unwrap();
    assert_eq!(r.feas_x, 2.0);
    assert_eq!(r.feas_y, 0.0);
    assert_eq!(r.obj_gap, 2.5);
    assert_eq!(r.lower_bound, -3.0);
    assert_eq!(r.lagrangian_at_point, 2.5 + 3.0);
    assert_eq!(r.duality_gap, None);
    assert_eq!(
        duality_gap(&[0.0; 3], &[0.0], &p, 1e-6).unwrap(),
        DualityGap::NotApplicable
    );

    let mut no_exact = p.clone();
    no_exact.exact = None;
    assert!(evaluate(&[0.0; 3], &[0.0], &no_exact, &reference).is_err());
}

#[test]
fn toy_reference_point_evaluates_to_zero() {
    let toy = generate_zero_sum_toy();
    let r = &toy.reference;
    let tol = r.tolerance.max(1e-12);
    let rep = evaluate(&r.x_star, &r.y_star, &toy.instance, r).unwrap();
    assert!(rep.obj_gap.abs() <= 10.0 * tol);
    assert!(rep.feas_x <= 10.0 * tol && rep.feas_y <= 10.0 * tol);
    assert!(rep.lower_bound_slack() >= -10.0 * tol);
    let gap = duality_gap(&r.x_star, &r.y_star, &toy.instance, 1e-9)
        .unwrap()
        .value()
        .unwrap();
    assert!(gap.abs() <= 10.0 * tol, "duality gap {gap}");
}

#[test]
fn lower_bound_and_duality_gap_dominate_along_a_run() {
    let toy = generate_zero_sum_toy();
    let p = &toy.instance;
    let r = &toy.reference;
    let c = p.constants.for_schedule(&p.dims).unwrap();
    let n = 20_000;
    let cfg = RunConfig::new(
        n,
        StepSchedule::theory(ScheduleKind::BasicFixed { horizon: n }, &c),
        3,
    )
    .with_checkpoints(vec![1, 10, 100, 1_000, 10_000, n]);
    let trace = run_basic_cspd(p, &cfg).unwrap();
    for rec in &trace.records {
        let rep = evaluate(&rec.x_bar, &rec.y_bar, p, r).unwrap();
        assert!(
            rep.lower_bound_slack() >= -10.0 * r.tolerance,
            "t = {}",
            rec.t
        );
        let gap = duality_gap(&rec.x_bar, &rec.y_bar, p, 1e-9)
            .unwrap()
            .value()
            .unwrap();
        assert!(gap >= rep.obj_gap - 10.0 * r.tolerance, "t = {}", rec.t);
    }
}

#[test]
fn bilinear_off_saddle_gap_matches_grid() {
    let p = generate_bilinear_toy();
    let (xb, yb) = ([1.0], [0.0]);
    let gap = duality_gap(&xb, &yb, &p, 1e-9).unwrap().value().unwrap();
    let grid: Vec<f64> = (0..=2000).map(|i| -1.0 + i as f64 * 1e-3).collect();
    let max_y = grid.iter().map(|y| xb[0] * y).fold(f64::MIN, f64::max);
    let min_x = grid.iter().map(|x| x * yb[0]).fold(f64::MAX, f64::min);
    assert!(gap > 0.0);
    assert!((gap - (max_y - min_x)).abs() < 1e-9);

    let r = solve_reference(&p, 1e-6).unwrap();
    assert!(r.x_star[0].abs() <= 1e-6 && r.y_star[0].abs() <= 1e-6);
}

fn qcqp(mode: ThetaMode, d: usize, m: usize) -> ProblemInstance {
    generate_qcqp(&QcqpSpec {
        d,
        m,
        seed: 4,
        theta_mode: mode,
    })
    .unwrap()
    .instance
}

#[test]
fn qcqp_y_best_response_is_the_ball_support() {
    let p = qcqp(ThetaMode::Interior, 2, 1);
    let x = [3.0, 4.0];
    let y = solve_best_response_y(&p, &x, 1e-9).unwrap();
    let support: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    assert!((support - 5.0).abs() < 1e-12);
}

#[test]
fn interior_qcqp_reference_has_zero_multipliers() {
    let tol = 1e-7;
    let p = qcqp(ThetaMode::Interior, 5, 3);
    let r = solve_reference(&p, tol).unwrap();
    let mut h = vec![0.0; 3];
    p.exact().unwrap().h_value(&r.x_star, &mut h);
    assert!(h.iter().all(|v| *v < 0.0));
    assert!(r.gamma_star.iter().map(|g| g * g).sum::<f64>().sqrt() <= 10.0 * tol);
}

#[test]
fn reference_solve_is_idempotent() {
    let tol = 1e-7;
    for p in [
        qcqp(ThetaMode::Boundary, 5, 3),
        generate_zero_sum_toy().instance,
    ] {
        let r = solve_reference(&p, tol).unwrap();
        let again = solve_reference_with(
            &p,
            &ReferenceConfig {
                warm_start: Some(r.clone()),
                ..ReferenceConfig::new(tol)
            },
        )
        .unwrap();
        let moved = r
            .x_star
            .iter()
            .zip(&again.x_star)
            .chain(r.y_star.iter().zip(&again.y_star))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(moved <= tol, "{}: moved {moved}", p.name);
    }
}

#[test]
fn slope_fit_examples() {
    let f = slope_fit(&[(10.0, 1.0), (100.0, 10f64.powf(-0.5)), (1000.0, 0.1)]).unwrap();
    assert!((f.slope + 0.5).abs() < 1e-12);
    assert!((f.r2 - 1.0).abs() < 1e-12);
    let e = std::f64::consts::E;
    let f = slope_fit(&[(1.0, 1.0), (e, 1.0 / e), (e * e, 1.0 / (e * e))]).unwrap();
    assert!((f.slope + 1.0).abs() < 1e-12);
    let f = slope_fit(&[(10.0, 3.0), (20.0, 3.0), (40.0, 3.0)]).unwrap();
    assert_eq!(f.slope, 0.0);

    let f = slope_fit(&[(10.0, 1.0), (20.0, 0.0), (40.0, 0.5), (80.0, 0.25)]).unwrap();
    assert_eq!(f.excluded, vec![1]);
    assert!(slope_fit(&[(10.0, 1.0), (20.0, -1.0), (40.0, 0.5)]).is_err());
}

#[test]
fn slope_fit_is_stable_under_small_noise() {
    let mut rng = SampleStream::auxiliary(5, 0);
    let ns: [f64; 5] = [1e3, 3e3, 1e4, 3e4, 1e5];
    for _ in 0..10 {
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|n| {
                (
                    *n,
                    7.0 * n.powf(-0.5) * (1.0 + 0.01 * rng.uniform_in(-1.0, 1.0)),
                )
            })
            .collect();
        let f = slope_fit(&pts).unwrap();
        assert!((f.slope + 0.5).abs() <= 0.02, "slope {}", f.slope);
    }
}

fn unit_constants() -> ProblemConstants {
    ProblemConstants::default()
}

#[test]
fn theory_constant_examples() {
    let reference = zero_reference(2, 2, 1, 1);
    let init = InitialPoint {
        x: vec![0.0; 2],
        y: vec![0.0; 2],
        gamma: vec![0.0],
        lambda: vec![0.0],
    };
    let r = theory_constant_r(&reference, &init, &unit_constants()).unwrap();
    assert!((r - 2.75).abs() < 1e-15);

    let doubled = ProblemConstants {
        c_x: 2.0,
        ..unit_constants()
    };
    let r2 = theory_constant_r(&reference, &init, &doubled).unwrap();
    assert!((r2 - (4.0 * 11.0 / 8.0 + 11.0 / 8.0)).abs() < 1e-15);

    // ‖γ*‖ = 1 alone contributes 3/8 + 2 from the two blocks.
    let mut with_gamma = reference.clone();
    with_gamma.gamma_star = vec![1.0];
    let init_at = InitialPoint {
        gamma: vec![1.0],
        ..init.clone()
    };
    let r3 = theory_constant_r(&with_gamma, &init_at, &unit_constants()).unwrap();
    assert!((r3 - (2.75 + 19.0 / 8.0)).abs() < 1e-15);

    let zero_ch = ProblemConstants {
        c_h: 0.0,
        ..unit_constants()
    };
    assert!(theory_constant_r(&reference, &init, &zero_ch).is_err());
}

#[test]
fn dual_norms_respect_the_theory_bound() {
    let p = qcqp(ThetaMode::Boundary, 5, 3);
    let r = solve_reference(&p, 1e-8).unwrap();
    let init = InitialPoint::default_for(&p);
    let big_r = theory_constant_r(&r, &init, &p.constants).unwrap();
    assert!(big_r.is_finite() && big_r > 0.0);
    let c = p.constants.for_schedule(&p.dims).unwrap();
    let n = 10_000;
    let cfg = RunConfig::new(
        n,
        StepSchedule::theory(ScheduleKind::BasicFixed { horizon: n }, &c),
        1,
    );
    let trace = run_basic_cspd(&p, &cfg).unwrap();
    let rec = trace.records.last().unwrap();
    let observed = rec.gamma_norm_max.powi(2) + rec.lambda_norm_max.powi(2);
    let e = std::f64::consts::E;
    assert!(observed <= 2.0 * big_r * e * e, "{observed} vs R = {big_r}");
}
