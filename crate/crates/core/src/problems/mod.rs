//! Bundled problem generators.

mod bilinear;
mod pricing;
mod qcqp;
mod toy;

pub use bilinear::generate_bilinear_toy;
pub use pricing::{generate_pricing, PricingInstance, PricingSpec};
pub use qcqp::{generate_qcqp, QcqpInstance, QcqpSpec, ThetaMode};
pub use toy::{
    generate_zero_sum_toy, generate_zero_sum_toy_with_budget, reference_for_budget, ZeroSumToy,
    TOY_BUDGET, TOY_COST,
};

use alloc::vec;

use crate::linalg::{euclidean_norm, Matrix};
use crate::problem::{ExactOracle, ProblemConstants, ProblemInstance, SamplingOracle};
use crate::rng::SampleStream;

/// Auxiliary stream ids used by the generators.
pub(crate) mod purpose {
    pub const GENERATE: u16 = 0;
    pub const CONSTANTS: u16 = 1;
}

/// Monte-Carlo estimate of the oracle constants over a ball of radius
/// `3·max(‖center‖, 1)` around `(center_x, center_y)`, projected onto the
/// feasible sets.
///
/// Each second-moment bound is the largest squared exact (sub)gradient norm
/// seen plus the mean squared noise; `σ_h`, `σ_g` are root-mean-square value
/// noise. Constraint Jacobian bounds are per constraint, matching the
/// per-`h_i` form of the moment assumption.
pub fn estimate_constants(
    oracle: &dyn SamplingOracle,
    exact: &dyn ExactOracle,
    problem: &ProblemInstance,
    center_x: &[f64],
    center_y: &[f64],
    draws: usize,
    seed: u64,
) -> ProblemConstants {
    let d = problem.dims;
    let mut rng = SampleStream::auxiliary(seed, purpose::CONSTANTS);
    let rx = 3.0 * euclidean_norm(center_x).max(1.0);
    let ry = 3.0 * euclidean_norm(center_y).max(1.0);

    let mut x = vec![0.0; d.dx];
    let mut y = vec![0.0; d.dy];
    let mut sample_x = vec![0.0; d.dx];
    let mut exact_x = vec![0.0; d.dx];
    let mut sample_y = vec![0.0; d.dy];
    let mut exact_y = vec![0.0; d.dy];
    let mut sample_h = vec![0.0; d.m1];
    let mut exact_h = vec![0.0; d.m1];
    let mut sample_g = vec![0.0; d.m2];
    let mut exact_g = vec![0.0; d.m2];
    let mut sj_h = Matrix::zeros(d.dx, d.m1);
    let mut ej_h = Matrix::zeros(d.dx, d.m1);
    let mut sj_g = Matrix::zeros(d.dy, d.m2);
    let mut ej_g = Matrix::zeros(d.dy, d.m2);

    let mut max_gx = 0.0_f64;
    let mut max_gy = 0.0_f64;
    let mut max_jh = 0.0_f64;
    let mut max_jg = 0.0_f64;
    let (mut noise_gx, mut noise_gy, mut noise_jh, mut noise_jg) = (0.0, 0.0, 0.0, 0.0);
    let (mut noise_h, mut noise_g) = (0.0, 0.0);

    let draws = draws.max(1);
    for _ in 0..draws {
        sample_in_ball(&mut rng, center_x, rx, &mut x);
        sample_in_ball(&mut rng, center_y, ry, &mut y);
        problem.proj_x.project_in_place(&mut x);
        problem.proj_y.project_in_place(&mut y);

        oracle.sample_grad_x(&x, &y, &mut rng, &mut sample_x);
        exact.grad_x(&x, &y, &mut exact_x);
        max_gx = max_gx.max(sq_norm(&exact_x));
        noise_gx += sq_dist(&sample_x, &exact_x);

        oracle.sample_grad_y(&x, &y, &mut rng, &mut sample_y);
        exact.grad_y(&x, &y, &mut exact_y);
        max_gy = max_gy.max(sq_norm(&exact_y));
        noise_gy += sq_dist(&sample_y, &exact_y);

        if d.m1 > 0 {
            oracle.sample_h_value(&x, &mut rng, &mut sample_h);
            exact.h_value(&x, &mut exact_h);
            noise_h += sq_dist(&sample_h, &exact_h);
            oracle.sample_h_jacobian(&x, &mut rng, &mut sj_h);
            exact.h_jacobian(&x, &mut ej_h);
            let (m, n) = column_stats(&sj_h, &ej_h);
            max_jh = max_jh.max(m);
            noise_jh += n;
        }
        if d.m2 > 0 {
            oracle.sample_g_value(&y, &mut rng, &mut sample_g);
            exact.g_value(&y, &mut exact_g);
            noise_g += sq_dist(&sample_g, &exact_g);
            oracle.sample_g_jacobian(&y, &mut rng, &mut sj_g);
            exact.g_jacobian(&y, &mut ej_g);
            let (m, n) = column_stats(&sj_g, &ej_g);
            max_jg = max_jg.max(m);
            noise_jg += n;
        }
    }
    let k = draws as f64;
    let c_h = libm::sqrt(max_jh + noise_jh / k);
    let c_g = libm::sqrt(max_jg + noise_jg / k);
    ProblemConstants {
        c_x: libm::sqrt(max_gx + noise_gx / k),
        c_y: libm::sqrt(max_gy + noise_gy / k),
        c_h: if d.m1 > 0 { c_h } else { 1.0 },
        c_g: if d.m2 > 0 { c_g } else { 1.0 },
        sigma_h: libm::sqrt(noise_h / k),
        sigma_g: libm::sqrt(noise_g / k),
    }
}

/// Largest exact column norm² and largest column noise².
fn column_stats(sample: &Matrix, exact: &Matrix) -> (f64, f64) {
    let mut max_exact = 0.0_f64;
    let mut max_noise = 0.0_f64;
    for j in 0..exact.cols() {
        max_exact = max_exact.max(sq_norm(exact.col(j)));
        max_noise = max_noise.max(sq_dist(sample.col(j), exact.col(j)));
    }
    (max_exact, max_noise)
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Uniform draw from the ball of radius `r` around `center`.
fn sample_in_ball(rng: &mut SampleStream, center: &[f64], r: f64, out: &mut [f64]) {
    rng.fill_normal(out);
    let n = euclidean_norm(out);
    let radius = r * libm::pow(rng.uniform(), 1.0 / out.len() as f64);
    for (o, c) in out.iter_mut().zip(center) {
        *o = c + if n > 0.0 { *o / n * radius } else { 0.0 };
    }
}
