//! `f(x, y) = x·y` on `[−1, 1]²` with a noiseless oracle. Saddle at the origin.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::problem::{Dims, ExactOracle, ProblemConstants, ProblemInstance, SamplingOracle};
use crate::prox::ProjectionOp;
use crate::rng::SampleStream;

#[derive(Debug, Clone, Copy)]
struct Bilinear;

impl ExactOracle for Bilinear {
    fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        x[0] * y[0]
    }
    fn grad_x(&self, _x: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = y[0];
    }
    fn grad_y(&self, x: &[f64], _y: &[f64], out: &mut [f64]) {
        out[0] = x[0];
    }
    fn h_value(&self, _x: &[f64], _out: &mut [f64]) {}
    fn h_jacobian(&self, _x: &[f64], _out: &mut Matrix) {}
    fn g_value(&self, _y: &[f64], _out: &mut [f64]) {}
    fn g_jacobian(&self, _y: &[f64], _out: &mut Matrix) {}

    fn best_response_y(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }])
    }
    fn best_response_x(&self, y: &[f64]) -> Option<Vec<f64>> {
        Some(vec![if y[0] >= 0.0 { -1.0 } else { 1.0 }])
    }
}

impl SamplingOracle for Bilinear {
    fn sample_grad_x(&self, x: &[f64], y: &[f64], _rng: &mut SampleStream, out: &mut [f64]) {
        self.grad_x(x, y, out);
    }
    fn sample_grad_y(&self, x: &[f64], y: &[f64], _rng: &mut SampleStream, out: &mut [f64]) {
        self.grad_y(x, y, out);
    }
    fn sample_h_value(&self, _x: &[f64], _rng: &mut SampleStream, _out: &mut [f64]) {}
    fn sample_h_jacobian(&self, _x: &[f64], _rng: &mut SampleStream, _out: &mut Matrix) {}
    fn sample_g_value(&self, _y: &[f64], _rng: &mut SampleStream, _out: &mut [f64]) {}
    fn sample_g_jacobian(&self, _y: &[f64], _rng: &mut SampleStream, _out: &mut Matrix) {}
}

/// The unconstrained scalar bilinear game. `C_x = C_y = 1` (gradients lie in
/// `[−1, 1]`), no constraints.
pub fn generate_bilinear_toy() -> ProblemInstance {
    let oracle = Arc::new(Bilinear);
    let unit_box = ProjectionOp::Box {
        lower: vec![-1.0],
        upper: vec![1.0],
    };
    ProblemInstance {
        name: "bilinear",
        dims: Dims {
            dx: 1,
            dy: 1,
            m1: 0,
            m2: 0,
        },
        constants: ProblemConstants::default(),
        oracle: oracle.clone(),
        exact: Some(oracle),
        proj_x: unit_box.clone(),
        proj_y: unit_box,
        x_best_response_attained: true,
        y_best_response_attained: true,
    }
}
