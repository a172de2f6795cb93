//! Quadratically constrained quadratic saddle problem.
//!
//! ```text
//! min_x max_{‖y − y₀‖ ≤ c_y}  E[(x − x̃₀)ᵀQ(x − x̃₀) + xᵀω] + xᵀy
//!   s.t.  E[((x − x̃_j)ᵀs_j + ξ_j)²] ≤ θ_j,   j = 1..m
//! ```
//!
//! with `ω ~ U[0,1]^d`, `ξ_j ~ N(0,1)`, `y₀ = 0`, `c_y = 1`. The constraint
//! levels are calibrated against the unconstrained solution `x̂*`:
//! `θ_j = factor·(((x̂* − x̃_j)ᵀs_j)² + 1)`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{estimate_constants, purpose};
use crate::error::{config_err, Result};
use crate::linalg::{dot, euclidean_norm, Matrix};
use crate::metrics::solve_reference;
use crate::problem::{Dims, ExactOracle, ProblemConstants, ProblemInstance, SamplingOracle};
use crate::prox::ProjectionOp;
use crate::rng::SampleStream;

/// How the constraint levels sit relative to the unconstrained solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaMode {
    /// `θ = 1.2·θ̂`: every constraint is slack at `x̂*`.
    Interior,
    /// `θ = 0.9·θ̂`: every constraint is violated at `x̂*`, so they bind.
    Boundary,
}

impl ThetaMode {
    pub fn factor(self) -> f64 {
        match self {
            Self::Interior => 1.2,
            Self::Boundary => 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QcqpSpec {
    pub d: usize,
    pub m: usize,
    pub seed: u64,
    pub theta_mode: ThetaMode,
}

/// A generated instance plus its calibration data.
#[derive(Debug, Clone)]
pub struct QcqpInstance {
    pub instance: ProblemInstance,
    /// Unconstrained solution used for calibration.
    pub x_hat: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub theta: Vec<f64>,
}

const X0_STD: f64 = 0.547_722_557_505_166_1; // √0.3
/// Boundary-mode constraints need `θ_j > 1` to be satisfiable at all
/// (`E[(a + ξ)²] ≥ 1`); draws closer than this margin are resampled.
const BOUNDARY_MARGIN: f64 = 0.05;
const CALIBRATION_TOL: f64 = 1e-9;
const CONSTANT_DRAWS: usize = 10_000;

#[derive(Debug)]
struct Qcqp {
    d: usize,
    x0: Vec<f64>,
    q: Matrix,
    /// `Q x̃₀`
    q_x0: Vec<f64>,
    /// Columns `s_j`.
    s: Matrix,
    /// `s_jᵀx̃_j`, so that `a_j(x) = s_jᵀx − offset_j`.
    offset: Vec<f64>,
    theta: Vec<f64>,
}

impl Qcqp {
    fn a(&self, x: &[f64], j: usize) -> f64 {
        dot(self.s.col(j), x) - self.offset[j]
    }

    /// `2Q(x − x̃₀) + y` into `out`.
    fn grad_x_common(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for ((o, yi), qx0) in out.iter_mut().zip(y).zip(&self.q_x0) {
            *o = yi - 2.0 * qx0;
        }
        self.q.mul_vec_acc(x, 2.0, out);
    }
}

impl ExactOracle for Qcqp {
    fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.x0).map(|(a, b)| a - b).collect();
        let mut qd = vec![0.0; self.d];
        self.q.mul_vec_acc(&diff, 1.0, &mut qd);
        dot(&diff, &qd) + 0.5 * x.iter().sum::<f64>() + dot(x, y)
    }
    fn grad_x(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.grad_x_common(x, y, out);
        for o in out.iter_mut() {
            *o += 0.5;
        }
    }
    fn grad_y(&self, x: &[f64], _y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn h_value(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let a = self.a(x, j);
            *o = a * a + 1.0 - self.theta[j];
        }
    }
    fn h_jacobian(&self, x: &[f64], out: &mut Matrix) {
        for j in 0..self.theta.len() {
            let a2 = 2.0 * self.a(x, j);
            for (o, s) in out.col_mut(j).iter_mut().zip(self.s.col(j)) {
                *o = a2 * s;
            }
        }
    }
    fn g_value(&self, _y: &[f64], _out: &mut [f64]) {}
    fn g_jacobian(&self, _y: &[f64], _out: &mut Matrix) {}

    /// Support function of the unit ball: `y° = x/‖x‖`.
    fn best_response_y(&self, x: &[f64]) -> Option<Vec<f64>> {
        let n = euclidean_norm(x);
        Some(if n > 0.0 {
            x.iter().map(|v| v / n).collect()
        } else {
            vec![0.0; x.len()]
        })
    }
}

impl SamplingOracle for Qcqp {
    fn sample_grad_x(&self, x: &[f64], y: &[f64], rng: &mut SampleStream, out: &mut [f64]) {
        self.grad_x_common(x, y, out);
        for o in out.iter_mut() {
            *o += rng.uniform();
        }
    }
    fn sample_grad_y(&self, x: &[f64], _y: &[f64], _rng: &mut SampleStream, out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn sample_h_value(&self, x: &[f64], rng: &mut SampleStream, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let v = self.a(x, j) + rng.normal();
            *o = v * v - self.theta[j];
        }
    }
    fn sample_h_jacobian(&self, x: &[f64], rng: &mut SampleStream, out: &mut Matrix) {
        for j in 0..self.theta.len() {
            let c = 2.0 * (self.a(x, j) + rng.normal());
            for (o, s) in out.col_mut(j).iter_mut().zip(self.s.col(j)) {
                *o = c * s;
            }
        }
    }
    fn sample_g_value(&self, _y: &[f64], _rng: &mut SampleStream, _out: &mut [f64]) {}
    fn sample_g_jacobian(&self, _y: &[f64], _rng: &mut SampleStream, _out: &mut Matrix) {}
}

fn instance_from(oracle: Arc<Qcqp>, constants: ProblemConstants) -> ProblemInstance {
    let d = oracle.d;
    let m = oracle.theta.len();
    ProblemInstance {
        name: "qcqp",
        dims: Dims {
            dx: d,
            dy: d,
            m1: m,
            m2: 0,
        },
        constants,
        oracle: oracle.clone(),
        exact: Some(oracle),
        proj_x: ProjectionOp::FullSpace,
        proj_y: ProjectionOp::Ball {
            center: vec![0.0; d],
            radius: 1.0,
        },
        // F(·, y) is strongly convex (Q ⪰ I) and Y is compact.
        x_best_response_attained: true,
        y_best_response_attained: true,
    }
}

/// Draws an instance. Deterministic in `spec`.
pub fn generate_qcqp(spec: &QcqpSpec) -> Result<QcqpInstance> {
    let d = spec.d;
    if d == 0 {
        return Err(config_err("qcqp dimension d must be at least 1"));
    }
    let mut rng = SampleStream::auxiliary(spec.seed, purpose::GENERATE);
    let mut x0 = vec![0.0; d];
    rng.fill_normal(&mut x0);
    for v in &mut x0 {
        *v *= X0_STD;
    }
    let mut l = Matrix::zeros(d, d);
    for i in 0..d {
        for k in 0..d {
            l.set(i, k, rng.normal());
        }
    }
    let mut q = Matrix::zeros(d, d);
    for i in 0..d {
        for k in 0..=i {
            let v: f64 = (0..d).map(|r| l.get(i, r) * l.get(k, r)).sum::<f64>()
                + if i == k { 1.0 } else { 0.0 };
            q.set(i, k, v);
            q.set(k, i, v);
        }
    }

    let mut q_x0 = vec![0.0; d];
    q.mul_vec_acc(&x0, 1.0, &mut q_x0);

    let unconstrained = Arc::new(Qcqp {
        d,
        x0: x0.clone(),
        q: q.clone(),
        q_x0: q_x0.clone(),
        s: Matrix::zeros(d, 0),
        offset: Vec::new(),
        theta: Vec::new(),
    });
    let calib = solve_reference(
        &instance_from(unconstrained, ProblemConstants::default()),
        CALIBRATION_TOL,
    )?;
    let x_hat = calib.x_star;

    let factor = spec.theta_mode.factor();
    let mut s_cols = Vec::with_capacity(spec.m);
    let mut offset = Vec::with_capacity(spec.m);
    let mut theta_hat = Vec::with_capacity(spec.m);
    let mut xt = vec![0.0; d];
    let mut s = vec![0.0; d];
    for _ in 0..spec.m {
        loop {
            rng.fill_normal(&mut xt);
            rng.fill_uniform(&mut s);
            let a = dot(&s, &x_hat) - dot(&s, &xt);
            let th = a * a + 1.0;
            if spec.theta_mode == ThetaMode::Boundary && factor * th - 1.0 < BOUNDARY_MARGIN {
                continue;
            }
            offset.push(dot(&s, &xt));
            s_cols.push(s.clone());
            theta_hat.push(th);
            break;
        }
    }
    let theta: Vec<f64> = theta_hat.iter().map(|t| factor * t).collect();
    let oracle = Arc::new(Qcqp {
        d,
        x0,
        q,
        q_x0,
        s: Matrix::from_columns(d, &s_cols),
        offset,
        theta: theta.clone(),
    });
    let mut instance = instance_from(oracle.clone(), ProblemConstants::default());
    let y_hat = oracle
        .best_response_y(&x_hat)
        .unwrap_or_else(|| vec![0.0; d]);
    instance.constants = estimate_constants(
        oracle.as_ref(),
        oracle.as_ref(),
        &instance,
        &x_hat,
        &y_hat,
        CONSTANT_DRAWS,
        spec.seed,
    );
    Ok(QcqpInstance {
        instance,
        x_hat,
        theta_hat,
        theta,
    })
}
