//! Robust optimal pricing.
//!
//! Demand follows `D(s, p, ξ; θ) = sᵀθ_{1:d} + θ₀p + ξ` with unknown
//! `θ ∈ Θ` (a box with `θ₀ < 0`). The seller picks a price `p` to maximize
//! worst-case revenue over all `θ` that explain the historical sales:
//!
//! ```text
//! max_{p ∈ [p_min, p_max]} min_{θ ∈ Θ} p·(sᵀθ_{1:d} + θ₀p)
//!   s.t.  E[D(s_i, p_i, ξ_i; θ)] ≥ d_i,   i = 1..m
//! ```
//!
//! Here `x = θ` (index 0 is `θ₀`) and `y = p`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{estimate_constants, purpose};
use crate::error::{config_err, Result};
use crate::linalg::{dot, Matrix};
use crate::problem::{Dims, ExactOracle, ProblemConstants, ProblemInstance, SamplingOracle};
use crate::prox::ProjectionOp;
use crate::rng::SampleStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingSpec {
    /// Feature dimension; `θ` has `d + 1` entries.
    pub d: usize,
    /// Number of historical sales, one constraint each.
    pub m: usize,
    pub seed: u64,
    pub p_min: f64,
    pub p_max: f64,
}

impl PricingSpec {
    pub fn new(d: usize, m: usize, seed: u64) -> Self {
        Self {
            d,
            m,
            seed,
            p_min: 0.0,
            p_max: 30.0,
        }
    }
}

/// A generated instance plus the data behind it.
#[derive(Debug, Clone)]
pub struct PricingInstance {
    pub instance: ProblemInstance,
    /// The parameter that generated the history.
    pub theta_tilde: Vec<f64>,
    /// Per-sale demand surplus `u_i` over the model at `θ̃`.
    pub surplus: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

const THETA0_LOWER: f64 = -5.0;
/// Minimum slack of every constraint at the upper corner of `Θ`; draws that
/// leave the constraint set (nearly) empty are redrawn.
const SLATER_MARGIN: f64 = 0.5;
const MAX_REDRAWS: usize = 1000;
const CONSTANT_DRAWS: usize = 10_000;

#[derive(Debug)]
struct Pricing {
    /// Features of the product being priced.
    s: Vec<f64>,
    /// Column `i` is `(p_i; s_i)`, the negated constraint gradient.
    hist: Matrix,
    demand: Vec<f64>,
}

impl Pricing {
    /// `sᵀθ_{1:d}`
    fn base(&self, theta: &[f64]) -> f64 {
        dot(&self.s, &theta[1..])
    }
}

impl ExactOracle for Pricing {
    fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        let p = y[0];
        p * (self.base(x) + x[0] * p)
    }
    fn grad_x(&self, _x: &[f64], y: &[f64], out: &mut [f64]) {
        let p = y[0];
        out[0] = p * p;
        for (o, s) in out[1..].iter_mut().zip(&self.s) {
            *o = p * s;
        }
    }
    fn grad_y(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = self.base(x) + 2.0 * x[0] * y[0];
    }
    fn h_value(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.demand[i] - dot(self.hist.col(i), x);
        }
    }
    fn h_jacobian(&self, _x: &[f64], out: &mut Matrix) {
        for i in 0..self.demand.len() {
            for (o, v) in out.col_mut(i).iter_mut().zip(self.hist.col(i)) {
                *o = -v;
            }
        }
    }
    fn g_value(&self, _y: &[f64], _out: &mut [f64]) {}
    fn g_jacobian(&self, _y: &[f64], _out: &mut Matrix) {}
}

impl SamplingOracle for Pricing {
    fn sample_grad_x(&self, x: &[f64], y: &[f64], _rng: &mut SampleStream, out: &mut [f64]) {
        self.grad_x(x, y, out);
    }
    fn sample_grad_y(&self, x: &[f64], y: &[f64], rng: &mut SampleStream, out: &mut [f64]) {
        self.grad_y(x, y, out);
        out[0] += rng.normal();
    }
    fn sample_h_value(&self, x: &[f64], rng: &mut SampleStream, out: &mut [f64]) {
        self.h_value(x, out);
        for o in out.iter_mut() {
            *o -= rng.normal();
        }
    }
    fn sample_h_jacobian(&self, x: &[f64], _rng: &mut SampleStream, out: &mut Matrix) {
        self.h_jacobian(x, out);
    }
    fn sample_g_value(&self, _y: &[f64], _rng: &mut SampleStream, _out: &mut [f64]) {}
    fn sample_g_jacobian(&self, _y: &[f64], _rng: &mut SampleStream, _out: &mut Matrix) {}
}

/// Wraps the exact oracle to add the closed-form price best response,
/// which needs the price bounds.
#[derive(Debug)]
struct PricingExact {
    inner: Arc<Pricing>,
    p_min: f64,
    p_max: f64,
}

impl ExactOracle for PricingExact {
    fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        self.inner.objective(x, y)
    }
    fn grad_x(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.inner.grad_x(x, y, out);
    }
    fn grad_y(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.inner.grad_y(x, y, out);
    }
    fn h_value(&self, x: &[f64], out: &mut [f64]) {
        self.inner.h_value(x, out);
    }
    fn h_jacobian(&self, x: &[f64], out: &mut Matrix) {
        self.inner.h_jacobian(x, out);
    }
    fn g_value(&self, y: &[f64], out: &mut [f64]) {
        self.inner.g_value(y, out);
    }
    fn g_jacobian(&self, y: &[f64], out: &mut Matrix) {
        self.inner.g_jacobian(y, out);
    }

    /// Revenue is a concave parabola in `p` since `θ₀ < 0`.
    fn best_response_y(&self, x: &[f64]) -> Option<Vec<f64>> {
        let p = -self.inner.base(x) / (2.0 * x[0]);
        Some(vec![p.clamp(self.p_min, self.p_max)])
    }
}

/// Draws an instance. Deterministic in `spec`.
pub fn generate_pricing(spec: &PricingSpec) -> Result<PricingInstance> {
    let d = spec.d;
    if d == 0 {
        return Err(config_err("pricing feature dimension d must be at least 1"));
    }
    if !(spec.p_min < spec.p_max) || !spec.p_min.is_finite() || !spec.p_max.is_finite() {
        return Err(config_err("pricing requires finite p_min < p_max"));
    }
    let mut rng = SampleStream::auxiliary(spec.seed, purpose::GENERATE);
    let mut lower = vec![0.0; d + 1];
    let mut upper = vec![0.0; d + 1];
    lower[0] = THETA0_LOWER;
    for l in &mut lower[1..] {
        *l = rng.uniform_in(0.0, 2.0);
    }
    for (u, l) in upper.iter_mut().zip(&lower) {
        *u = l + rng.uniform_in(0.0, 3.0);
    }
    let mut s = vec![0.0; d];
    for v in &mut s {
        *v = rng.uniform_in(0.0, 3.0);
    }

    let mut theta_tilde = vec![0.0; d + 1];
    let mut cols = Vec::with_capacity(spec.m);
    let mut demand = Vec::with_capacity(spec.m);
    let mut surplus = Vec::with_capacity(spec.m);
    let mut col = vec![0.0; d + 1];
    let mut feasible = false;
    for _ in 0..MAX_REDRAWS {
        for ((t, l), u) in theta_tilde.iter_mut().zip(&lower).zip(&upper) {
            *t = rng.uniform_in(*l, *u);
        }
        cols.clear();
        demand.clear();
        surplus.clear();
        for _ in 0..spec.m {
            col[0] = rng.uniform_in(10.0, 20.0);
            for v in &mut col[1..] {
                *v = rng.uniform_in(0.0, 3.0);
            }
            let u = rng.uniform_in(0.0, 5.0);
            demand.push(dot(&col, &theta_tilde) + u);
            surplus.push(u);
            cols.push(col.clone());
        }
        // Every column is nonnegative, so the upper corner maximizes each
        // modelled demand over Θ.
        feasible = cols
            .iter()
            .zip(&demand)
            .all(|(c, di)| dot(c, &upper) - di >= SLATER_MARGIN);
        if feasible {
            break;
        }
    }
    if !feasible {
        return Err(config_err(
            "pricing history admits no parameter in the box; try another seed",
        ));
    }

    let inner = Arc::new(Pricing {
        s,
        hist: Matrix::from_columns(d + 1, &cols),
        demand,
    });
    let exact = Arc::new(PricingExact {
        inner: inner.clone(),
        p_min: spec.p_min,
        p_max: spec.p_max,
    });
    let mut instance = ProblemInstance {
        name: "pricing",
        dims: Dims {
            dx: d + 1,
            dy: 1,
            m1: spec.m,
            m2: 0,
        },
        constants: ProblemConstants::default(),
        oracle: inner.clone(),
        exact: Some(exact.clone()),
        proj_x: ProjectionOp::Box {
            lower: lower.clone(),
            upper: upper.clone(),
        },
        proj_y: ProjectionOp::Box {
            lower: vec![spec.p_min],
            upper: vec![spec.p_max],
        },
        x_best_response_attained: true,
        y_best_response_attained: true,
    };
    let center_x: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(l, u)| 0.5 * (l + u))
        .collect();
    let center_y = [0.5 * (spec.p_min + spec.p_max)];
    instance.constants = estimate_constants(
        inner.as_ref(),
        exact.as_ref(),
        &instance,
        &center_x,
        &center_y,
        CONSTANT_DRAWS,
        spec.seed,
    );
    Ok(PricingInstance {
        instance,
        theta_tilde,
        surplus,
        lower,
        upper,
    })
}
