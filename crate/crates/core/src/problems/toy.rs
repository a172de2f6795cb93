//! Two-player zero-sum toy with one budget constraint per player.
//!
//! ```text
//! f(x, y) = xᵀA y + (μ/2)‖x − ½‖² − (μ/2)‖y − ½‖²,   A = [[1, −1], [−1, 1]]
//! X = Y = [0, 1]²,   H(x) = cᵀx − b,   G(y) = cᵀy − b
//! ```
//!
//! Without the `μ` terms the saddle set of the matching-pennies matrix is a
//! whole segment; `μ = 1` makes it a single point without moving the
//! unconstrained saddle away from `(½, ½)`. Gradients and constraint values
//! carry Normal(0, σ²) noise; the constraints are linear so Jacobians are
//! exact.

use alloc::sync::Arc;
use alloc::vec;

use crate::linalg::{dot, Matrix};
use crate::problem::{
    Dims, ExactOracle, ProblemConstants, ProblemInstance, ReferenceSolution, SamplingOracle,
};
use crate::prox::ProjectionOp;
use crate::rng::SampleStream;

pub const TOY_COST: [f64; 2] = [1.0, 2.0];
pub const TOY_BUDGET: f64 = 1.4;
const MU: f64 = 1.0;
const NOISE: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
struct Toy {
    budget: f64,
}

impl Toy {
    fn constraint(&self, v: &[f64]) -> f64 {
        dot(&TOY_COST, v) - self.budget
    }
}

impl ExactOracle for Toy {
    fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        let bilinear = (x[0] - x[1]) * (y[0] - y[1]);
        let rx = (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5);
        let ry = (y[0] - 0.5) * (y[0] - 0.5) + (y[1] - 0.5) * (y[1] - 0.5);
        bilinear + 0.5 * MU * (rx - ry)
    }
    fn grad_x(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let b = y[0] - y[1];
        out[0] = b + MU * (x[0] - 0.5);
        out[1] = -b + MU * (x[1] - 0.5);
    }
    fn grad_y(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let a = x[0] - x[1];
        out[0] = a - MU * (y[0] - 0.5);
        out[1] = -a - MU * (y[1] - 0.5);
    }
    fn h_value(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.constraint(x);
    }
    fn h_jacobian(&self, _x: &[f64], out: &mut Matrix) {
        out.col_mut(0).copy_from_slice(&TOY_COST);
    }
    fn g_value(&self, y: &[f64], out: &mut [f64]) {
        out[0] = self.constraint(y);
    }
    fn g_jacobian(&self, _y: &[f64], out: &mut Matrix) {
        out.col_mut(0).copy_from_slice(&TOY_COST);
    }
}

impl SamplingOracle for Toy {
    fn sample_grad_x(&self, x: &[f64], y: &[f64], rng: &mut SampleStream, out: &mut [f64]) {
        self.grad_x(x, y, out);
        for o in out.iter_mut() {
            *o += NOISE * rng.normal();
        }
    }
    fn sample_grad_y(&self, x: &[f64], y: &[f64], rng: &mut SampleStream, out: &mut [f64]) {
        self.grad_y(x, y, out);
        for o in out.iter_mut() {
            *o += NOISE * rng.normal();
        }
    }
    fn sample_h_value(&self, x: &[f64], rng: &mut SampleStream, out: &mut [f64]) {
        out[0] = self.constraint(x) + NOISE * rng.normal();
    }
    fn sample_h_jacobian(&self, x: &[f64], _rng: &mut SampleStream, out: &mut Matrix) {
        self.h_jacobian(x, out);
    }
    fn sample_g_value(&self, y: &[f64], rng: &mut SampleStream, out: &mut [f64]) {
        out[0] = self.constraint(y) + NOISE * rng.normal();
    }
    fn sample_g_jacobian(&self, y: &[f64], _rng: &mut SampleStream, out: &mut Matrix) {
        self.g_jacobian(y, out);
    }
}

/// The toy instance together with its grid-search saddle.
#[derive(Debug, Clone)]
pub struct ZeroSumToy {
    pub instance: ProblemInstance,
    pub reference: ReferenceSolution,
}

/// The toy with the default budget `b = 1.4`, which binds for both players.
pub fn generate_zero_sum_toy() -> ZeroSumToy {
    generate_zero_sum_toy_with_budget(TOY_BUDGET)
}

pub fn generate_zero_sum_toy_with_budget(budget: f64) -> ZeroSumToy {
    let toy = Arc::new(Toy { budget });
    let unit_box = ProjectionOp::Box {
        lower: vec![0.0; 2],
        upper: vec![1.0; 2],
    };
    // ‖∇_x F‖ ≤ √2·|y₁ − y₂| + μ‖x − ½‖ ≤ √2 + μ/√2 on the box.
    let grad_bound = core::f64::consts::SQRT_2 + MU * core::f64::consts::FRAC_1_SQRT_2;
    let c_grad = libm::sqrt(grad_bound * grad_bound + 2.0 * NOISE * NOISE);
    let c_cost = libm::sqrt(dot(&TOY_COST, &TOY_COST));
    let instance = ProblemInstance {
        name: "toy",
        dims: Dims {
            dx: 2,
            dy: 2,
            m1: 1,
            m2: 1,
        },
        constants: ProblemConstants {
            c_x: c_grad,
            c_y: c_grad,
            c_h: c_cost,
            c_g: c_cost,
            sigma_h: NOISE,
            sigma_g: NOISE,
        },
        oracle: toy.clone(),
        exact: Some(toy.clone()),
        proj_x: unit_box.clone(),
        proj_y: unit_box,
        x_best_response_attained: true,
        y_best_response_attained: true,
    };
    let reference = zero_sum_toy_reference(&toy);
    ZeroSumToy {
        instance,
        reference,
    }
}

const COARSE_STEP: f64 = 0.02;
const ZOOM_LEVELS: usize = 6;
const ZOOM_FACTOR: f64 = 10.0;
const ZOOM_HALF_WIDTH: i32 = 20;
const GOLDEN_TOL: f64 = 1e-12;

/// Saddle of the toy by nested grid search: the outer search minimizes
/// `φ(x) = max_{y ∈ Ỹ} F(x, y)`, with each inner max itself a grid search.
/// Multipliers follow from the stationarity conditions at the active
/// budget.
fn zero_sum_toy_reference(toy: &Toy) -> ReferenceSolution {
    let budget = toy.budget;
    let phi = |x: &[f64; 2]| -> ([f64; 2], f64) {
        let (y, v) = grid_minimize(budget, |y| -toy.objective(x, y));
        (y, -v)
    };
    let (x_star, _) = grid_minimize(budget, |x| phi(x).1);
    let (y_star, _) = phi(&x_star);

    let mut gx = [0.0; 2];
    let mut gy = [0.0; 2];
    toy.grad_x(&x_star, &y_star, &mut gx);
    toy.grad_y(&x_star, &y_star, &mut gy);
    let cc = dot(&TOY_COST, &TOY_COST);
    let tolerance = 1e-6;
    let active = |v: &[f64]| toy.constraint(v) > -tolerance;
    // ∇_x F + γ c = 0 and −∇_y F + λ c = 0 in least squares.
    let gamma = if active(&x_star) {
        (-dot(&TOY_COST, &gx) / cc).max(0.0)
    } else {
        0.0
    };
    let lambda = if active(&y_star) {
        (dot(&TOY_COST, &gy) / cc).max(0.0)
    } else {
        0.0
    };
    ReferenceSolution {
        f_star: toy.objective(&x_star, &y_star),
        x_star: x_star.to_vec(),
        y_star: y_star.to_vec(),
        gamma_star: vec![gamma],
        lambda_star: vec![lambda],
        tolerance,
        iterations: 0,
    }
}

/// Minimizes a convex `value` over `{v ∈ [0,1]² : cᵀv ≤ b}`.
///
/// A coarse grid locates the basin. Two refinements follow: zooming grids
/// around the incumbent (exact enough for interior minimizers) and a
/// golden-section search along the budget line `cᵀv = b` (exact for
/// minimizers on the budget). The better of the two wins.
fn grid_minimize(budget: f64, value: impl Fn(&[f64; 2]) -> f64) -> ([f64; 2], f64) {
    let feasible = |v: &[f64; 2]| dot(&TOY_COST, v) <= budget;
    let mut best = [0.0, 0.0];
    let mut best_val = f64::INFINITY;
    let consider = |v: [f64; 2], best: &mut [f64; 2], best_val: &mut f64| {
        if feasible(&v) {
            let f = value(&v);
            if f < *best_val {
                *best_val = f;
                *best = v;
            }
        }
    };
    let n = libm::round(1.0 / COARSE_STEP) as i32;
    for i in 0..=n {
        for j in 0..=n {
            let v = [f64::from(i) * COARSE_STEP, f64::from(j) * COARSE_STEP];
            consider(v, &mut best, &mut best_val);
        }
    }
    let mut step = COARSE_STEP;
    for _ in 0..ZOOM_LEVELS {
        step /= ZOOM_FACTOR;
        let center = best;
        for i in -ZOOM_HALF_WIDTH..=ZOOM_HALF_WIDTH {
            for j in -ZOOM_HALF_WIDTH..=ZOOM_HALF_WIDTH {
                let v = [
                    (center[0] + f64::from(i) * step).clamp(0.0, 1.0),
                    (center[1] + f64::from(j) * step).clamp(0.0, 1.0),
                ];
                consider(v, &mut best, &mut best_val);
            }
        }
    }

    // The budget line v = (t, (b − c₁t)/c₂), clipped to the box.
    let [c1, c2] = TOY_COST;
    let on_line = |t: f64| [t, ((budget - c1 * t) / c2).clamp(0.0, 1.0)];
    let lo = ((budget - c2) / c1).clamp(0.0, 1.0);
    let hi = (budget / c1).clamp(0.0, 1.0);
    if lo < hi {
        let t = golden_section(|t| value(&on_line(t)), lo, hi);
        consider(on_line(t), &mut best, &mut best_val);
    }
    (best, best_val)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Grid-search saddle of the toy with budget `b`, without the instance.
pub fn reference_for_budget(budget: f64) -> ReferenceSolution {
    zero_sum_toy_reference(&Toy { budget })
}
