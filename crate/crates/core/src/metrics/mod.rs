//! Evaluation of averaged iterates against a reference saddle point.

mod fit;
mod reference;

pub use fit::{slope_fit, theory_constant_r, SlopeFit};
pub use reference::{
    solve_best_response_x, solve_best_response_y, solve_reference, solve_reference_with,
    ReferenceConfig, MAX_REFERENCE_ITERATIONS,
};

use alloc::vec;

use crate::error::Result;
use crate::linalg::{dot, euclidean_norm, positive_part_norm};
use crate::problem::{ProblemInstance, ReferenceSolution};

/// Metrics of one evaluated point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// `F(x̄, y*) − F(x*, ȳ)`; may be negative at infeasible points.
    pub obj_gap: f64,
    /// `‖H(x̄)₊‖`
    pub feas_x: f64,
    /// `‖G(ȳ)₊‖`
    pub feas_y: f64,
    pub duality_gap: Option<f64>,
    /// `−‖γ*‖·feas_x − ‖λ*‖·feas_y`, a lower bound on `obj_gap`.
    pub lower_bound: f64,
    /// `L(x̄, ȳ, γ*, λ*)`
    pub lagrangian_at_point: f64,
}

impl GapReport {
    /// How far `obj_gap` sits above its lower bound (negative on violation).
    pub fn lower_bound_slack(&self) -> f64 {
        self.obj_gap - self.lower_bound
    }
}

/// Evaluates `(x̄, ȳ)` with the exact oracle. `duality_gap` is left empty;
/// see [`duality_gap`].
pub fn evaluate(
    x_bar: &[f64],
    y_bar: &[f64],
    problem: &ProblemInstance,
    reference: &ReferenceSolution,
) -> Result<GapReport> {
    let ex = problem.exact()?;
    let d = problem.dims;
    let mut h = vec![0.0; d.m1];
    let mut g = vec![0.0; d.m2];
    ex.h_value(x_bar, &mut h);
    ex.g_value(y_bar, &mut g);
    let feas_x = positive_part_norm(&h);
    let feas_y = positive_part_norm(&g);
    let obj_gap = ex.objective(x_bar, &reference.y_star) - ex.objective(&reference.x_star, y_bar);
    let lower_bound = -euclidean_norm(&reference.gamma_star) * feas_x
        - euclidean_norm(&reference.lambda_star) * feas_y;
    let lagrangian_at_point = ex.objective(x_bar, y_bar) + dot(&reference.gamma_star, &h)
        - dot(&reference.lambda_star, &g);
    Ok(GapReport {
        obj_gap,
        feas_x,
        feas_y,
        duality_gap: None,
        lower_bound,
        lagrangian_at_point,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualityGap {
    Value(f64),
    /// A best response is not attained on this problem.
    NotApplicable,
}

impl DualityGap {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Value(v) => Some(v),
            Self::NotApplicable => None,
        }
    }
}

/// `F(x̄, y°(x̄)) − F(x°(ȳ), ȳ)` with best responses over the constrained
/// sets. Closed forms are used where the problem offers them; otherwise a
/// single-block deterministic solve to `target_tol`.
pub fn duality_gap(
    x_bar: &[f64],
    y_bar: &[f64],
    problem: &ProblemInstance,
    target_tol: f64,
) -> Result<DualityGap> {
    if !(problem.x_best_response_attained && problem.y_best_response_attained) {
        return Ok(DualityGap::NotApplicable);
    }
    let ex = problem.exact()?;
    let y_best = solve_best_response_y(problem, x_bar, target_tol)?;
    let x_best = solve_best_response_x(problem, y_bar, target_tol)?;
    Ok(DualityGap::Value(
        ex.objective(x_bar, &y_best) - ex.objective(&x_best, y_bar),
    ))
}
