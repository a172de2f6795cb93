//! Deterministic high-accuracy saddle solver used as ground truth.
//!
//! Runs the extragradient method with backtracking on the monotone operator
//! of the exact Lagrangian,
//!
//! ```text
//! Φ(x, y, γ, λ) = ( ∇_x F + J_H γ,  −∇_y F + J_G λ,  −H(x),  −G(y) ),
//! ```
//!
//! projected onto `X × Y × R₊^{m1} × R₊^{m2}`, and stops on the unit-step
//! natural residual `‖z − Π(z − Φ(z))‖`. Blocks can be frozen, which turns
//! the same machinery into a best-response solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, Error, Result};
use crate::linalg::{dot, euclidean_norm, positive_part_norm, Matrix};
use crate::problem::{ExactOracle, ProblemInstance, ReferenceSolution};

/// Iteration cap of the deterministic solver.
pub const MAX_REFERENCE_ITERATIONS: u64 = 100_000_000;

/// Knobs of [`solve_reference_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceConfig {
    pub target_tol: f64,
    pub max_iterations: u64,
    /// Optional warm start `(x, y, γ, λ)`.
    pub warm_start: Option<ReferenceSolution>,
}

impl ReferenceConfig {
    pub fn new(target_tol: f64) -> Self {
        Self {
            target_tol,
            max_iterations: MAX_REFERENCE_ITERATIONS,
            warm_start: None,
        }
    }
}

/// Solves for a saddle point to accuracy `target_tol`.
pub fn solve_reference(problem: &ProblemInstance, target_tol: f64) -> Result<ReferenceSolution> {
    solve_reference_with(problem, &ReferenceConfig::new(target_tol))
}

pub fn solve_reference_with(
    problem: &ProblemInstance,
    cfg: &ReferenceConfig,
) -> Result<ReferenceSolution> {
    if !(cfg.target_tol > 0.0) {
        return Err(config_err("target_tol must be positive"));
    }
    problem.validate()?;
    let exact = problem.exact()?;
    let d = problem.dims;
    let mut eg = Extragradient::new(problem, exact, Frozen::None);
    match &cfg.warm_start {
        Some(w) => eg.load(&w.x_star, &w.y_star, &w.gamma_star, &w.lambda_star),
        None => {
            let mut x = vec![0.0; d.dx];
            let mut y = vec![0.0; d.dy];
            problem.proj_x.project_in_place(&mut x);
            problem.proj_y.project_in_place(&mut y);
            eg.load(&x, &y, &vec![0.0; d.m1], &vec![0.0; d.m2]);
        }
    }
    let residual_tol = 0.1 * cfg.target_tol;
    let iterations = eg.run(residual_tol, cfg.target_tol, cfg.max_iterations)?;

    let (x, y, mut gamma, mut lambda) = eg.split();
    let mut h = vec![0.0; d.m1];
    let mut g = vec![0.0; d.m2];
    exact.h_value(&x, &mut h);
    exact.g_value(&y, &mut g);
    let clamp = 10.0 * cfg.target_tol;
    for (m, c) in gamma.iter_mut().zip(&h) {
        if *m <= clamp && *c < 0.0 {
            *m = 0.0;
        }
    }
    for (m, c) in lambda.iter_mut().zip(&g) {
        if *m <= clamp && *c < 0.0 {
            *m = 0.0;
        }
    }
    let slack_h = dot(&gamma, &h).abs() / (1.0 + euclidean_norm(&gamma));
    let slack_g = dot(&lambda, &g).abs() / (1.0 + euclidean_norm(&lambda));
    let tolerance = [
        cfg.target_tol,
        positive_part_norm(&h),
        positive_part_norm(&g),
        slack_h,
        slack_g,
        eg.last_residual,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(ReferenceSolution {
        f_star: exact.objective(&x, &y),
        x_star: x,
        y_star: y,
        gamma_star: gamma,
        lambda_star: lambda,
        tolerance,
        iterations,
    })
}

/// `argmin_{x ∈ X, H(x) ≤ 0} F(x, y)` for fixed `y`.
pub fn solve_best_response_x(
    problem: &ProblemInstance,
    y: &[f64],
    target_tol: f64,
) -> Result<Vec<f64>> {
    let exact = problem.exact()?;
    if let Some(x) = exact.best_response_x(y) {
        return Ok(x);
    }
    let d = problem.dims;
    let mut eg = Extragradient::new(problem, exact, Frozen::MaxSide);
    let mut x = vec![0.0; d.dx];
    problem.proj_x.project_in_place(&mut x);
    eg.load(&x, y, &vec![0.0; d.m1], &vec![0.0; d.m2]);
    eg.run(0.1 * target_tol, target_tol, MAX_REFERENCE_ITERATIONS)?;
    Ok(eg.split().0)
}

/// `argmax_{y ∈ Y, G(y) ≤ 0} F(x, y)` for fixed `x`.
pub fn solve_best_response_y(
    problem: &ProblemInstance,
    x: &[f64],
    target_tol: f64,
) -> Result<Vec<f64>> {
    let exact = problem.exact()?;
    if let Some(y) = exact.best_response_y(x) {
        return Ok(y);
    }
    let d = problem.dims;
    let mut eg = Extragradient::new(problem, exact, Frozen::MinSide);
    let mut y = vec![0.0; d.dy];
    problem.proj_y.project_in_place(&mut y);
    eg.load(x, &y, &vec![0.0; d.m1], &vec![0.0; d.m2]);
    eg.run(0.1 * target_tol, target_tol, MAX_REFERENCE_ITERATIONS)?;
    Ok(eg.split().1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Frozen {
    None,
    /// `x` and `γ` held fixed.
    MinSide,
    /// `y` and `λ` held fixed.
    MaxSide,
}

struct Extragradient<'a> {
    problem: &'a ProblemInstance,
    exact: &'a dyn ExactOracle,
    frozen: Frozen,
    // Offsets into the flat point [x | y | γ | λ].
    oy: usize,
    og: usize,
    ol: usize,
    n: usize,
    z: Vec<f64>,
    z_half: Vec<f64>,
    f_z: Vec<f64>,
    f_half: Vec<f64>,
    probe: Vec<f64>,
    h_jac: Matrix,
    g_jac: Matrix,
    step: f64,
    last_residual: f64,
}

impl<'a> Extragradient<'a> {
    fn new(problem: &'a ProblemInstance, exact: &'a dyn ExactOracle, frozen: Frozen) -> Self {
        let d = problem.dims;
        let oy = d.dx;
        let og = oy + d.dy;
        let ol = og + d.m1;
        let n = ol + d.m2;
        Self {
            problem,
            exact,
            frozen,
            oy,
            og,
            ol,
            n,
            z: vec![0.0; n],
            z_half: vec![0.0; n],
            f_z: vec![0.0; n],
            f_half: vec![0.0; n],
            probe: vec![0.0; n],
            h_jac: Matrix::zeros(d.dx, d.m1),
            g_jac: Matrix::zeros(d.dy, d.m2),
            step: 1.0,
            last_residual: f64::INFINITY,
        }
    }

    fn load(&mut self, x: &[f64], y: &[f64], gamma: &[f64], lambda: &[f64]) {
        self.z[..self.oy].copy_from_slice(x);
        self.z[self.oy..self.og].copy_from_slice(y);
        self.z[self.og..self.ol].copy_from_slice(gamma);
        self.z[self.ol..].copy_from_slice(lambda);
        project(self.problem, self.oy, self.og, self.ol, &mut self.z);
    }

    fn split(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            self.z[..self.oy].to_vec(),
            self.z[self.oy..self.og].to_vec(),
            self.z[self.og..self.ol].to_vec(),
            self.z[self.ol..].to_vec(),
        )
    }

    /// Φ(z) with frozen blocks zeroed.
    fn operator(&mut self, which: Which) {
        let (z, out) = match which {
            Which::Current => (&self.z, &mut self.f_z),
            Which::Half => (&self.z_half, &mut self.f_half),
        };
        let (oy, og, ol) = (self.oy, self.og, self.ol);
        let (x, y) = (&z[..oy], &z[oy..og]);
        let (gamma, lambda) = (&z[og..ol], &z[ol..]);
        let ex = self.exact;
        let (fx, rest) = out.split_at_mut(oy);
        let (fy, rest) = rest.split_at_mut(og - oy);
        let (fg, fl) = rest.split_at_mut(ol - og);
        if self.frozen != Frozen::MinSide {
            ex.grad_x(x, y, fx);
            if !gamma.is_empty() {
                ex.h_jacobian(x, &mut self.h_jac);
                self.h_jac.mul_vec_acc(gamma, 1.0, fx);
            }
            ex.h_value(x, fg);
            for v in fg.iter_mut() {
                *v = -*v;
            }
        } else {
            fx.fill(0.0);
            fg.fill(0.0);
        }
        if self.frozen != Frozen::MaxSide {
            ex.grad_y(x, y, fy);
            for v in fy.iter_mut() {
                *v = -*v;
            }
            if !lambda.is_empty() {
                ex.g_jacobian(y, &mut self.g_jac);
                self.g_jac.mul_vec_acc(lambda, 1.0, fy);
            }
            ex.g_value(y, fl);
            for v in fl.iter_mut() {
                *v = -*v;
            }
        } else {
            fy.fill(0.0);
            fl.fill(0.0);
        }
    }

    /// Unit-step natural residual at the current point; needs `f_z` fresh.
    fn natural_residual(&mut self) -> f64 {
        for i in 0..self.n {
            self.probe[i] = self.z[i] - self.f_z[i];
        }
        project(self.problem, self.oy, self.og, self.ol, &mut self.probe);
        let r: f64 = self
            .probe
            .iter()
            .zip(&self.z)
            .map(|(p, z)| (p - z) * (p - z))
            .sum();
        libm::sqrt(r)
    }

    fn feasibility(&self) -> f64 {
        let d = self.problem.dims;
        let mut h = vec![0.0; d.m1];
        let mut g = vec![0.0; d.m2];
        if self.frozen != Frozen::MinSide {
            self.exact.h_value(&self.z[..self.oy], &mut h);
        }
        if self.frozen != Frozen::MaxSide {
            self.exact.g_value(&self.z[self.oy..self.og], &mut g);
        }
        positive_part_norm(&h).max(positive_part_norm(&g))
    }

    /// Iterates until the residual and feasibility targets are met.
    fn run(&mut self, residual_tol: f64, feas_tol: f64, max_iterations: u64) -> Result<u64> {
        const SHRINK: f64 = 0.5;
        const GROW: f64 = 1.1;
        const SAFETY: f64 = 0.9;
        const CHECK_EVERY: u64 = 8;

        let (oy, og, ol) = (self.oy, self.og, self.ol);
        for k in 0..max_iterations {
            self.operator(Which::Current);
            if k % CHECK_EVERY == 0 {
                let r = self.natural_residual();
                self.last_residual = r;
                if !r.is_finite() {
                    return Err(Error::NonFinite {
                        iteration: k,
                        block: "reference",
                    });
                }
                if r <= residual_tol && self.feasibility() <= feas_tol {
                    return Ok(k);
                }
            }
            loop {
                for i in 0..self.n {
                    self.z_half[i] = self.z[i] - self.step * self.f_z[i];
                }
                project(self.problem, oy, og, ol, &mut self.z_half);
                self.operator(Which::Half);
                let mut df = 0.0;
                let mut dz = 0.0;
                for i in 0..self.n {
                    let a = self.f_z[i] - self.f_half[i];
                    let b = self.z[i] - self.z_half[i];
                    df += a * a;
                    dz += b * b;
                }
                if self.step * libm::sqrt(df) <= SAFETY * libm::sqrt(dz) || dz == 0.0 {
                    break;
                }
                self.step *= SHRINK;
                if self.step < 1e-300 {
                    return Err(Error::NonFinite {
                        iteration: k,
                        block: "reference step",
                    });
                }
            }
            for i in 0..self.n {
                self.z[i] -= self.step * self.f_half[i];
            }
            project(self.problem, oy, og, ol, &mut self.z);
            self.step *= GROW;
        }
        Err(Error::NotConverged {
            iterations: max_iterations,
            residual: self.last_residual,
            feasibility: self.feasibility(),
        })
    }
}

#[derive(Clone, Copy)]
enum Which {
    Current,
    Half,
}

fn project(problem: &ProblemInstance, oy: usize, og: usize, ol: usize, z: &mut [f64]) {
    let (x, rest) = z.split_at_mut(oy);
    let (y, rest) = rest.split_at_mut(og - oy);
    problem.proj_x.project_in_place(x);
    problem.proj_y.project_in_place(y);
    let _ = ol;
    for v in rest.iter_mut() {
        *v = v.max(0.0);
    }
}
